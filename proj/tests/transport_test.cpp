#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "fermiflow/dpp.hpp"
#include "fermiflow/transport.hpp"

namespace ff = fermiflow;
using ff::RMatrix;
using ff::RVector;

namespace {

RVector random_simplex(Eigen::Index k, ff::Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  RVector v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = e(rng);
  return v / v.sum();
}

ff::Distribution<int> as_distribution(const RVector& v) {
  ff::Distribution<int> d;
  for (Eigen::Index i = 0; i < v.size(); ++i) d[static_cast<int>(i)] = v(i);
  return d;
}

RMatrix line_cost(Eigen::Index k) {
  RMatrix c(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) c(i, j) = static_cast<double>(std::abs(i - j));
  return c;
}

void expect_valid_plan(const ff::TransportResult& r, const RVector& p, const RVector& q,
                       const RMatrix& c) {
  RVector rows = RVector::Zero(p.size());
  RVector cols = RVector::Zero(q.size());
  double cost = 0.0;
  for (const auto& e : r.plan) {
    EXPECT_GT(e.mass, 0.0);
    rows(e.row) += e.mass;
    cols(e.col) += e.mass;
    cost += e.mass * c(e.row, e.col);
  }
  EXPECT_LE((rows - p).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((cols - q).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(cost, r.cost, 1e-12);
  EXPECT_NEAR(r.dual_value, r.cost, 1e-9);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    for (Eigen::Index j = 0; j < q.size(); ++j)
      EXPECT_LE(r.row_potential(i) + r.col_potential(j), c(i, j) + 1e-9);
}

}  // namespace

TEST(TotalVariation, Examples) {
  const ff::Distribution<int> p{{0, 0.75}, {1, 0.25}};
  const ff::Distribution<int> q{{0, 0.25}, {1, 0.75}};
  EXPECT_DOUBLE_EQ(ff::total_variation(p, p), 0.0);
  EXPECT_DOUBLE_EQ(ff::total_variation(p, q), 0.5);
  EXPECT_DOUBLE_EQ(ff::total_variation(p, ff::Distribution<int>{{7, 1.0}}), 1.0);
  EXPECT_THROW(ff::total_variation(p, ff::Distribution<int>{{0, -0.1}}), ff::DomainError);
}

TEST(TotalVariation, ThreeFormsAgree) {
  ff::Rng rng = ff::make_rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = as_distribution(random_simplex(6, rng));
    const auto q = as_distribution(random_simplex(6, rng));
    const double tv = ff::total_variation(p, q);
    EXPECT_NEAR(ff::total_variation_sup(p, q), tv, 1e-12);
    EXPECT_NEAR(ff::ot_cost(p, q, ff::trivial_cost<int>).result.cost, tv, 1e-10);
  }
}

TEST(OtCost, Examples) {
  const RVector p = RVector::Constant(3, 1.0 / 3.0);
  EXPECT_EQ(ff::ot_cost(p, p, ff::CostMatrix(RMatrix::Zero(3, 3))).cost, 0.0);
  RVector dx(1);
  dx << 1.0;
  RMatrix c(1, 1);
  c << 2.5;
  EXPECT_DOUBLE_EQ(ff::ot_cost(dx, dx, ff::CostMatrix(c)).cost, 2.5);
}

TEST(OtCost, Errors) {
  const RVector p = RVector::Constant(2, 0.5);
  const RVector q = RVector::Constant(2, 0.6);
  EXPECT_THROW(ff::ot_cost(p, q, ff::CostMatrix(RMatrix::Zero(2, 2))), ff::DomainError);
  EXPECT_THROW(ff::ot_cost(p, p, ff::CostMatrix(RMatrix::Zero(2, 3))), ff::DimensionError);
  EXPECT_THROW(ff::CostMatrix(RMatrix::Constant(2, 2, -1.0)), ff::DomainError);
  const RVector big = RVector::Constant(2001, 1.0 / 2001.0);
  EXPECT_THROW(ff::ot_cost(big, big, ff::CostMatrix(RMatrix::Zero(2001, 2001))),
               ff::CapExceededError);
}

TEST(OtCost, LineCostMatchesCdfFormula) {
  ff::Rng rng = ff::make_rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index k = 2 + trial % 9;
    const RVector p = random_simplex(k, rng);
    const RVector q = random_simplex(k, rng);
    double oracle = 0.0;
    double fp = 0.0;
    double fq = 0.0;
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      fp += p(i);
      fq += q(i);
      oracle += std::abs(fp - fq);
    }
    const RMatrix c = line_cost(k);
    const auto r = ff::ot_cost(p, q, ff::CostMatrix(c));
    EXPECT_NEAR(r.cost, oracle, 1e-10);
    expect_valid_plan(r, p, q, c);
  }
}

TEST(OtCost, UniformMarginalsMatchBestPermutation) {
  ff::Rng rng = ff::make_rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index k = 1 + trial % 6;
    RMatrix c(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) c(i, j) = u(rng);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) s += c(i, perm[static_cast<std::size_t>(i)]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const RVector p = RVector::Constant(k, 1.0 / static_cast<double>(k));
    const auto r = ff::ot_cost(p, p, ff::CostMatrix(c));
    EXPECT_NEAR(r.cost, best / static_cast<double>(k), 1e-10);
    expect_valid_plan(r, p, p, c);
  }
}

TEST(OtCost, Deterministic) {
  ff::Rng rng = ff::make_rng(4);
  const RVector p = random_simplex(8, rng);
  const RVector q = random_simplex(8, rng);
  const RMatrix c = RMatrix::Ones(8, 8) - RMatrix::Identity(8, 8);
  const auto a = ff::ot_cost(p, q, ff::CostMatrix(c));
  const auto b = ff::ot_cost(p, q, ff::CostMatrix(c));
  ASSERT_EQ(a.plan.size(), b.plan.size());
  for (std::size_t i = 0; i < a.plan.size(); ++i) {
    EXPECT_EQ(a.plan[i].row, b.plan[i].row);
    EXPECT_EQ(a.plan[i].col, b.plan[i].col);
    EXPECT_EQ(a.plan[i].mass, b.plan[i].mass);
  }
  EXPECT_TRUE(std::is_sorted(a.plan.begin(), a.plan.end(), [](const auto& x, const auto& y) {
    return std::tie(x.row, x.col) < std::tie(y.row, y.col);
  }));
}

TEST(OtCost, TriangleInequalityForHamming) {
  ff::Rng rng = ff::make_rng(5);
  std::vector<std::vector<int>> tuples;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) tuples.push_back({a, b});
  auto law = [&] {
    const RVector v = random_simplex(static_cast<Eigen::Index>(tuples.size()), rng);
    ff::Distribution<std::vector<int>> d;
    for (std::size_t i = 0; i < tuples.size(); ++i) d[tuples[i]] = v(static_cast<Eigen::Index>(i));
    return d;
  };
  const auto h = ff::hamming_cost<std::vector<int>>;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = law();
    const auto q = law();
    const auto r = law();
    EXPECT_LE(ff::ot_cost(p, r, h).result.cost,
              ff::ot_cost(p, q, h).result.cost + ff::ot_cost(q, r, h).result.cost + 1e-10);
  }
}

TEST(HammingCost, Examples) {
  EXPECT_EQ(ff::hamming_cost(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3}), 0);
  EXPECT_EQ(ff::hamming_cost(std::vector<int>{1, 2, 3}, std::vector<int>{4, 5, 6}), 3);
  EXPECT_EQ(ff::hamming_cost(std::vector<int>{1, 2, 3}, std::vector<int>{1, 0, 3}), 1);
  EXPECT_THROW(ff::hamming_cost(std::vector<int>{1}, std::vector<int>{1, 2}), ff::DimensionError);
}

TEST(SymmetricDifferenceCost, Examples) {
  const ff::PointConfiguration a({1, 4, 2});
  EXPECT_EQ(ff::symmetric_difference_cost(a, a), 0);
  EXPECT_EQ(ff::symmetric_difference_cost(a, ff::PointConfiguration({5, 6, 7})), 6);
  EXPECT_EQ(ff::symmetric_difference_cost(a, ff::PointConfiguration({1, 2, 5})), 2);
  EXPECT_EQ(ff::symmetric_difference_cost(a, ff::PointConfiguration(std::vector<int>{})), 3);
}

TEST(SymmetricDifferenceCost, RawCountExceedsHamming) {
  // Two disjoint pairs: every coordinate differs once, yet each point of
  // either set is unmatched.
  const std::vector<int> x = {1, 2};
  const std::vector<int> y = {3, 4};
  const ff::PointConfiguration a(x);
  const ff::PointConfiguration b(y);
  EXPECT_EQ(ff::symmetric_difference_cost(a, b), 4);
  EXPECT_EQ(ff::hamming_cost(x, y), 2);
  EXPECT_DOUBLE_EQ(ff::wsharp_cost(a, b), 2.0);
}

TEST(SymmetricDifferenceCost, HalfCountIsDominatedByHamming) {
  ff::Rng rng = ff::make_rng(6);
  std::uniform_int_distribution<int> pick(0, 7);
  int strict_violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<int> x;
    std::vector<int> y;
    while (static_cast<int>(x.size()) < n) {
      const int v = pick(rng);
      if (std::find(x.begin(), x.end(), v) == x.end()) x.push_back(v);
    }
    while (static_cast<int>(y.size()) < n) {
      const int v = pick(rng);
      if (std::find(y.begin(), y.end(), v) == y.end()) y.push_back(v);
    }
    const ff::PointConfiguration a(x);
    const ff::PointConfiguration b(y);
    EXPECT_LE(ff::wsharp_cost(a, b), ff::hamming_cost(x, y));
    strict_violations += ff::symmetric_difference_cost(a, b) > ff::hamming_cost(x, y) ? 1 : 0;
  }
  EXPECT_GT(strict_violations, 0);
}

TEST(SymmetricDifferenceCost, ForgettingOrderContractsLaws) {
  ff::Rng rng = ff::make_rng(7);
  std::vector<std::vector<int>> tuples;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      if (a != b) tuples.push_back({a, b});
  auto law = [&] {
    const RVector v = random_simplex(static_cast<Eigen::Index>(tuples.size()), rng);
    ff::Distribution<std::vector<int>> d;
    for (std::size_t i = 0; i < tuples.size(); ++i) d[tuples[i]] = v(static_cast<Eigen::Index>(i));
    return d;
  };
  auto forget = [](const ff::Distribution<std::vector<int>>& d) {
    ff::Distribution<ff::PointConfiguration> out;
    for (const auto& [t, m] : d) out[ff::PointConfiguration(t)] += m;
    return out;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = law();
    const auto q = law();
    const double hamming = ff::ot_cost(p, q, ff::hamming_cost<std::vector<int>>).result.cost;
    const double wsharp = ff::ot_cost(forget(p), forget(q), ff::wsharp_cost).result.cost;
    EXPECT_LE(wsharp, hamming + 1e-10);
  }
  const ff::Distribution<std::vector<int>> p{{{1, 2}, 1.0}};
  const ff::Distribution<std::vector<int>> q{{{3, 4}, 1.0}};
  const auto raw = [](const ff::PointConfiguration& a, const ff::PointConfiguration& b) {
    return ff::symmetric_difference_cost(a, b);
  };
  EXPECT_GT(ff::ot_cost(forget(p), forget(q), raw).result.cost,
            ff::ot_cost(p, q, ff::hamming_cost<std::vector<int>>).result.cost);
}
