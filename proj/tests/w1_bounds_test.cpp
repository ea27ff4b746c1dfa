#include <cmath>

#include <gtest/gtest.h>

#include "fermiflow/w1_bounds.hpp"

namespace ff = fermiflow;
using ff::CMatrix;
using ff::Complex;

namespace {

ff::OverlapMatrix random_contraction(Eigen::Index n, ff::Rng& rng) {
  // Top-left block of a Haar unitary on twice the size.
  const CMatrix u = ff::haar_unitary(2 * n, rng);
  return ff::OverlapMatrix(u.topLeftCorner(n, n));
}

ff::OverlapMatrix diag_overlap(const std::vector<double>& d) {
  const auto n = static_cast<Eigen::Index>(d.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
  return ff::OverlapMatrix(m);
}

}  // namespace

TEST(StabilizerMaxOverlap, Identity) {
  EXPECT_NEAR(ff::stabilizer_max_overlap(ff::OverlapMatrix(CMatrix::Identity(4, 4))), 1.0, 1e-14);
}

TEST(StabilizerMaxOverlap, PermutationWithPhases) {
  CMatrix p = CMatrix::Zero(3, 3);
  p(0, 2) = Complex(0, 1);
  p(1, 0) = -1.0;
  p(2, 1) = std::polar(1.0, 0.3);
  const ff::OverlapMatrix m(p);
  EXPECT_NEAR(ff::stabilizer_max_overlap(m), 1.0, 1e-14);
  // Without the stabilizer the plain mean overlap vanishes.
  EXPECT_EQ(std::abs(p.trace()), 0.0);
}

TEST(StabilizerMaxOverlap, GeometricDiagonal) {
  std::vector<double> d;
  double eps_sum = 0.0;
  for (int i = 1; i <= 20; ++i) {
    d.push_back(1.0 - std::ldexp(1.0, -i));
    eps_sum += std::ldexp(1.0, -i);
  }
  const double s = ff::stabilizer_max_overlap(diag_overlap(d));
  EXPECT_NEAR(s, 1.0 - eps_sum / 20.0, 1e-14);
  EXPECT_NEAR(s, 0.95, 1e-6);
}

TEST(StabilizerMaxOverlap, AscentOracleAgrees) {
  ff::Rng rng = ff::make_rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    const auto m = random_contraction(n, rng);
    const double closed = ff::stabilizer_max_overlap(m);
    EXPECT_NEAR(ff::alternating_unitary_ascent(m, rng).value, closed, 1e-8) << "trial " << trial;
    EXPECT_LE(ff::random_unitary_probe(m, rng, 50), closed + 1e-12);
  }
}

TEST(StabilizerMaxOverlap, ProbeApproachesValueForSingleParticle) {
  ff::Rng rng = ff::make_rng(5);
  CMatrix c(1, 1);
  c(0, 0) = std::polar(0.7, 1.1);
  EXPECT_NEAR(ff::random_unitary_probe(ff::OverlapMatrix(c), rng, 3), 0.7, 1e-14);
}

TEST(StabilizerMaxOverlap, UnitaryInvariance) {
  ff::Rng rng = ff::make_rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_contraction(4, rng);
    const CMatrix a = ff::haar_unitary(4, rng);
    const CMatrix b = ff::haar_unitary(4, rng);
    const ff::OverlapMatrix moved(a.adjoint() * m.entries() * b);
    EXPECT_NEAR(ff::stabilizer_max_overlap(moved), ff::stabilizer_max_overlap(m), 1e-10);
  }
}

TEST(W1UpperSlater, Examples) {
  EXPECT_NEAR(ff::w1_upper_slater(ff::OverlapMatrix(CMatrix::Identity(3, 3))), 0.0, 1e-7);
  EXPECT_DOUBLE_EQ(ff::w1_upper_slater(ff::OverlapMatrix(CMatrix::Zero(3, 3))), 3.0);
  CMatrix c(1, 1);
  c(0, 0) = Complex(0.36, 0.48);
  const ff::OverlapMatrix m(c);
  EXPECT_NEAR(ff::w1_upper_slater(m), 0.8, 1e-14);
  EXPECT_NEAR(ff::w1_upper_slater(m), ff::trace_distance_slater(m), 1e-14);
}

TEST(W1UpperSlater, ChainOnRandomContractions) {
  ff::Rng rng = ff::make_rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    const auto m = random_contraction(n, rng);
    const double t = ff::trace_distance_slater(m);
    const double w = ff::w1_upper_slater(m);
    EXPECT_LE(t, w + 1e-9);
    EXPECT_LE(w, static_cast<double>(n) * t + 1e-9);
  }
}

TEST(SlaterBoundsReport, IdenticalFamilies) {
  const auto a = ff::random_orthonormal(ff::GroundSpace::uniform(6), 3, 1);
  const auto r = ff::slater_bounds_report(a, a);
  EXPECT_NEAR(r.trace_distance, 0.0, 1e-7);
  EXPECT_NEAR(r.w1_upper, 0.0, 1e-7);
  EXPECT_NEAR(r.n_times_trace, 0.0, 1e-6);
  EXPECT_EQ(r.n, 3);
  ASSERT_EQ(r.singular_values.size(), 3U);
  for (double s : r.singular_values) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(SlaterBoundsReport, InSpanRecombination) {
  ff::Rng rng = ff::make_rng(4);
  const auto a = ff::random_orthonormal(ff::GroundSpace::uniform(6), 3, 2);
  const auto r = ff::slater_bounds_report(a, a.recombined(ff::haar_unitary(3, rng)));
  EXPECT_NEAR(r.trace_distance, 0.0, 1e-7);
  EXPECT_NEAR(r.w1_upper, 0.0, 1e-7);
  EXPECT_NEAR(r.stabilizer_overlap, 1.0, 1e-12);
}

TEST(SlaterBoundsReport, HaarChainOverSeeds) {
  const ff::GroundSpace s = ff::GroundSpace::uniform(6);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = ff::slater_bounds_report(ff::random_orthonormal(s, 3, seed, 0),
                                            ff::random_orthonormal(s, 3, seed, 1));
    EXPECT_LE(r.trace_distance, r.w1_upper + 1e-9);
    EXPECT_LE(r.w1_upper, r.n_times_trace + 1e-9);
  }
}

TEST(EpsRule, Parsing) {
  EXPECT_DOUBLE_EQ(ff::EpsRule::parse("geometric:0.5").eps(3), 0.125);
  EXPECT_DOUBLE_EQ(ff::EpsRule::parse("power:2").eps(4), 1.0 / 16.0);
  EXPECT_THROW(ff::EpsRule::parse("geometric:1.5"), ff::DomainError);
  EXPECT_THROW(ff::EpsRule::parse("power:1"), ff::DomainError);
  EXPECT_THROW(ff::EpsRule::parse("linear:0.1"), ff::DomainError);
}

TEST(ExampleGapTable, Columns) {
  const auto rows = ff::example_gap_table(20, ff::EpsRule::geometric(0.5));
  ASSERT_EQ(rows.size(), 20U);
  double prod = 1.0;
  double eps_sum = 0.0;
  double prev_det = 1.0;
  for (const auto& row : rows) {
    const double eps = std::ldexp(1.0, -row.n);
    prod *= 1.0 - eps;
    eps_sum += eps;
    EXPECT_NEAR(row.determinant, prod, 1e-12) << row.n;
    EXPECT_LE(row.determinant, prev_det);
    EXPECT_GT(row.determinant, 0.28878);
    EXPECT_NEAR(row.mean_overlap, 1.0 - eps_sum / row.n, 1e-12) << row.n;
    EXPECT_NEAR(row.stabilizer_overlap, row.mean_overlap, 1e-12) << row.n;
    EXPECT_NEAR(row.trace_distance, std::sqrt(1.0 - prod * prod), 1e-9) << row.n;
    prev_det = row.determinant;
  }
  EXPECT_NEAR(rows[0].trace_distance, rows[0].w1_upper_over_n, 1e-12);
  EXPECT_NEAR(rows.back().w1_upper_over_n, std::sqrt(1.0 - 0.95 * 0.95), 1e-4);
  EXPECT_NEAR(rows.back().trace_distance, 0.9574, 1e-4);
}
