#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "fermiflow/dpp.hpp"

namespace ff = fermiflow;
using ff::GroundSpace;
using ff::PointConfiguration;

namespace {

ff::OrthonormalFamily walsh_pair(int first, int second) {
  const auto wf = ff::walsh_family(2);
  return {wf.space, std::vector<ff::GroundFunction>{wf.functions[static_cast<std::size_t>(first)],
                                                    wf.functions[static_cast<std::size_t>(second)]}};
}

GroundSpace weighted_space(std::size_t size) {
  std::vector<std::string> labels;
  std::vector<double> weights;
  for (std::size_t i = 0; i < size; ++i) {
    labels.push_back("p" + std::to_string(i));
    weights.push_back(0.5 + 0.2 * static_cast<double>(i));
  }
  return {labels, weights};
}

std::vector<PointConfiguration> draw(const ff::OrthonormalFamily& a, std::size_t samples,
                                     std::uint64_t seed) {
  ff::Rng rng = ff::make_rng(seed);
  std::vector<PointConfiguration> out;
  for (std::size_t i = 0; i < samples; ++i) out.push_back(ff::sample_projection_dpp(a, rng));
  return out;
}

// Probability that every point of `pts` lies in the configuration.
double inclusion_from_law(const ff::Distribution<PointConfiguration>& law,
                          const std::vector<Eigen::Index>& pts) {
  double acc = 0.0;
  for (const auto& [cfg, p] : law) {
    bool all = true;
    for (auto x : pts) all = all && cfg.contains(static_cast<int>(x));
    if (all) acc += p;
  }
  return acc;
}

// Poisson-binomial law of the number of successes.
std::vector<double> poisson_binomial(const std::vector<double>& lam) {
  std::vector<double> p{1.0};
  for (double l : lam) {
    std::vector<double> next(p.size() + 1, 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      next[k] += p[k] * (1.0 - l);
      next[k + 1] += p[k] * l;
    }
    p = next;
  }
  return p;
}

}  // namespace

TEST(PointConfiguration, SortedAndDistinct) {
  const PointConfiguration c({5, 1, 3});
  EXPECT_EQ(c.points(), (std::vector<int>{1, 3, 5}));
  EXPECT_TRUE(c.contains(3));
  EXPECT_FALSE(c.contains(2));
  EXPECT_THROW(PointConfiguration({1, 2, 1}), ff::DomainError);
}

TEST(CorrelationFunction, Examples) {
  const auto a = ff::random_orthonormal(weighted_space(5), 2, 4);
  const auto k = ff::projection_kernel(a);
  EXPECT_NEAR(ff::correlation_function(k, {3}), k.matrix(3, 3).real(), 1e-15);
  EXPECT_NEAR(ff::correlation_function(k, {0, 2, 4}), 0.0, 1e-10);
  EXPECT_THROW(ff::correlation_function(k, {1, 1}), ff::DomainError);
  EXPECT_THROW(ff::correlation_function(k, {7}), ff::DimensionError);
}

TEST(CorrelationFunction, WalshOppositeHalves) {
  const auto k = ff::projection_kernel(walsh_pair(0, 1));
  EXPECT_NEAR(ff::correlation_function(k, {0, 2}), 4.0, 1e-12);
  EXPECT_NEAR(ff::inclusion_probability(k, {0, 2}), 0.25, 1e-12);
  EXPECT_NEAR(ff::correlation_function(k, {0, 1}), 0.0, 1e-12);
}

TEST(ExpectedCount, Examples) {
  const auto a = ff::random_orthonormal(weighted_space(6), 3, 5);
  const auto k = ff::projection_kernel(a);
  EXPECT_NEAR(ff::expected_count(k, {0, 1, 2, 3, 4, 5}), 3.0, 1e-10);
  EXPECT_EQ(ff::expected_count(k, {}), 0.0);
  EXPECT_NEAR(ff::expected_count(ff::projection_kernel(walsh_pair(0, 1)), {0, 1}), 1.0, 1e-12);
}

TEST(CountCovariance, WalshValues) {
  const auto k = ff::projection_kernel(walsh_pair(0, 1));
  const auto k2 = ff::projection_kernel(walsh_pair(0, 2));
  EXPECT_NEAR(ff::count_covariance(k, {0}, {1}), -0.25, 1e-12);
  EXPECT_NEAR(ff::count_covariance(k2, {0}, {1}), 0.0, 1e-12);
  EXPECT_EQ(ff::count_covariance(k, {}, {1}), 0.0);
  EXPECT_THROW(ff::count_covariance(k, {0, 1}, {1}), ff::DomainError);
}

TEST(CountCovariance, NonPositiveAndEqualToKernelSquares) {
  const GroundSpace s = weighted_space(6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto k = ff::projection_kernel(ff::random_orthonormal(s, 3, seed));
    const std::vector<Eigen::Index> a = {0, 1};
    const std::vector<Eigen::Index> b = {2, 4, 5};
    double oracle = 0.0;
    for (auto x : a)
      for (auto y : b)
        oracle -= std::norm(k.matrix(x, y)) * s.weight(static_cast<std::size_t>(x)) *
                  s.weight(static_cast<std::size_t>(y));
    const double cov = ff::count_covariance(k, a, b);
    EXPECT_LE(cov, 1e-12);
    EXPECT_NEAR(cov, oracle, 1e-12);
  }
}

TEST(BruteForce, MassAndDiagonal) {
  const auto a = ff::random_orthonormal(weighted_space(5), 3, 6);
  const auto r = ff::brute_force_measurement(a);
  EXPECT_NEAR(r.total_mass, 1.0, 1e-10);
  EXPECT_LE(r.diagonal_mass, 1e-20);
  double sum = 0.0;
  for (const auto& [cfg, p] : r.configurations.probs) {
    EXPECT_EQ(cfg.size(), 3U);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-10);
  EXPECT_THROW(ff::brute_force_measurement(ff::random_orthonormal(GroundSpace::uniform(40), 4, 1)),
               ff::CapExceededError);
}

TEST(BruteForce, InclusionMatchesKernelMinors) {
  const GroundSpace s = weighted_space(6);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = ff::random_orthonormal(s, 3, seed);
    const auto k = ff::projection_kernel(a);
    const auto law = ff::brute_force_configuration_distribution(a).probs;
    for (const std::vector<Eigen::Index>& pts :
         {std::vector<Eigen::Index>{2}, {0, 5}, {1, 3}, {0, 2, 4}, {1, 2, 3, 4}}) {
      EXPECT_NEAR(inclusion_from_law(law, pts), ff::inclusion_probability(k, pts), 1e-9);
    }
  }
}

TEST(BruteForce, OrderedLawIsExchangeable) {
  const auto a = ff::random_orthonormal(weighted_space(5), 3, 7);
  const auto ordered = ff::brute_force_measurement(a).ordered;
  for (const auto& [t, p] : ordered) {
    std::vector<int> perm = t;
    while (std::next_permutation(perm.begin(), perm.end())) {
      EXPECT_NEAR(ordered.at(perm), p, 1e-14);
    }
  }
}

TEST(BruteForce, PermutationSumIdentity) {
  ff::Rng rng = ff::make_rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 3;
    const std::size_t size = 4 + static_cast<std::size_t>(trial % 3);
    const auto a = ff::random_orthonormal(weighted_space(size), n, static_cast<std::uint64_t>(trial));
    std::vector<Eigen::Index> all(size);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    const auto m = static_cast<std::ptrdiff_t>(1 + trial % 3);
    const std::vector<Eigen::Index> pts(all.begin(), all.begin() + m);
    EXPECT_NEAR(ff::permutation_sum_correlation(a, pts),
                ff::correlation_function(ff::projection_kernel(a), pts), 1e-9);
  }
}

TEST(SampleProjection, FullFrameGivesWholeSet) {
  const auto a = ff::random_orthonormal(weighted_space(4), 4, 9);
  for (const auto& c : draw(a, 20, 1)) EXPECT_EQ(c.points(), (std::vector<int>{0, 1, 2, 3}));
}

TEST(SampleProjection, CardinalityAndDeterminism) {
  const auto a = ff::random_orthonormal(weighted_space(7), 3, 10);
  const auto s1 = draw(a, 200, 2);
  EXPECT_EQ(s1, draw(a, 200, 2));
  for (const auto& c : s1) EXPECT_EQ(c.size(), 3U);
}

TEST(SampleProjection, OnePointCountsWithinFourStandardErrors) {
  const auto a = ff::random_orthonormal(weighted_space(6), 2, 11);
  const auto k = ff::projection_kernel(a);
  const std::size_t samples = 50000;
  const auto s = draw(a, samples, 3);
  for (int x = 0; x < 6; ++x) {
    const double p = ff::inclusion_probability(k, {x});
    std::size_t hits = 0;
    for (const auto& c : s) hits += c.contains(x) ? 1 : 0;
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(samples), p, 4.0 * se) << x;
  }
}

TEST(SampleProjection, EmpiricalLawCloseToOracle) {
  const auto a = ff::random_orthonormal(weighted_space(6), 2, 12);
  const std::size_t samples = 50000;
  const auto emp = ff::empirical_distribution(draw(a, samples, 4), 4);
  const auto exact = ff::brute_force_configuration_distribution(a);
  EXPECT_EQ(emp.kind, ff::DistributionKind::Empirical);
  EXPECT_EQ(emp.sample_count, samples);
  EXPECT_LE(ff::total_variation(emp.probs, exact.probs),
            3.0 * std::sqrt(static_cast<double>(exact.probs.size()) / static_cast<double>(samples)));
}

TEST(MixedDistribution, OnesAndZeros) {
  const auto a = ff::random_orthonormal(weighted_space(5), 2, 13);
  const auto ones = ff::mixed_dpp_distribution(ff::MixedKernelSpec::projection(a));
  EXPECT_LE(ff::total_variation(ones.probs, ff::brute_force_configuration_distribution(a).probs), 1e-12);
  const auto zeros = ff::mixed_dpp_distribution(ff::MixedKernelSpec(a, {0.0, 0.0}));
  ASSERT_EQ(zeros.probs.size(), 1U);
  EXPECT_TRUE(zeros.probs.begin()->first.empty());
  EXPECT_THROW(ff::MixedKernelSpec(a, {0.5, 1.5}), ff::DomainError);
  EXPECT_THROW(ff::MixedKernelSpec(a, {0.5}), ff::DimensionError);
}

TEST(MixedDistribution, IsDeterminantalWithWeightedKernel) {
  const auto a = ff::random_orthonormal(weighted_space(5), 3, 14);
  const ff::MixedKernelSpec spec(a, {0.9, 0.4, 0.15});
  const auto law = ff::mixed_dpp_distribution(spec).probs;
  const auto k = spec.kernel();
  double total = 0.0;
  for (const auto& [cfg, p] : law) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (const std::vector<Eigen::Index>& pts :
       {std::vector<Eigen::Index>{0}, {4}, {1, 2}, {0, 3}, {0, 2, 4}}) {
    EXPECT_NEAR(inclusion_from_law(law, pts), ff::inclusion_probability(k, pts), 1e-10);
  }
}

TEST(SampleMixed, Extremes) {
  const auto a = ff::random_orthonormal(weighted_space(5), 2, 15);
  ff::Rng rng = ff::make_rng(5);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(ff::sample_mixed_dpp(ff::MixedKernelSpec(a, {0.0, 0.0}), rng).empty());
    EXPECT_EQ(ff::sample_mixed_dpp(ff::MixedKernelSpec::projection(a), rng).size(), 2U);
  }
}

TEST(SampleMixed, CardinalityIsPoissonBinomial) {
  const auto a = ff::random_orthonormal(weighted_space(6), 4, 16);
  const std::vector<double> lam = {0.8, 0.5, 0.3, 0.1};
  const ff::MixedKernelSpec spec(a, lam);
  const auto expected = poisson_binomial(lam);
  std::vector<double> counts(expected.size(), 0.0);
  ff::Rng rng = ff::make_rng(6);
  const double samples = 50000;
  for (int i = 0; i < static_cast<int>(samples); ++i) counts[ff::sample_mixed_dpp(spec, rng).size()] += 1.0;
  double chi2 = 0.0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const double e = samples * expected[k];
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(expected.size() - 1));
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01) << chi2;
}

TEST(CoupledSampler, IdenticalSpecsShareIndices) {
  const auto a = ff::random_orthonormal(weighted_space(5), 3, 17);
  const ff::MixedKernelSpec spec(a, {0.7, 0.5, 0.2});
  ff::CoupledSampler sampler(spec, spec);
  ff::Rng rng = ff::make_rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto d = sampler.draw(rng);
    EXPECT_EQ(d.first_indices, d.second_indices);
    EXPECT_EQ(d.first, d.second);
    EXPECT_TRUE(d.exact_coupling);
  }
}

TEST(CoupledSampler, IndexMismatchRateIsLambdaGap) {
  const auto a = ff::random_orthonormal(weighted_space(5), 3, 18);
  const ff::MixedKernelSpec first(a, {0.7, 0.5, 0.2});
  const ff::MixedKernelSpec second(a, {0.7, 0.2, 0.2});
  ff::CoupledSampler sampler(first, second);
  ff::Rng rng = ff::make_rng(8);
  const int samples = 40000;
  int mismatch = 0;
  for (int i = 0; i < samples; ++i) {
    const auto d = sampler.draw(rng);
    mismatch += d.first_indices != d.second_indices ? 1 : 0;
  }
  const double p = 0.3;
  EXPECT_NEAR(mismatch / static_cast<double>(samples), p, 4.0 * std::sqrt(p * (1 - p) / samples));
}

TEST(CoupledSampler, MarginalsAreTheMixedLaws) {
  const ff::GroundSpace s = weighted_space(5);
  const ff::MixedKernelSpec first(ff::random_orthonormal(s, 2, 19, 0), {0.9, 0.6});
  const ff::MixedKernelSpec second(ff::random_orthonormal(s, 2, 19, 1), {0.8, 0.6});
  for (auto mode : {ff::PairCoupling::Wsharp, ff::PairCoupling::TotalVariation,
                    ff::PairCoupling::Independent}) {
    ff::CoupledSampler sampler(first, second, mode);
    ff::Rng rng = ff::make_rng(9);
    std::vector<PointConfiguration> xs;
    std::vector<PointConfiguration> ys;
    const std::size_t samples = 40000;
    for (std::size_t i = 0; i < samples; ++i) {
      auto d = sampler.draw(rng);
      xs.push_back(d.first);
      ys.push_back(d.second);
    }
    const double envelope = 3.0 * std::sqrt(16.0 / static_cast<double>(samples));
    EXPECT_LE(ff::total_variation(ff::empirical_distribution(xs, 9).probs,
                                  ff::mixed_dpp_distribution(first).probs),
              envelope);
    EXPECT_LE(ff::total_variation(ff::empirical_distribution(ys, 9).probs,
                                  ff::mixed_dpp_distribution(second).probs),
              envelope);
  }
}

TEST(CoupledSampler, TotalVariationModeIsMaximalOnEqualIndices) {
  const ff::GroundSpace s = weighted_space(5);
  const auto a = ff::random_orthonormal(s, 2, 20, 0);
  const auto b = ff::random_orthonormal(s, 2, 20, 1);
  ff::CoupledSampler sampler(ff::MixedKernelSpec::projection(a), ff::MixedKernelSpec::projection(b),
                             ff::PairCoupling::TotalVariation);
  ff::Rng rng = ff::make_rng(10);
  const int samples = 40000;
  int differ = 0;
  for (int i = 0; i < samples; ++i) {
    const auto d = sampler.draw(rng);
    differ += d.first != d.second ? 1 : 0;
  }
  const double tv = ff::total_variation(ff::brute_force_configuration_distribution(a).probs,
                                        ff::brute_force_configuration_distribution(b).probs);
  EXPECT_NEAR(differ / static_cast<double>(samples), tv, 4.0 * std::sqrt(tv * (1 - tv) / samples));
}

TEST(CoupledSampler, FallsBackToIndependenceAboveCap) {
  const auto a = ff::random_orthonormal(weighted_space(5), 2, 21);
  ff::CoupledSampler sampler(ff::MixedKernelSpec::projection(a), ff::MixedKernelSpec::projection(a),
                             ff::PairCoupling::Wsharp, 10.0);
  ff::Rng rng = ff::make_rng(11);
  EXPECT_FALSE(sampler.draw(rng).exact_coupling);
}
