#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "fermiflow/dpp.hpp"
#include "fermiflow/ground_space.hpp"
#include "fermiflow/random.hpp"
#include "fermiflow/slater.hpp"

namespace fermiflow {

/// Brute-force measurement law vs kernel minors for one family.
struct LemmaCheck {
  double max_minor_error = 0.0;  // max_S |P(S in X) - det(K_S) prod mu|
  double diagonal_mass = 0.0;
  double total_mass_error = 0.0;  // |total mass - 1|
  std::size_t minors_checked = 0;
};

/// Perturbs the off-diagonal of K; the negative control for lemma_check.
inline Kernel corrupt_kernel(Kernel k, double factor = 0.9) {
  for (Eigen::Index i = 0; i < k.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.matrix.cols(); ++j) {
      if (i != j) {
        k.matrix(i, j) *= factor;
      }
    }
  }
  return k;
}

/// Compares inclusion probabilities P(S subset of X) of the enumerated law
/// with det(K_S) prod_{x in S} mu(x) for every S with 1 <= |S| <= n + 1
/// (the last size must give 0).
inline LemmaCheck lemma_check(const OrthonormalFamily& a, double cap = kEnumerationCap,
                              bool corrupt = false) {
  const BruteForceResult bf = brute_force_measurement(a, cap);
  const Kernel k = corrupt ? corrupt_kernel(projection_kernel(a)) : Kernel(projection_kernel(a));
  LemmaCheck out;
  out.diagonal_mass = bf.diagonal_mass;
  out.total_mass_error = std::abs(bf.total_mass - 1.0);
  const Eigen::Index d = a.space().dim();
  if (static_cast<std::size_t>(d) > kMaxIndices) {
    throw CapExceededError("inclusion subsets over ground points", static_cast<double>(d),
                           static_cast<double>(kMaxIndices));
  }
  const Eigen::Index m_max = std::min(d, a.size() + 1);
  for (IndexMask s = 1; s < (IndexMask{1} << d); ++s) {
    const auto pts = mask_indices(s, static_cast<std::size_t>(d));
    if (static_cast<Eigen::Index>(pts.size()) > m_max) {
      continue;
    }
    double p = 0.0;
    for (const auto& [cfg, prob] : bf.configurations.probs) {
      bool all = true;
      for (Eigen::Index x : pts) {
        all = all && cfg.contains(static_cast<int>(x));
      }
      if (all) {
        p += prob;
      }
    }
    out.max_minor_error =
        std::max(out.max_minor_error, std::abs(p - inclusion_probability(k, pts)));
    ++out.minors_checked;
  }
  return out;
}

struct SamplerCheck {
  std::size_t samples = 0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double max_abs_z = 0.0;  // one-point counts vs K(x,x) mu(x), in standard errors
  bool wrong_cardinality = false;
};

/// Draws `samples` configurations and tests them against the enumerated law
/// (Pearson chi-square; configurations expected fewer than 5 times are pooled)
/// and against the one-point intensities.
inline SamplerCheck sampler_check(const OrthonormalFamily& a, std::size_t samples, Rng& rng,
                                  double cap = kEnumerationCap) {
  const auto law = brute_force_configuration_distribution(a, cap).probs;
  std::map<PointConfiguration, std::size_t> counts;
  std::vector<std::size_t> point_counts(static_cast<std::size_t>(a.space().dim()), 0);
  SamplerCheck out;
  out.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    const PointConfiguration c = sample_projection_dpp(a, rng);
    if (static_cast<Eigen::Index>(c.size()) != a.size()) {
      out.wrong_cardinality = true;
    }
    ++counts[c];
    for (int x : c.points()) {
      ++point_counts[static_cast<std::size_t>(x)];
    }
  }
  const double total = static_cast<double>(samples);
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  int bins = 0;
  for (const auto& [cfg, p] : law) {
    const double expected = p * total;
    const double observed =
        counts.count(cfg) ? static_cast<double>(counts.at(cfg)) : 0.0;
    if (expected >= 5.0) {
      out.chi2 += (observed - expected) * (observed - expected) / expected;
      ++bins;
    } else {
      pooled_expected += expected;
      pooled_observed += observed;
    }
  }
  for (const auto& [cfg, c] : counts) {
    if (law.count(cfg) == 0) {
      pooled_observed += static_cast<double>(c);
    }
  }
  if (pooled_expected > 0.0) {
    out.chi2 += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) /
                pooled_expected;
    ++bins;
  } else if (pooled_observed > 0.0) {
    out.chi2 = std::numeric_limits<double>::infinity();
  }
  out.dof = std::max(1, bins - 1);
  out.p_value = std::isfinite(out.chi2)
                    ? boost::math::cdf(boost::math::complement(
                          boost::math::chi_squared_distribution<double>(out.dof), out.chi2))
                    : 0.0;
  const Kernel k = projection_kernel(a);
  for (Eigen::Index x = 0; x < a.space().dim(); ++x) {
    const double p = expected_count(k, {x});
    const double obs = static_cast<double>(point_counts[static_cast<std::size_t>(x)]) / total;
    const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / total);
    const double z = se > 0.0 ? std::abs(obs - p) / se
                              : (std::abs(obs - p) > 1e-9 ? std::numeric_limits<double>::infinity()
                                                          : 0.0);
    out.max_abs_z = std::max(out.max_abs_z, z);
  }
  return out;
}

/// Space with masses drawn from [0.5, 1.5]; exercises the weight folding.
inline GroundSpace random_weight_space(std::size_t size, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  std::vector<std::string> labels;
  std::vector<double> weights;
  for (std::size_t i = 0; i < size; ++i) {
    labels.push_back(std::to_string(i));
    weights.push_back(unif(rng));
  }
  return {std::move(labels), std::move(weights)};
}

}  // namespace fermiflow
