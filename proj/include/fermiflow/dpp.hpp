#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "fermiflow/ground_space.hpp"
#include "fermiflow/linalg.hpp"
#include "fermiflow/random.hpp"
#include "fermiflow/slater.hpp"
#include "fermiflow/transport.hpp"
#include "fermiflow/types.hpp"

namespace fermiflow {

/// Finite set of distinct point indices, stored sorted.
class PointConfiguration {
 public:
  PointConfiguration() = default;
  explicit PointConfiguration(std::vector<int> points) : points_(std::move(points)) {
    std::sort(points_.begin(), points_.end());
    if (std::adjacent_find(points_.begin(), points_.end()) != points_.end()) {
      throw DomainError("PointConfiguration: repeated point");
    }
  }

  [[nodiscard]] const std::vector<int>& points() const { return points_; }
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] bool empty() const { return points_.empty(); }
  [[nodiscard]] bool contains(int x) const {
    return std::binary_search(points_.begin(), points_.end(), x);
  }
  [[nodiscard]] auto begin() const { return points_.begin(); }
  [[nodiscard]] auto end() const { return points_.end(); }

  friend auto operator<=>(const PointConfiguration&, const PointConfiguration&) = default;

 private:
  std::vector<int> points_;
};

inline int symmetric_difference_cost(const PointConfiguration& a,
                                     const PointConfiguration& b) {
  return symmetric_difference_cost(a.points(), b.points());
}

/// (1/2) #(A sym-diff B): the total variation of the counting measures of A
/// and B in the half-normalized convention. For |A| = |B| it equals
/// #(A \ B) and is dominated by the Hamming distance of any orderings; the
/// unhalved count is not (x = (1,2), x' = (3,4)).
inline double wsharp_cost(const PointConfiguration& a, const PointConfiguration& b) {
  return 0.5 * symmetric_difference_cost(a, b);
}

enum class DistributionKind { Exact, Empirical };

/// Law of a random point configuration, exact or estimated from samples.
struct ConfigurationDistribution {
  Distribution<PointConfiguration> probs;
  DistributionKind kind = DistributionKind::Exact;
  std::size_t sample_count = 0;  // empirical only
  std::uint64_t seed = 0;        // empirical only
  std::map<PointConfiguration, std::size_t> counts;  // empirical only
};

/// Eigenvalues in [0,1] attached to a jointly orthonormal family: the
/// kernel sum_i lambda_i |psi_i><psi_i|.
class MixedKernelSpec {
 public:
  MixedKernelSpec(OrthonormalFamily family, std::vector<double> lambdas)
      : family_(std::move(family)), lambdas_(std::move(lambdas)) {
    if (static_cast<Eigen::Index>(lambdas_.size()) != family_.size()) {
      throw DimensionError("MixedKernelSpec: one eigenvalue per function required");
    }
    for (double l : lambdas_) {
      if (!(l >= 0.0 && l <= 1.0)) {
        throw DomainError("MixedKernelSpec: eigenvalues must lie in [0, 1]");
      }
    }
  }

  /// All eigenvalues one: the projection kernel of the family.
  static MixedKernelSpec projection(OrthonormalFamily family) {
    std::vector<double> ones(static_cast<std::size_t>(family.size()), 1.0);
    return {std::move(family), std::move(ones)};
  }

  [[nodiscard]] const OrthonormalFamily& family() const { return family_; }
  [[nodiscard]] const std::vector<double>& lambdas() const { return lambdas_; }
  [[nodiscard]] std::size_t size() const { return lambdas_.size(); }
  [[nodiscard]] double lambda_sum() const {
    return std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0);
  }
  [[nodiscard]] Kernel kernel() const {
    return weighted_kernel(family_,
                           Eigen::Map<const RVector>(lambdas_.data(),
                                                     static_cast<Eigen::Index>(lambdas_.size())));
  }

 private:
  OrthonormalFamily family_;
  std::vector<double> lambdas_;
};

using IndexMask = std::uint32_t;
inline constexpr std::size_t kMaxIndices = 20;

inline std::vector<Eigen::Index> mask_indices(IndexMask mask, std::size_t count) {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < count; ++i) {
    if ((mask >> i) & 1U) {
      out.push_back(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

namespace detail {

inline void check_points(const Kernel& k, const std::vector<Eigen::Index>& points) {
  std::vector<Eigen::Index> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("correlation function: repeated points");
  }
  for (Eigen::Index x : points) {
    if (x < 0 || x >= k.space.dim()) {
      throw DimensionError("correlation function: point index out of range");
    }
  }
}

}  // namespace detail

/// m-point correlation rho_m(x_1..x_m) = det(K(x_i, x_j)), a density with
/// respect to mu^m.
inline double correlation_function(const Kernel& k,
                                   const std::vector<Eigen::Index>& points) {
  detail::check_points(k, points);
  const auto m = static_cast<Eigen::Index>(points.size());
  CMatrix minor(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      minor(a, b) = k.matrix(points[static_cast<std::size_t>(a)],
                             points[static_cast<std::size_t>(b)]);
    }
  }
  return linalg::determinant(minor).real();
}

/// P(x_1, .., x_m all belong to the configuration) on a finite space:
/// rho_m times the product of the masses.
inline double inclusion_probability(const Kernel& k,
                                    const std::vector<Eigen::Index>& points) {
  double w = 1.0;
  for (Eigen::Index x : points) {
    w *= k.space.weight(static_cast<std::size_t>(x));
  }
  return correlation_function(k, points) * w;
}

/// E[#(X cap B)] = sum_{x in B} K(x, x) mu(x).
inline double expected_count(const Kernel& k, const std::vector<Eigen::Index>& subset) {
  double acc = 0.0;
  for (Eigen::Index x : subset) {
    if (x < 0 || x >= k.space.dim()) {
      throw DimensionError("expected_count: point index out of range");
    }
    acc += k.matrix(x, x).real() * k.space.weight(static_cast<std::size_t>(x));
  }
  return acc;
}

/// Cov(#(X cap A), #(X cap B)) for disjoint A, B:
/// sum_{x in A, y in B} (rho_2(x,y) - rho_1(x) rho_1(y)) mu(x) mu(y).
inline double count_covariance(const Kernel& k, const std::vector<Eigen::Index>& a,
                               const std::vector<Eigen::Index>& b) {
  for (Eigen::Index x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) {
      throw DomainError("count_covariance: sets are not disjoint");
    }
  }
  double acc = 0.0;
  for (Eigen::Index x : a) {
    for (Eigen::Index y : b) {
      const double rho2 = correlation_function(k, {x, y});
      const double rho11 = k.matrix(x, x).real() * k.matrix(y, y).real();
      acc += (rho2 - rho11) * k.space.weight(static_cast<std::size_t>(x)) *
             k.space.weight(static_cast<std::size_t>(y));
    }
  }
  return acc;
}

inline constexpr double kEnumerationCap = 1e6;

struct BruteForceResult {
  Distribution<std::vector<int>> ordered;  // law of the ordered outcome tuple
  ConfigurationDistribution configurations;
  double total_mass = 0.0;
  double diagonal_mass = 0.0;  // mass of tuples with a repeated point
};

/// Exact law of the joint position measurement on the Slater state of `a`:
/// every ordered tuple gets |det(psi_i(x_j))|^2 / n! prod mu(x_j); the
/// configuration law forgets the order. Tuples with repeats are excluded
/// from both distributions and their (numerically zero) mass is reported.
inline BruteForceResult brute_force_measurement(const OrthonormalFamily& a,
                                                double cap = kEnumerationCap) {
  const Eigen::Index n = a.size();
  const Eigen::Index d = a.space().dim();
  const double required = std::pow(static_cast<double>(d), static_cast<double>(n));
  if (required > cap) {
    throw CapExceededError("configuration enumeration", required, cap);
  }
  BruteForceResult out;
  const CMatrix folded = a.folded();
  const double inv_fact = 1.0 / factorial(n);
  std::vector<Eigen::Index> t(static_cast<std::size_t>(n), 0);
  CMatrix m(n, n);
  do {
    for (Eigen::Index j = 0; j < n; ++j) {
      m.col(j) = folded.row(t[static_cast<std::size_t>(j)]).transpose();
    }
    const double amp = linalg::log_determinant(m).abs();
    const double prob = amp * amp * inv_fact;
    out.total_mass += prob;
    std::vector<int> tuple(t.begin(), t.end());
    std::vector<int> sorted = tuple;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      out.diagonal_mass += prob;
      continue;
    }
    out.ordered[tuple] += prob;
    out.configurations.probs[PointConfiguration(std::move(sorted))] += prob;
  } while (next_tuple(t, d));
  return out;
}

inline ConfigurationDistribution brute_force_configuration_distribution(
    const OrthonormalFamily& a, double cap = kEnumerationCap) {
  return brute_force_measurement(a, cap).configurations;
}

/// Exact law of the mixed DPP: sum over index subsets I of
/// P(I) = prod_{i in I} lambda_i prod_{i not in I} (1 - lambda_i) times the
/// projection-DPP law on span{psi_i : i in I}.
inline ConfigurationDistribution mixed_dpp_distribution(const MixedKernelSpec& spec,
                                                        double cap = kEnumerationCap) {
  const std::size_t count = spec.size();
  if (count > kMaxIndices) {
    throw CapExceededError("mixed DPP index subsets", static_cast<double>(count),
                           static_cast<double>(kMaxIndices));
  }
  ConfigurationDistribution out;
  const auto& lam = spec.lambdas();
  for (IndexMask mask = 0; mask < (IndexMask{1} << count); ++mask) {
    double w = 1.0;
    for (std::size_t i = 0; i < count; ++i) {
      w *= ((mask >> i) & 1U) ? lam[i] : 1.0 - lam[i];
    }
    if (w == 0.0) {
      continue;
    }
    const auto idx = mask_indices(mask, count);
    if (idx.empty()) {
      out.probs[PointConfiguration{}] += w;
      continue;
    }
    const auto sub = brute_force_configuration_distribution(spec.family().subfamily(idx), cap);
    for (const auto& [cfg, p] : sub.probs) {
      out.probs[cfg] += w * p;
    }
  }
  return out;
}

/// Exact sample of the projection DPP of an orthonormal family by the
/// sequential chain rule: draw x with probability ||row_x||^2 / k from the
/// sqrt(mu)-folded basis of the current k-dimensional subspace, restrict the
/// subspace to functions vanishing at x, re-orthonormalize, repeat.
inline PointConfiguration sample_projection_dpp(const OrthonormalFamily& a, Rng& rng) {
  CMatrix v = a.folded();
  std::vector<int> points;
  points.reserve(static_cast<std::size_t>(v.cols()));
  while (v.cols() > 0) {
    const Eigen::Index k = v.cols();
    const RVector row_mass = v.rowwise().squaredNorm();
    std::discrete_distribution<int> pick(row_mass.data(), row_mass.data() + row_mass.size());
    const int x = pick(rng);
    points.push_back(x);
    if (k == 1) {
      break;
    }
    Eigen::Index pivot = 0;
    v.row(x).cwiseAbs().maxCoeff(&pivot);
    const Complex pv = v(x, pivot);
    CMatrix next(v.rows(), k - 1);
    Eigen::Index c = 0;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (l == pivot) {
        continue;
      }
      next.col(c++) = v.col(l) - v.col(pivot) * (v(x, l) / pv);
    }
    for (Eigen::Index j = 0; j < next.cols(); ++j) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < j; ++i) {
          next.col(j) -= next.col(i) * next.col(i).dot(next.col(j));
        }
      }
      const double norm = next.col(j).norm();
      if (norm < 1e-12) {
        throw DomainError("sample_projection_dpp: numerical rank collapse");
      }
      next.col(j) /= norm;
    }
    v = std::move(next);
  }
  return PointConfiguration(std::move(points));
}

/// Bernoulli(lambda_i) draws select I; then the projection DPP on
/// span{psi_i : i in I}. Empty I gives the empty configuration.
inline PointConfiguration sample_mixed_dpp(const MixedKernelSpec& spec, Rng& rng) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    std::bernoulli_distribution coin(spec.lambdas()[i]);
    if (coin(rng)) {
      idx.push_back(static_cast<Eigen::Index>(i));
    }
  }
  if (idx.empty()) {
    return {};
  }
  return sample_projection_dpp(spec.family().subfamily(idx), rng);
}

/// Empirical law of `samples` draws.
inline ConfigurationDistribution empirical_distribution(
    const std::vector<PointConfiguration>& samples, std::uint64_t seed) {
  ConfigurationDistribution out;
  out.kind = DistributionKind::Empirical;
  out.sample_count = samples.size();
  out.seed = seed;
  for (const auto& s : samples) {
    ++out.counts[s];
  }
  for (const auto& [cfg, c] : out.counts) {
    out.probs[cfg] = static_cast<double>(c) / static_cast<double>(samples.size());
  }
  return out;
}

/// How the two projection DPPs are coupled on the event I = I'.
enum class PairCoupling {
  TotalVariation,  // maximal coupling: P(X != X') = TV
  Wsharp,          // optimal plan for the symmetric-difference cost
  Independent,
};

struct CoupledDraw {
  PointConfiguration first;
  PointConfiguration second;
  IndexMask first_indices = 0;
  IndexMask second_indices = 0;
  bool exact_coupling = true;  // false if I = I' fell back to independence
};

/// Draws coupled pairs (X, X') of mixed DPPs: each Bernoulli pair is
/// coupled maximally through one shared uniform, so
/// P(B_i = B'_i = 1) = min(lambda_i, lambda'_i); on I = I' the projection
/// DPPs are coupled as selected by PairCoupling, using exact laws when they
/// can be enumerated and independent draws otherwise. Joint laws are
/// cached per index set.
class CoupledSampler {
 public:
  CoupledSampler(MixedKernelSpec first, MixedKernelSpec second,
                 PairCoupling mode = PairCoupling::Wsharp,
                 double cap = kEnumerationCap)
      : first_(std::move(first)), second_(std::move(second)), mode_(mode), cap_(cap) {
    if (first_.size() != second_.size()) {
      throw DimensionError("CoupledSampler: specs have different index sets");
    }
    if (first_.size() > kMaxIndices) {
      throw CapExceededError("CoupledSampler indices", static_cast<double>(first_.size()),
                             static_cast<double>(kMaxIndices));
    }
    if (!(first_.family().space() == second_.family().space())) {
      throw DimensionError("CoupledSampler: specs live on different spaces");
    }
  }

  CoupledDraw draw(Rng& rng) {
    CoupledDraw out;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < first_.size(); ++i) {
      const double u = unif(rng);
      if (u < first_.lambdas()[i]) {
        out.first_indices |= IndexMask{1} << i;
      }
      if (u < second_.lambdas()[i]) {
        out.second_indices |= IndexMask{1} << i;
      }
    }
    if (out.first_indices != out.second_indices || mode_ == PairCoupling::Independent) {
      out.first = sample_part(first_, out.first_indices, rng);
      out.second = sample_part(second_, out.second_indices, rng);
      return out;
    }
    const Joint* joint = joint_for(out.first_indices);
    if (joint == nullptr) {
      out.first = sample_part(first_, out.first_indices, rng);
      out.second = sample_part(second_, out.second_indices, rng);
      out.exact_coupling = false;
      return out;
    }
    std::discrete_distribution<std::size_t> pick(joint->probs.begin(), joint->probs.end());
    const std::size_t k = pick(rng);
    out.first = joint->pairs[k].first;
    out.second = joint->pairs[k].second;
    return out;
  }

 private:
  struct Joint {
    std::vector<std::pair<PointConfiguration, PointConfiguration>> pairs;
    std::vector<double> probs;
  };

  static PointConfiguration sample_part(const MixedKernelSpec& spec, IndexMask mask,
                                        Rng& rng) {
    const auto idx = mask_indices(mask, spec.size());
    if (idx.empty()) {
      return {};
    }
    return sample_projection_dpp(spec.family().subfamily(idx), rng);
  }

  const Joint* joint_for(IndexMask mask) {
    if (auto it = cache_.find(mask); it != cache_.end()) {
      return it->second ? &*it->second : nullptr;
    }
    const auto idx = mask_indices(mask, first_.size());
    std::optional<Joint> joint;
    if (idx.empty()) {
      joint = Joint{{{PointConfiguration{}, PointConfiguration{}}}, {1.0}};
    } else {
      const double need = std::pow(static_cast<double>(first_.family().space().dim()),
                                   static_cast<double>(idx.size()));
      if (need <= cap_) {
        joint = build_joint(
            brute_force_configuration_distribution(first_.family().subfamily(idx), cap_).probs,
            brute_force_configuration_distribution(second_.family().subfamily(idx), cap_).probs);
      }
    }
    auto [it, inserted] = cache_.emplace(mask, std::move(joint));
    return it->second ? &*it->second : nullptr;
  }

  Joint build_joint(const Distribution<PointConfiguration>& p,
                    const Distribution<PointConfiguration>& q) const {
    Joint j;
    if (mode_ == PairCoupling::Wsharp) {
      const auto t = ot_cost(p, q, [](const PointConfiguration& a, const PointConfiguration& b) {
        return symmetric_difference_cost(a, b);
      });
      for (const auto& e : t.result.plan) {
        j.pairs.emplace_back(t.rows[static_cast<std::size_t>(e.row)],
                             t.cols[static_cast<std::size_t>(e.col)]);
        j.probs.push_back(e.mass);
      }
      return j;
    }
    // Maximal coupling: common part on the diagonal, excess parts paired
    // independently.
    const double tv = total_variation(p, q);
    Distribution<PointConfiguration> plus;
    Distribution<PointConfiguration> minus;
    std::set<PointConfiguration> keys;
    for (const auto& [k, v] : p) keys.insert(k);
    for (const auto& [k, v] : q) keys.insert(k);
    for (const auto& k : keys) {
      const double a = p.count(k) ? p.at(k) : 0.0;
      const double b = q.count(k) ? q.at(k) : 0.0;
      if (std::min(a, b) > 0.0) {
        j.pairs.emplace_back(k, k);
        j.probs.push_back(std::min(a, b));
      }
      if (a > b) plus[k] = a - b;
      if (b > a) minus[k] = b - a;
    }
    if (tv > 0.0) {
      for (const auto& [ka, va] : plus) {
        for (const auto& [kb, vb] : minus) {
          j.pairs.emplace_back(ka, kb);
          j.probs.push_back(va * vb / tv);
        }
      }
    }
    return j;
  }

  MixedKernelSpec first_;
  MixedKernelSpec second_;
  PairCoupling mode_;
  double cap_;
  std::map<IndexMask, std::optional<Joint>> cache_;
};

/// Left-hand side of the correlation identity obtained from the measured
/// Slater state: (#L / n!) sum over tau in S_n of
/// det(conj(psi_tau(i)(x_i)) psi_tau(i)(x_j))_{i,j<=m}, with #L = n!/(n-m)!
/// for m distinct singleton cells. Equals det(K(x_i, x_j)).
inline double permutation_sum_correlation(const OrthonormalFamily& a,
                                          const std::vector<Eigen::Index>& points) {
  const Eigen::Index n = a.size();
  const auto m = static_cast<Eigen::Index>(points.size());
  if (m > n) {
    return 0.0;
  }
  std::vector<Eigen::Index> tau(static_cast<std::size_t>(n));
  std::iota(tau.begin(), tau.end(), 0);
  const CMatrix& psi = a.matrix();
  Complex acc{0.0, 0.0};
  CMatrix block(m, m);
  do {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index l = tau[static_cast<std::size_t>(i)];
      const Complex left = std::conj(psi(points[static_cast<std::size_t>(i)], l));
      for (Eigen::Index j = 0; j < m; ++j) {
        block(i, j) = left * psi(points[static_cast<std::size_t>(j)], l);
      }
    }
    acc += linalg::determinant(block);
  } while (std::next_permutation(tau.begin(), tau.end()));
  return acc.real() / factorial(n - m);
}

}  // namespace fermiflow
