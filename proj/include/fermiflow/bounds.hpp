#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "fermiflow/dpp.hpp"
#include "fermiflow/ground_space.hpp"
#include "fermiflow/random.hpp"
#include "fermiflow/slater.hpp"
#include "fermiflow/transport.hpp"
#include "fermiflow/w1_bounds.hpp"

namespace fermiflow {

/// TV between projection DPPs of equal rank: sqrt(1 - |det M|^2).
inline double tv_bound_projection(const OverlapMatrix& m) {
  return trace_distance_slater(m);
}

/// W# between projection DPPs of equal rank: n sqrt(1 - s^2), s the
/// stabilizer-maximized mean overlap.
inline double wsharp_bound_projection(const OverlapMatrix& m) {
  return w1_upper_slater(m);
}

/// w(lambda, lambda', I) = prod_{i in I} min(l_i, l'_i) prod_{i not in I} (1 - max(l_i, l'_i)).
inline double weight_w(const std::vector<double>& lam, const std::vector<double>& lam_prime,
                       const std::vector<Eigen::Index>& subset) {
  if (lam.size() != lam_prime.size()) {
    throw DimensionError("weight_w: eigenvalue lists differ in length");
  }
  std::vector<char> in(lam.size(), 0);
  for (Eigen::Index i : subset) {
    if (i < 0 || static_cast<std::size_t>(i) >= lam.size()) {
      throw DimensionError("weight_w: index out of range");
    }
    in[static_cast<std::size_t>(i)] = 1;
  }
  double w = 1.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double a = lam[i];
    const double b = lam_prime[i];
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
      throw DomainError("weight_w: eigenvalues must lie in [0, 1]");
    }
    w *= in[i] ? std::min(a, b) : 1.0 - std::max(a, b);
  }
  return w;
}

inline constexpr std::size_t kExactSubsetIndices = 20;

struct GeneralBound {
  double value = 0.0;
  double eigenvalue_term = 0.0;  // first sum (TV) or the Cauchy-Schwarz term (W#)
  double subset_term = 0.0;      // sum over enumerated I
  double tail_term = 0.0;        // certified remainder for skipped I
  std::size_t subsets = 0;       // number of I with w > 0 visited
};

namespace detail {

/// Calls visit(indices, w) for subsets I with w(lambda, lambda', I) > 0.
/// Up to kExactSubsetIndices indices every subset is visited; beyond that
/// subsets are visited in decreasing w until `budget` have been seen.
/// Returns the total w of the visited subsets.
template <class Visit>
double for_each_weighted_subset(const std::vector<double>& lam,
                                const std::vector<double>& lam_prime,
                                std::size_t budget, Visit&& visit) {
  const std::size_t count = lam.size();
  std::vector<double> in_w(count);
  std::vector<double> out_w(count);
  for (std::size_t i = 0; i < count; ++i) {
    in_w[i] = std::min(lam[i], lam_prime[i]);
    out_w[i] = 1.0 - std::max(lam[i], lam_prime[i]);
  }
  double seen = 0.0;
  if (count <= kExactSubsetIndices) {
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << count); ++mask) {
      double w = 1.0;
      for (std::size_t i = 0; i < count && w > 0.0; ++i) {
        w *= ((mask >> i) & 1U) ? in_w[i] : out_w[i];
      }
      if (w > 0.0) {
        visit(mask_indices(mask, count), w);
        seen += w;
      }
    }
    return seen;
  }
  // Best-first: start from the heaviest subset, flip memberships in order
  // of decreasing ratio (lighter choice / heavier choice).
  std::vector<char> base_in(count);
  double base = 1.0;
  std::vector<std::pair<double, std::size_t>> ratios;
  for (std::size_t i = 0; i < count; ++i) {
    base_in[i] = in_w[i] > out_w[i] ? 1 : 0;
    const double hi = std::max(in_w[i], out_w[i]);
    const double lo = std::min(in_w[i], out_w[i]);
    base *= hi;
    ratios.emplace_back(hi > 0.0 ? lo / hi : 0.0, i);
  }
  if (!(base > 0.0)) {
    return 0.0;
  }
  std::stable_sort(ratios.begin(), ratios.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  struct State {
    double w;
    std::vector<std::size_t> flips;  // positions into `ratios`, increasing
    bool operator<(const State& o) const { return w < o.w; }
  };
  auto emit = [&](const State& s) {
    std::vector<char> in = base_in;
    for (std::size_t pos : s.flips) {
      in[ratios[pos].second] ^= 1;
    }
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < count; ++i) {
      if (in[i]) {
        idx.push_back(static_cast<Eigen::Index>(i));
      }
    }
    visit(idx, s.w);
    seen += s.w;
  };
  std::priority_queue<State> heap;
  emit(State{base, {}});
  std::size_t visited = 1;
  if (ratios[0].first > 0.0) {
    heap.push(State{base * ratios[0].first, {0}});
  }
  while (!heap.empty() && visited < budget) {
    State s = heap.top();
    heap.pop();
    emit(s);
    ++visited;
    const std::size_t last = s.flips.back();
    if (last + 1 < count && ratios[last + 1].first > 0.0) {
      State add = s;
      add.flips.push_back(last + 1);
      add.w *= ratios[last + 1].first;
      heap.push(std::move(add));
      State rep = s;
      rep.flips.back() = last + 1;
      rep.w = rep.w / ratios[last].first * ratios[last + 1].first;
      heap.push(std::move(rep));
    }
  }
  return seen;
}

inline void check_specs(const MixedKernelSpec& a, const MixedKernelSpec& b) {
  if (a.size() != b.size()) {
    throw DimensionError("specs have different index sets");
  }
  if (!(a.family().space() == b.family().space())) {
    throw DimensionError("specs live on different spaces");
  }
}

inline CMatrix full_overlap(const MixedKernelSpec& a, const MixedKernelSpec& b) {
  return a.family().matrix().adjoint() *
         a.family().space().weight_vector().asDiagonal() * b.family().matrix();
}

}  // namespace detail

inline constexpr std::size_t kSubsetBudget = std::size_t{1} << 20;

/// sum_i |l_i - l'_i| + sum_I sqrt(1 - |det(<psi_i|psi'_j>)_{i,j in I}|^2) w(l, l', I).
inline GeneralBound tv_bound_general(const MixedKernelSpec& a, const MixedKernelSpec& b,
                                     std::size_t budget = kSubsetBudget) {
  detail::check_specs(a, b);
  const OverlapMatrix full(detail::full_overlap(a, b));
  GeneralBound out;
  double total_w = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.eigenvalue_term += std::abs(a.lambdas()[i] - b.lambdas()[i]);
    total_w *= 1.0 - std::abs(a.lambdas()[i] - b.lambdas()[i]);
  }
  const double seen = detail::for_each_weighted_subset(
      a.lambdas(), b.lambdas(), budget, [&](const std::vector<Eigen::Index>& idx, double w) {
        ++out.subsets;
        if (!idx.empty()) {
          out.subset_term += tv_bound_projection(full.restricted(idx)) * w;
        }
      });
  out.tail_term = std::max(0.0, total_w - seen);
  out.value = out.eigenvalue_term + out.subset_term + out.tail_term;
  return out;
}

/// (2 + sum l + sum l') (sum |l - l'|)^{1/2}
///   + sum_I #I sqrt(1 - s_I^2) w(l, l', I), s_I the stabilizer maximum of
/// the I-restricted overlap matrix.
inline GeneralBound wsharp_bound_general(const MixedKernelSpec& a, const MixedKernelSpec& b,
                                         std::size_t budget = kSubsetBudget) {
  detail::check_specs(a, b);
  const OverlapMatrix full(detail::full_overlap(a, b));
  GeneralBound out;
  double diff = 0.0;
  double total_w = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += std::abs(a.lambdas()[i] - b.lambdas()[i]);
    total_w *= 1.0 - std::abs(a.lambdas()[i] - b.lambdas()[i]);
  }
  out.eigenvalue_term = (2.0 + a.lambda_sum() + b.lambda_sum()) * std::sqrt(diff);
  const double seen = detail::for_each_weighted_subset(
      a.lambdas(), b.lambdas(), budget, [&](const std::vector<Eigen::Index>& idx, double w) {
        ++out.subsets;
        if (!idx.empty()) {
          out.subset_term += wsharp_bound_projection(full.restricted(idx)) * w;
        }
      });
  out.tail_term = std::max(0.0, total_w - seen) * static_cast<double>(a.size());
  out.value = out.eigenvalue_term + out.subset_term + out.tail_term;
  return out;
}

/// Reorders the second spec so that its eigenvalues, sorted decreasingly,
/// sit on the positions of the first spec's eigenvalues sorted decreasingly.
/// Any bijection of indices yields a valid bound; this one is a heuristic.
inline MixedKernelSpec greedy_pairing(const MixedKernelSpec& a, const MixedKernelSpec& b) {
  detail::check_specs(a, b);
  const std::size_t count = a.size();
  std::vector<std::size_t> ra(count);
  std::vector<std::size_t> rb(count);
  std::iota(ra.begin(), ra.end(), 0);
  std::iota(rb.begin(), rb.end(), 0);
  std::stable_sort(ra.begin(), ra.end(),
                   [&](std::size_t i, std::size_t j) { return a.lambdas()[i] > a.lambdas()[j]; });
  std::stable_sort(rb.begin(), rb.end(),
                   [&](std::size_t i, std::size_t j) { return b.lambdas()[i] > b.lambdas()[j]; });
  std::vector<Eigen::Index> order(count);
  std::vector<double> lam(count);
  for (std::size_t k = 0; k < count; ++k) {
    order[ra[k]] = static_cast<Eigen::Index>(rb[k]);
    lam[ra[k]] = b.lambdas()[rb[k]];
  }
  return {b.family().subfamily(order), std::move(lam)};
}

enum class VerifyMode { Exact, Empirical };

struct Estimate {
  double value = 0.0;
  DistributionKind kind = DistributionKind::Exact;
  std::optional<std::pair<double, double>> ci;  // bootstrap 95% interval
};

struct DppBoundsReport {
  Estimate tv;
  Estimate wsharp;
  double tv_bound = 0.0;
  double wsharp_bound = 0.0;
  double tv_bound_paired = 0.0;
  double wsharp_bound_paired = 0.0;
  double slack_tv = 0.0;      // tv_bound - tv
  double slack_wsharp = 0.0;  // wsharp_bound - wsharp
  std::size_t indices = 0;
  Eigen::Index dim = 0;
  std::uint64_t seed = 0;
};

struct VerifyOptions {
  VerifyMode mode = VerifyMode::Exact;
  std::size_t samples = 20'000;  // per process, empirical mode
  std::size_t bootstrap = 1'000;
  std::uint64_t seed = 0;
  double enumeration_cap = kEnumerationCap;
};

/// W# between configuration laws, transport cost wsharp_cost.
inline double wsharp_distance(const Distribution<PointConfiguration>& p,
                              const Distribution<PointConfiguration>& q) {
  return ot_cost(p, q, [](const PointConfiguration& a, const PointConfiguration& b) {
           return wsharp_cost(a, b);
         }).result.cost;
}

/// Same transport problem with the unhalved cost #(A sym-diff B); exactly
/// twice wsharp_distance.
inline double symmetric_difference_distance(const Distribution<PointConfiguration>& p,
                                            const Distribution<PointConfiguration>& q) {
  return ot_cost(p, q, [](const PointConfiguration& a, const PointConfiguration& b) {
           return symmetric_difference_cost(a, b);
         }).result.cost;
}

namespace detail {

inline std::pair<double, double> percentile_interval(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {at(0.025), at(0.975)};
}

inline std::vector<PointConfiguration> resample(const std::vector<PointConfiguration>& s,
                                                Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  std::vector<PointConfiguration> out;
  out.reserve(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    out.push_back(s[pick(rng)]);
  }
  return out;
}

}  // namespace detail

/// Measures TV and W# between the laws of two mixed DPPs (exactly by
/// enumeration, or from samples with bootstrap intervals) and evaluates the
/// corresponding upper bounds, both with the given index pairing and with
/// greedy_pairing.
inline DppBoundsReport verify_instance(const MixedKernelSpec& a, const MixedKernelSpec& b,
                                       const VerifyOptions& opt = {}) {
  detail::check_specs(a, b);
  DppBoundsReport r;
  r.indices = a.size();
  r.dim = a.family().space().dim();
  r.seed = opt.seed;
  r.tv_bound = tv_bound_general(a, b).value;
  r.wsharp_bound = wsharp_bound_general(a, b).value;
  const MixedKernelSpec paired = greedy_pairing(a, b);
  r.tv_bound_paired = tv_bound_general(a, paired).value;
  r.wsharp_bound_paired = wsharp_bound_general(a, paired).value;

  if (opt.mode == VerifyMode::Exact) {
    const auto p = mixed_dpp_distribution(a, opt.enumeration_cap);
    const auto q = mixed_dpp_distribution(b, opt.enumeration_cap);
    r.tv = {total_variation(p.probs, q.probs), DistributionKind::Exact, std::nullopt};
    r.wsharp = {wsharp_distance(p.probs, q.probs), DistributionKind::Exact, std::nullopt};
  } else {
    Rng ra = make_rng(opt.seed, 1);
    Rng rb = make_rng(opt.seed, 2);
    std::vector<PointConfiguration> sa;
    std::vector<PointConfiguration> sb;
    for (std::size_t k = 0; k < opt.samples; ++k) {
      sa.push_back(sample_mixed_dpp(a, ra));
      sb.push_back(sample_mixed_dpp(b, rb));
    }
    const auto p = empirical_distribution(sa, opt.seed);
    const auto q = empirical_distribution(sb, opt.seed);
    r.tv = {total_variation(p.probs, q.probs), DistributionKind::Empirical, std::nullopt};
    r.wsharp = {wsharp_distance(p.probs, q.probs), DistributionKind::Empirical, std::nullopt};
    if (opt.bootstrap > 0) {
      Rng rboot = make_rng(opt.seed, 3);
      std::vector<double> tvs;
      std::vector<double> ws;
      for (std::size_t k = 0; k < opt.bootstrap; ++k) {
        const auto pb = empirical_distribution(detail::resample(sa, rboot), opt.seed);
        const auto qb = empirical_distribution(detail::resample(sb, rboot), opt.seed);
        tvs.push_back(total_variation(pb.probs, qb.probs));
        ws.push_back(wsharp_distance(pb.probs, qb.probs));
      }
      r.tv.ci = detail::percentile_interval(std::move(tvs));
      r.wsharp.ci = detail::percentile_interval(std::move(ws));
    }
  }
  r.slack_tv = r.tv_bound - r.tv.value;
  r.slack_wsharp = r.wsharp_bound - r.wsharp.value;
  return r;
}

using Rational = boost::rational<std::int64_t>;

/// "p/q", or "p" for integers.
inline std::string rational_string(const Rational& q) {
  return q.denominator() == 1 ? std::to_string(q.numerator())
                              : std::to_string(q.numerator()) + "/" +
                                    std::to_string(q.denominator());
}

/// Cov(#(X cap A), #(X cap B)) for the projection DPP spanned by the Walsh
/// functions with the given sequency indices, in exact rational arithmetic
/// (integer kernel values, masses 1/2^levels). A and B are disjoint sets of
/// grid cells.
inline Rational walsh_count_covariance_exact(int levels, const std::vector<int>& functions,
                                             const std::vector<int>& a,
                                             const std::vector<int>& b) {
  const auto table = walsh_sign_table(levels);
  const auto cells = static_cast<std::int64_t>(table.size());
  auto kernel = [&](int x, int y) {
    std::int64_t k = 0;
    for (int f : functions) {
      k += table.at(static_cast<std::size_t>(f))[static_cast<std::size_t>(x)] *
           table.at(static_cast<std::size_t>(f))[static_cast<std::size_t>(y)];
    }
    return k;
  };
  Rational acc(0);
  const Rational mass(1, cells);
  for (int x : a) {
    for (int y : b) {
      if (x == y) {
        throw DomainError("walsh_count_covariance_exact: sets are not disjoint");
      }
      const std::int64_t rho2 = kernel(x, x) * kernel(y, y) - kernel(x, y) * kernel(y, x);
      const std::int64_t rho11 = kernel(x, x) * kernel(y, y);
      acc += Rational(rho2 - rho11) * mass * mass;
    }
  }
  return acc;
}

/// Right-hand side of the refuted projection-DPP bound:
/// min over tau of sum_i W2(|psi_i|^2 mu, |psi'_tau(i)|^2 mu), W2 taken with
/// the squared Euclidean cost on the point coordinates.
inline double falsified_bound_rhs(const OrthonormalFamily& a, const OrthonormalFamily& b) {
  const GroundSpace& s = a.space();
  if (!s.has_coordinates()) {
    throw DomainError("falsified_bound_rhs: ground space has no coordinates");
  }
  if (a.size() != b.size() || !(s == b.space())) {
    throw DimensionError("falsified_bound_rhs: incompatible families");
  }
  const Eigen::Index d = s.dim();
  RMatrix cost(d, d);
  for (Eigen::Index x = 0; x < d; ++x) {
    for (Eigen::Index y = 0; y < d; ++y) {
      const double diff = s.coordinates()[static_cast<std::size_t>(x)] -
                          s.coordinates()[static_cast<std::size_t>(y)];
      cost(x, y) = diff * diff;
    }
  }
  const CostMatrix c(cost);
  const RVector w = s.weight_vector();
  auto density = [&](const OrthonormalFamily& f, Eigen::Index i) -> RVector {
    return f.matrix().col(i).cwiseAbs2().cwiseProduct(w);
  };
  const Eigen::Index n = a.size();
  RMatrix w2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      w2(i, j) = std::sqrt(std::max(0.0, ot_cost(density(a, i), density(b, j), c).cost));
    }
  }
  std::vector<Eigen::Index> tau(static_cast<std::size_t>(n));
  std::iota(tau.begin(), tau.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += w2(i, tau[static_cast<std::size_t>(i)]);
    }
    best = std::min(best, sum);
  } while (std::next_permutation(tau.begin(), tau.end()));
  return best;
}

/// The Walsh pair {w0, w1} vs {w0, w2} on the 4-cell grid: two projection
/// DPPs with identical one-point densities but different laws.
struct WalshReport {
  Rational covariance_first;   // Cov(#(X cap (0,1/4)), #(X cap (1/4,1/2)))
  Rational covariance_second;  // same for X'
  double covariance_first_float = 0.0;
  double covariance_second_float = 0.0;
  double falsified_rhs = 0.0;
  double tv_exact = 0.0;
  double wsharp_exact = 0.0;
  double tv_bound = 0.0;
  double wsharp_bound = 0.0;
};

inline WalshReport walsh_counterexample() {
  const WalshFamily wf = walsh_family(2);
  const OrthonormalFamily first(wf.space, std::vector<GroundFunction>{wf.functions[0], wf.functions[1]});
  const OrthonormalFamily second(wf.space, std::vector<GroundFunction>{wf.functions[0], wf.functions[2]});
  WalshReport r;
  r.covariance_first = walsh_count_covariance_exact(2, {0, 1}, {0}, {1});
  r.covariance_second = walsh_count_covariance_exact(2, {0, 2}, {0}, {1});
  r.covariance_first_float = count_covariance(projection_kernel(first), {0}, {1});
  r.covariance_second_float = count_covariance(projection_kernel(second), {0}, {1});
  r.falsified_rhs = falsified_bound_rhs(first, second);
  const auto p = brute_force_configuration_distribution(first).probs;
  const auto q = brute_force_configuration_distribution(second).probs;
  r.tv_exact = total_variation(p, q);
  r.wsharp_exact = wsharp_distance(p, q);
  const OverlapMatrix m = overlap_matrix(first, second);
  r.tv_bound = tv_bound_projection(m);
  r.wsharp_bound = wsharp_bound_projection(m);
  return r;
}

}  // namespace fermiflow
