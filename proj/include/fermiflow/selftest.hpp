#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fermiflow/bounds.hpp"
#include "fermiflow/density_operator.hpp"
#include "fermiflow/dpp.hpp"
#include "fermiflow/slater.hpp"
#include "fermiflow/transport.hpp"
#include "fermiflow/verify.hpp"
#include "fermiflow/w1_bounds.hpp"
#include "fermiflow/w1_exact.hpp"

namespace fermiflow::selftest {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;      // deterministic summary of the measured quantities
  double seconds = 0.0;    // wall time, not part of the deterministic output
  double time_limit = 0.0;
};

namespace detail {

inline std::uint64_t stream(int criterion, std::uint64_t instance) {
  return (static_cast<std::uint64_t>(criterion) << 32) | instance;
}

class Detail {
 public:
  template <class T>
  Detail& operator()(const std::string& key, const T& value) {
    os_ << (first_ ? "" : " ") << key << "=" << value;
    first_ = false;
    return *this;
  }
  [[nodiscard]] std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_ = [] {
    std::ostringstream o;
    o.precision(6);
    return o;
  }();
  bool first_ = true;
};

inline DensityOperator random_density(Eigen::Index d, Rng& rng) {
  const CMatrix g = complex_gaussian(d, d, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityOperator({d}, 0.5 * (rho + rho.adjoint()));
}

inline DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return DensityOperator(dims, linalg::kron(a.matrix(), b.matrix()));
}

/// Upper-left n x n block of a Haar unitary of size n + extra.
inline OverlapMatrix random_overlap(Eigen::Index n, Eigen::Index extra, Rng& rng) {
  return OverlapMatrix(haar_unitary(n + extra, rng).topLeftCorner(n, n));
}

}  // namespace detail

inline CriterionResult lemma_correspondence(std::uint64_t root) {
  CriterionResult r{1, "lemma correspondence (exact)", true, "", 0.0, 30.0};
  double worst_minor = 0.0;
  double worst_diag = 0.0;
  double worst_total = 0.0;
  std::size_t instances = 0;
  for (int dim : {4, 5, 6}) {
    for (int n : {2, 3}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::uint64_t s = detail::stream(1, instances++);
        Rng rng = make_rng(root, s);
        const GroundSpace space = random_weight_space(static_cast<std::size_t>(dim), rng);
        const auto c = lemma_check(random_orthonormal(space, n, root, s));
        worst_minor = std::max(worst_minor, c.max_minor_error);
        worst_diag = std::max(worst_diag, c.diagonal_mass);
        worst_total = std::max(worst_total, c.total_mass_error);
      }
    }
  }
  r.passed = worst_minor <= 1e-9 && worst_diag <= 1e-15 && worst_total <= 1e-10;
  r.detail = detail::Detail()("instances", instances)("max_minor_error", worst_minor)(
                 "max_diagonal_mass", worst_diag)("max_total_mass_error", worst_total)
                 .str();
  return r;
}

inline CriterionResult walsh_counterexample_check() {
  CriterionResult r{2, "walsh counterexample", true, "", 0.0, 1.0};
  const WalshReport w = walsh_counterexample();
  r.passed = w.covariance_first == Rational(-1, 4) && w.covariance_second == Rational(0) &&
             std::abs(w.falsified_rhs) <= 1e-12 && w.tv_exact > 0.0;
  const std::string cov =
      rational_string(w.covariance_first) + "," + rational_string(w.covariance_second);
  r.detail = detail::Detail()("covariances", cov)("falsified_rhs", w.falsified_rhs)(
                 "tv_exact", w.tv_exact)("wsharp_exact", w.wsharp_exact)
                 .str();
  return r;
}

inline CriterionResult sampler_correctness(std::uint64_t root) {
  CriterionResult r{3, "sampler correctness (statistical)", true, "", 0.0, 60.0};
  const std::uint64_t s = detail::stream(3, 0);
  Rng rng = make_rng(root, s);
  const GroundSpace space = random_weight_space(6, rng);
  const auto check = sampler_check(random_orthonormal(space, 2, root, s), 50'000, rng);
  r.passed = check.p_value >= 0.01 && check.max_abs_z <= 4.0 && !check.wrong_cardinality;
  r.detail = detail::Detail()("samples", check.samples)("chi2", check.chi2)("dof", check.dof)(
                 "p_value", check.p_value)("max_abs_z", check.max_abs_z)
                 .str();
  return r;
}

inline CriterionResult bound_validity(std::uint64_t root) {
  CriterionResult r{4, "bound validity sweep", true, "", 0.0, 300.0};
  const GroundSpace space = GroundSpace::uniform(6);
  double min_slack = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  std::size_t instances = 0;
  auto record = [&](const DppBoundsReport& rep) {
    min_slack = std::min({min_slack, rep.slack_tv, rep.slack_wsharp});
    if (rep.slack_tv < -1e-9 || rep.slack_wsharp < -1e-9) {
      ++violations;
    }
  };
  for (int n : {2, 3}) {
    for (int i = 0; i < 100; ++i) {
      const std::uint64_t s = detail::stream(4, instances++);
      record(verify_instance(MixedKernelSpec::projection(random_orthonormal(space, n, root, 2 * s)),
                             MixedKernelSpec::projection(random_orthonormal(space, n, root, 2 * s + 1))));
    }
  }
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t s = detail::stream(4, instances++);
    Rng rng = make_rng(root, s);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> la(4);
    std::vector<double> lb(4);
    for (int k = 0; k < 4; ++k) {
      la[static_cast<std::size_t>(k)] = unif(rng);
      lb[static_cast<std::size_t>(k)] = unif(rng);
    }
    record(verify_instance(MixedKernelSpec(random_orthonormal(space, 4, root, 2 * s), la),
                           MixedKernelSpec(random_orthonormal(space, 4, root, 2 * s + 1), lb)));
  }
  r.passed = violations == 0;
  r.detail = detail::Detail()("instances", instances)("violations", violations)("min_slack",
                                                                                 min_slack)
                 .str();
  return r;
}

inline CriterionResult quantum_sandwich(std::uint64_t root, const W1SolverOptions& opt = {}) {
  CriterionResult r{5, "quantum sandwich", true, "", 0.0, 0.0};
  constexpr double kTol = 1e-4;
  std::size_t violations = 0;
  std::size_t instances = 0;
  double max_gap = 0.0;
  auto pair = [&](int n, int dim) {
    const GroundSpace space = GroundSpace::uniform(static_cast<std::size_t>(dim));
    const std::uint64_t s = detail::stream(5, instances++);
    const auto a = random_orthonormal(space, n, root, 2 * s);
    const auto b = random_orthonormal(space, n, root, 2 * s + 1);
    const DensityOperator rho = full_state_vector(a);
    const DensityOperator sigma = full_state_vector(b);
    const double trace = trace_distance(rho, sigma);
    const W1Certificate c = w1_exact(rho, sigma, opt);
    const double upper = w1_upper_slater(overlap_matrix(a, b));
    max_gap = std::max(max_gap, c.gap);
    if (!(trace <= c.value + kTol && c.value <= upper + kTol && upper <= n * trace + kTol)) {
      ++violations;
    }
  };
  for (int i = 0; i < 40; ++i) pair(2, 4);
  for (int i = 0; i < 10; ++i) pair(3, 3);
  // W1(rho1 (x) omega, sigma1 (x) omega) = (1/2) tr|rho1 - sigma1|.
  double product_error = 0.0;
  for (int i = 0; i < 5; ++i) {
    Rng rng = make_rng(root, detail::stream(5, 1000 + static_cast<std::uint64_t>(i)));
    const auto r1 = detail::random_density(2, rng);
    const auto s1 = detail::random_density(2, rng);
    const auto omega = detail::random_density(2, rng);
    const W1Certificate c =
        w1_exact(detail::tensor(r1, omega), detail::tensor(s1, omega), opt);
    product_error = std::max(product_error, std::abs(c.value - trace_distance(r1, s1)));
  }
  r.passed = violations == 0 && product_error <= kTol;
  r.detail = detail::Detail()("pairs", instances)("violations", violations)(
                 "max_certified_gap", max_gap)("product_error", product_error)
                 .str();
  return r;
}

inline CriterionResult rdm_monotonicity(std::uint64_t root, const W1SolverOptions& opt = {}) {
  CriterionResult r{6, "rdm monotonicity", true, "", 0.0, 0.0};
  const GroundSpace space = GroundSpace::uniform(4);
  const double tol = 2.0 * std::max(opt.gap_tol, opt.abs_tol);
  std::size_t failures = 0;
  double min_increment = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::uint64_t s = detail::stream(6, seed);
    const auto rows = rdm_monotonicity_check(random_orthonormal(space, 2, root, 2 * s),
                                             random_orthonormal(space, 2, root, 2 * s + 1), opt);
    for (std::size_t k = 1; k < rows.size(); ++k) {
      min_increment = std::min(min_increment, rows[k].value - rows[k - 1].value);
      if (rows[k].value < rows[k - 1].value - tol) {
        ++failures;
      }
    }
  }
  const auto a = random_orthonormal(space, 2, root, detail::stream(6, 999));
  double self = 0.0;
  for (const auto& row : rdm_monotonicity_check(a, a, opt)) {
    self = std::max(self, std::abs(row.value));
  }
  r.passed = failures == 0 && self == 0.0;
  r.detail = detail::Detail()("seeds", 20)("failures", failures)("min_increment", min_increment)(
                 "identical_pair_max", self)
                 .str();
  return r;
}

inline CriterionResult gap_example() {
  CriterionResult r{7, "gap example", true, "", 0.0, 0.0};
  const auto rows = example_gap_table(20, EpsRule::geometric(0.5));
  const GapRow& last = rows.back();
  double product = 1.0;
  double eps_sum = 0.0;
  for (int i = 1; i <= 20; ++i) {
    product *= 1.0 - std::ldexp(1.0, -i);
    eps_sum += std::ldexp(1.0, -i);
  }
  const double det_error = std::abs(last.determinant - product);
  const double overlap_error = std::abs(last.mean_overlap - (1.0 - eps_sum / 20.0));
  r.passed = det_error <= 1e-9 && overlap_error <= 1e-12 && last.w1_upper_over_n < 0.33 &&
             last.trace_distance > 0.95;
  r.detail = detail::Detail()("determinant", last.determinant)("det_error", det_error)(
                 "overlap_error", overlap_error)("w1_upper_over_n", last.w1_upper_over_n)(
                 "trace_distance", last.trace_distance)
                 .str();
  return r;
}

inline CriterionResult stabilizer_oracle(std::uint64_t root) {
  CriterionResult r{8, "stabilizer maximization oracle", true, "", 0.0, 0.0};
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng = make_rng(root, detail::stream(8, i));
    const auto n = static_cast<Eigen::Index>(1 + i % 8);
    const auto extra = static_cast<Eigen::Index>(i % 3);
    const OverlapMatrix m = detail::random_overlap(n, extra, rng);
    const double ascent = alternating_unitary_ascent(m, rng).value;
    worst = std::max(worst, std::abs(ascent - stabilizer_max_overlap(m)));
  }
  r.passed = worst <= 1e-8;
  r.detail = detail::Detail()("matrices", 100)("max_error", worst).str();
  return r;
}

inline CriterionResult transport_solver(std::uint64_t root) {
  CriterionResult r{9, "transport solver", true, "", 0.0, 0.0};
  double worst_tv = 0.0;
  double worst_marginal = 0.0;
  double worst_duality = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng = make_rng(root, detail::stream(9, i));
    std::uniform_int_distribution<int> size(1, 25);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index k = size(rng);
    RVector p(k);
    RVector q(k);
    for (Eigen::Index x = 0; x < k; ++x) {
      p(x) = unif(rng) < 0.2 ? 0.0 : unif(rng);
      q(x) = unif(rng) < 0.2 ? 0.0 : unif(rng);
    }
    p(0) += 0.1;
    q(k - 1) += 0.1;
    p /= p.sum();
    q /= q.sum();
    RMatrix c = RMatrix::Ones(k, k) - RMatrix::Identity(k, k);
    const TransportResult t = ot_cost(p, q, CostMatrix(c));
    worst_tv = std::max(worst_tv, std::abs(t.cost - 0.5 * (p - q).cwiseAbs().sum()));
    worst_duality = std::max(worst_duality, std::abs(t.cost - t.dual_value));
    RVector rows = RVector::Zero(k);
    RVector cols = RVector::Zero(k);
    for (const auto& e : t.plan) {
      rows(e.row) += e.mass;
      cols(e.col) += e.mass;
    }
    worst_marginal = std::max({worst_marginal, (rows - p).cwiseAbs().maxCoeff(),
                               (cols - q).cwiseAbs().maxCoeff()});
  }
  r.passed = worst_tv <= 1e-10 && worst_marginal <= 1e-9 && worst_duality <= 1e-9;
  r.detail = detail::Detail()("pairs", 200)("max_tv_error", worst_tv)(
                 "max_marginal_error", worst_marginal)("max_duality_gap", worst_duality)
                 .str();
  return r;
}

/// Runs criteria 1..9 (or the listed subset), timing each one. A criterion
/// with a time limit fails if it runs over.
inline std::vector<CriterionResult> run(std::uint64_t root, const W1SolverOptions& opt = {},
                                        const std::vector<int>& only = {}) {
  const std::vector<std::function<CriterionResult()>> all = {
      [&] { return lemma_correspondence(root); },
      [&] { return walsh_counterexample_check(); },
      [&] { return sampler_correctness(root); },
      [&] { return bound_validity(root); },
      [&] { return quantum_sandwich(root, opt); },
      [&] { return rdm_monotonicity(root, opt); },
      [&] { return gap_example(); },
      [&] { return stabilizer_oracle(root); },
      [&] { return transport_solver(root); },
  };
  std::vector<CriterionResult> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = all[i]();
    } catch (const std::exception& e) {
      res.id = static_cast<int>(i + 1);
      res.name = "criterion " + std::to_string(i + 1);
      res.passed = false;
      res.detail = std::string("error: ") + e.what();
    }
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.time_limit > 0.0 && res.seconds > res.time_limit) {
      res.passed = false;
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace fermiflow::selftest
