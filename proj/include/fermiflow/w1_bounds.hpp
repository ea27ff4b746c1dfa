#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fermiflow/ground_space.hpp"
#include "fermiflow/linalg.hpp"
#include "fermiflow/random.hpp"
#include "fermiflow/slater.hpp"

namespace fermiflow {

/// max over stabilizer unitaries V, U of |(1/n) sum_i <V psi_i|U phi_i>|.
///
/// Restricted to the two spans, V and U act as arbitrary n x n unitaries
/// A and B, the sum becomes tr(A^dagger M B), and the maximum of its modulus
/// over unitaries is the nuclear norm of M. Hence the value is the mean
/// singular value of M.
inline double stabilizer_max_overlap(const OverlapMatrix& m) {
  if (m.size() == 0) {
    return 1.0;
  }
  return linalg::nuclear_norm(m.entries()) / static_cast<double>(m.size());
}

/// n sqrt(1 - s^2) with s the stabilizer-maximized mean overlap.
inline double w1_upper_slater(const OverlapMatrix& m) {
  const double s = stabilizer_max_overlap(m);
  return static_cast<double>(m.size()) * std::sqrt(std::max(0.0, 1.0 - s * s));
}

struct AscentOptions {
  int max_iterations = 200;
  double relative_tol = 1e-12;
  int restarts = 5;
};

struct AscentResult {
  double value = 0.0;  // max found of |tr(A^dagger M B)| / n
  CMatrix a;
  CMatrix b;
  int iterations = 0;
};

/// Alternating maximization of |tr(A^dagger M B)| over unitaries: with B
/// fixed, A is the polar factor of M B; with A fixed, B is the adjoint of
/// the polar factor of A^dagger M. Starts from random unitaries drawn from
/// `rng`. Never uses an SVD; the objective is evaluated directly.
inline AscentResult alternating_unitary_ascent(const OverlapMatrix& m, Rng& rng,
                                               const AscentOptions& opt = {}) {
  const Eigen::Index n = m.size();
  const CMatrix& mat = m.entries();
  AscentResult best;
  if (n == 0) {
    best.value = 1.0;
    return best;
  }
  auto objective = [&](const CMatrix& a, const CMatrix& b) {
    return std::abs((a.adjoint() * mat * b).trace()) / static_cast<double>(n);
  };
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    CMatrix b = haar_unitary(n, rng);
    CMatrix a = haar_unitary(n, rng);
    double prev = objective(a, b);
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
      a = linalg::polar_unitary(mat * b);
      b = linalg::polar_unitary(a.adjoint() * mat).adjoint();
      const double cur = objective(a, b);
      const bool done = std::abs(cur - prev) <= opt.relative_tol * std::max(1.0, cur);
      prev = cur;
      if (done) {
        ++it;
        break;
      }
    }
    if (prev > best.value || r == 0) {
      best.value = prev;
      best.a = a;
      best.b = b;
      best.iterations = it;
    }
  }
  return best;
}

/// Largest |tr(A^dagger M B)| / n over `samples` pairs of Haar unitaries.
/// A lower estimate of the stabilizer maximum.
inline double random_unitary_probe(const OverlapMatrix& m, Rng& rng,
                                   int samples) {
  const Eigen::Index n = m.size();
  if (n == 0) {
    return 1.0;
  }
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const CMatrix a = haar_unitary(n, rng);
    const CMatrix b = haar_unitary(n, rng);
    best = std::max(best, std::abs((a.adjoint() * m.entries() * b).trace()) /
                              static_cast<double>(n));
  }
  return best;
}

struct SlaterBoundsReport {
  Eigen::Index n = 0;
  double trace_distance = 0.0;
  double w1_upper = 0.0;
  double n_times_trace = 0.0;
  double stabilizer_overlap = 0.0;
  std::vector<double> singular_values;
};

inline constexpr double kChainTol = 1e-9;

/// Trace distance, the Slater W1 upper bound and n times the trace distance
/// for two families. Throws DomainError if the chain
/// trace <= w1_upper <= n * trace is violated beyond 1e-9 in squared form.
inline SlaterBoundsReport slater_bounds_report(const OrthonormalFamily& a,
                                               const OrthonormalFamily& b) {
  const OverlapMatrix m = overlap_matrix(a, b);
  SlaterBoundsReport r;
  r.n = m.size();
  r.trace_distance = trace_distance_slater(m);
  r.stabilizer_overlap = stabilizer_max_overlap(m);
  r.w1_upper = w1_upper_slater(m);
  r.n_times_trace = static_cast<double>(r.n) * r.trace_distance;
  const RVector sv = linalg::singular_values(m.entries());
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  // Compared on the radicands: near coincident spans the square roots turn
  // 1e-16 roundoff into 1e-8.
  const double fidelity = slater_fidelity(m);
  const double s2 = r.stabilizer_overlap * r.stabilizer_overlap;
  const double n2 = static_cast<double>(r.n * r.n);
  if (1.0 - fidelity > n2 * (1.0 - s2) + kChainTol || fidelity > s2 + kChainTol) {
    throw DomainError("slater_bounds_report: bound chain violated");
  }
  return r;
}

/// Summable perturbation sizes eps_1, eps_2, ... (1-based index).
struct EpsRule {
  std::string name;
  std::function<double(int)> eps;

  static EpsRule geometric(double ratio) {
    return {"geometric:" + std::to_string(ratio),
            [ratio](int i) { return std::pow(ratio, i); }};
  }
  static EpsRule power(double exponent) {
    return {"power:" + std::to_string(exponent),
            [exponent](int i) { return std::pow(static_cast<double>(i), -exponent); }};
  }

  /// Parses "geometric:<r>" (0 < r < 1) or "power:<p>" (p > 1).
  static EpsRule parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const double param =
        colon == std::string::npos ? 0.5 : std::stod(text.substr(colon + 1));
    if (kind == "geometric") {
      if (!(param > 0.0 && param < 1.0)) {
        throw DomainError("geometric eps rule needs a ratio in (0, 1)");
      }
      return geometric(param);
    }
    if (kind == "power") {
      if (!(param > 1.0)) {
        throw DomainError("power eps rule needs an exponent > 1");
      }
      return power(param);
    }
    throw DomainError("unknown eps rule '" + text + "'");
  }
};

struct GapRow {
  int n = 0;
  double determinant = 0.0;    // |det <psi_i|phi_j>|
  double mean_overlap = 0.0;   // (1/n) sum_i <psi_i|phi_i>, identity stabilizers
  double stabilizer_overlap = 0.0;
  double trace_distance = 0.0;
  double w1_upper_over_n = 0.0;
};

/// For n = 1..n_max: orthonormal psi_1..psi_2n (standard basis on 2n unit
/// points) and phi_i = (1-eps_i) psi_i + sqrt(1-(1-eps_i)^2) psi_{n+i},
/// renormalized. Reports the determinant and mean-overlap columns together
/// with the resulting trace distance and W1 bound per particle.
inline std::vector<GapRow> example_gap_table(int n_max, const EpsRule& rule) {
  std::vector<GapRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    const GroundSpace space = GroundSpace::uniform(static_cast<std::size_t>(2 * n),
                                                   static_cast<double>(2 * n));
    CMatrix psi = CMatrix::Identity(2 * n, n);
    CMatrix phi = CMatrix::Zero(2 * n, n);
    for (int i = 0; i < n; ++i) {
      const double eps = rule.eps(i + 1);
      if (!(eps >= 0.0 && eps <= 1.0)) {
        throw DomainError("eps values must lie in [0, 1]");
      }
      const double c = 1.0 - eps;
      phi(i, i) = c;
      phi(n + i, i) = std::sqrt(std::max(0.0, 1.0 - c * c));
      phi.col(i) /= phi.col(i).norm();
    }
    const OrthonormalFamily a(space, psi);
    const OrthonormalFamily b(space, phi);
    const OverlapMatrix m = overlap_matrix(a, b);
    GapRow row;
    row.n = n;
    row.determinant = std::sqrt(slater_fidelity(m));
    row.mean_overlap = m.entries().trace().real() / n;
    row.stabilizer_overlap = stabilizer_max_overlap(m);
    row.trace_distance = trace_distance_slater(m);
    row.w1_upper_over_n = w1_upper_slater(m) / n;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fermiflow
