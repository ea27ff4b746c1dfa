#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <map>
#include <vector>

#include "fermiflow/density_operator.hpp"
#include "fermiflow/linalg.hpp"
#include "fermiflow/slater.hpp"
#include "fermiflow/transport.hpp"
#include "fermiflow/types.hpp"
#include "fermiflow/w1_bounds.hpp"

namespace fermiflow {

struct W1SolverOptions {
  double rho_penalty = 0.03;  // Douglas-Rachford step, in units of ||rho - sigma||_F
  double relaxation = 1.7;
  double abs_tol = 1e-8;      // residual ||x - y||_F <= abs sqrt(N) + rel max(||x||,||y||)
  double rel_tol = 1e-6;
  double gap_tol = 1e-6;      // stop once the certified duality gap is below this
  long max_iter = 50'000;
  Eigen::Index dim_cap = 64;
  int check_every = 20;
};

/// Result of an exact quantum W1 solve: a feasible decomposition
/// rho - sigma = sum_i X_i with tr_i X_i = 0 (whose cost is an upper bound)
/// and a Lipschitz-certified dual observable (a lower bound).
struct W1Certificate {
  double value = 0.0;                 // sum_i (1/2) tr|X_i|
  std::vector<CMatrix> primal_parts;  // X_i
  std::vector<double> costs;          // c_i = (1/2) tr|X_i|
  double dual_witness_value = 0.0;
  double gap = 0.0;                   // value - dual_witness_value
  double sum_residual = 0.0;          // max |sum_i X_i - (rho - sigma)|
  double partial_trace_residual = 0.0;  // max_i max |tr_i X_i|
  double dr_residual = 0.0;
  long iterations = 0;
};

/// Orthogonal (Hilbert-Schmidt) projections attached to the constraint
/// tr_i X = 0 on a product space. Q_i X = (1/d_i) 1_i (x) tr_i X projects onto
/// operators acting trivially on site i; P_i = 1 - Q_i. The Q_i commute, and
/// S = sum_i P_i acts as n - |T| on the sector where exactly the sites in T
/// carry the identity component.
class SiteProjections {
 public:
  explicit SiteProjections(Dims dims) : dims_(std::move(dims)) {}

  [[nodiscard]] const Dims& dims() const { return dims_; }
  [[nodiscard]] std::size_t sites() const { return dims_.size(); }

  [[nodiscard]] CMatrix q(const CMatrix& x, std::size_t site) const {
    return embed_identity(trace_out_site(x, dims_, site), dims_, site) /
           static_cast<double>(dims_[site]);
  }
  [[nodiscard]] CMatrix p(const CMatrix& x, std::size_t site) const {
    return x - q(x, site);
  }

  /// Pseudo-inverse of S = sum_i P_i applied to x.
  ///
  /// With Q_U the product of Q_i over U, the sector projector for T is
  /// sum_{U >= T} (-1)^{|U|-|T|} Q_U, so S^+ = sum_U c_|U| Q_U with
  /// c_u = sum_{t <= u, t < n} binom(u,t) (-1)^{u-t} / (n - t).
  [[nodiscard]] CMatrix s_pinv(const CMatrix& x) const {
    const std::size_t n = sites();
    std::vector<double> coeff(n + 1, 0.0);
    for (std::size_t u = 0; u <= n; ++u) {
      double binom = 1.0;
      for (std::size_t t = 0; t <= u; ++t) {
        if (t < n) {
          const double sign = ((u - t) % 2 == 0) ? 1.0 : -1.0;
          coeff[u] += sign * binom / static_cast<double>(n - t);
        }
        binom = binom * static_cast<double>(u - t) / static_cast<double>(t + 1);
      }
    }
    const std::uint32_t count = std::uint32_t{1} << n;
    std::vector<CMatrix> averaged(count);
    averaged[0] = x;
    CMatrix out = coeff[0] * x;
    for (std::uint32_t u = 1; u < count; ++u) {
      const auto low = static_cast<std::size_t>(std::countr_zero(u));
      averaged[u] = q(averaged[u & (u - 1)], low);
      out += coeff[static_cast<std::size_t>(std::popcount(u))] * averaged[u];
    }
    return out;
  }

  /// Nearest point (in the summed Hilbert-Schmidt norm) to `y` among
  /// decompositions with sum_i X_i = target and tr_i X_i = 0. Writes the
  /// multiplier of the sum constraint to `multiplier` if given.
  [[nodiscard]] std::vector<CMatrix> project(const std::vector<CMatrix>& y,
                                             const CMatrix& target,
                                             CMatrix* multiplier = nullptr) const {
    CMatrix rhs = target;
    for (std::size_t i = 0; i < sites(); ++i) {
      rhs -= p(y[i], i);
    }
    const CMatrix lambda = s_pinv(rhs);
    std::vector<CMatrix> out;
    out.reserve(sites());
    for (std::size_t i = 0; i < sites(); ++i) {
      out.push_back(linalg::hermitian_part(p(y[i] + lambda, i)));
    }
    if (multiplier != nullptr) {
      *multiplier = lambda;
    }
    return out;
  }

 private:
  Dims dims_;
};

namespace detail {

/// Eigenvalue soft-thresholding: prox of t * (1/2)||.||_tr at a Hermitian x.
inline CMatrix shrink_eigenvalues(const CMatrix& x, double threshold) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(linalg::hermitian_part(x));
  RVector lam = es.eigenvalues();
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    const double a = std::abs(lam(k)) - threshold;
    lam(k) = a > 0.0 ? std::copysign(a, lam(k)) : 0.0;
  }
  return es.eigenvectors() * lam.cast<Complex>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Upper estimate of the quantum Lipschitz constant
/// 2 max_i min_{H_i} ||H - 1_i (x) H_i||_inf using two candidate H_i per
/// site: the partial average Q_i H and Q_i (H - hint_i).
inline double lipschitz_estimate(const SiteProjections& proj, const CMatrix& h,
                                 const std::vector<CMatrix>* hints) {
  double worst = 0.0;
  for (std::size_t i = 0; i < proj.sites(); ++i) {
    double best = linalg::hermitian_operator_norm(h - proj.q(h, i));
    if (hints != nullptr) {
      best = std::min(best, linalg::hermitian_operator_norm(
                                h - proj.q(h - (*hints)[i], i)));
    }
    worst = std::max(worst, best);
  }
  return 2.0 * worst;
}

}  // namespace detail

/// Lower bound on the W1 distance from a candidate observable h:
/// |tr[h (rho - sigma)]| / ||h||_Lip, with the Lipschitz constant estimated
/// from above by explicit choices of H_i.
inline double observable_witness(const SiteProjections& proj, const CMatrix& h,
                                 const CMatrix& diff,
                                 const std::vector<CMatrix>* hints = nullptr) {
  const double lip = detail::lipschitz_estimate(proj, h, hints);
  if (!(lip > 1e-300)) {
    return 0.0;
  }
  return std::abs((h * diff).trace().real()) / lip;
}

/// Quantum W1 distance (half-trace-norm convention) between two states on
/// the same product space, by Douglas-Rachford splitting:
/// minimize sum_i (1/2)||X_i||_tr subject to sum_i X_i = rho - sigma and
/// tr_i X_i = 0. The trace-norm prox is eigenvalue shrinkage, the
/// constraint set is handled by SiteProjections::project.
inline W1Certificate w1_exact(const DensityOperator& rho, const DensityOperator& sigma,
                              const W1SolverOptions& opt = {}) {
  if (rho.dims() != sigma.dims()) {
    throw DimensionError("w1_exact: states live on different spaces");
  }
  const Dims& dims = rho.dims();
  const Eigen::Index N = total_dim(dims);
  if (N > opt.dim_cap) {
    throw CapExceededError("w1_exact total dimension", static_cast<double>(N),
                           static_cast<double>(opt.dim_cap));
  }
  const CMatrix diff = rho.matrix() - sigma.matrix();
  const std::size_t n = dims.size();
  const SiteProjections proj(dims);
  const double trace_dist = linalg::half_trace_norm(diff);

  auto finish = [&](std::vector<CMatrix> parts, double witness, double dr_res, long it) {
    W1Certificate c;
    c.primal_parts = std::move(parts);
    CMatrix sum = CMatrix::Zero(N, N);
    for (std::size_t i = 0; i < n; ++i) {
      const double ci = linalg::half_trace_norm(c.primal_parts[i]);
      c.costs.push_back(ci);
      c.value += ci;
      sum += c.primal_parts[i];
      c.partial_trace_residual = std::max(
          c.partial_trace_residual,
          linalg::max_abs(trace_out_site(c.primal_parts[i], dims, i)));
    }
    c.sum_residual = linalg::max_abs(sum - diff);
    c.dual_witness_value = std::max(witness, trace_dist);
    c.gap = c.value - c.dual_witness_value;
    c.dr_residual = dr_res;
    c.iterations = it;
    return c;
  };

  if (n == 1 || trace_dist == 0.0) {
    std::vector<CMatrix> parts(n, CMatrix::Zero(N, N));
    if (n == 1) {
      parts[0] = diff;
    }
    return finish(std::move(parts), trace_dist, 0.0, 0);
  }

  // The prox threshold must scale with rho - sigma for the iteration count
  // to be scale free.
  const double gamma = opt.rho_penalty * diff.norm();
  const double alpha = opt.relaxation;
  std::vector<CMatrix> z(n, diff / static_cast<double>(n));
  std::vector<CMatrix> x(n);
  std::vector<CMatrix> y;
  double residual = 0.0;
  double best_witness = 0.0;
  double last_gap = 0.0;
  for (long it = 1; it <= opt.max_iter; ++it) {
    std::vector<CMatrix> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = detail::shrink_eigenvalues(z[i], 0.5 * gamma);
      v[i] = 2.0 * x[i] - z[i];
    }
    y = proj.project(v, diff);
    residual = 0.0;
    double xnorm = 0.0;
    double ynorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual += (x[i] - y[i]).squaredNorm();
      xnorm += x[i].squaredNorm();
      ynorm += y[i].squaredNorm();
    }
    residual = std::sqrt(residual);
    const bool small = residual <= opt.abs_tol * std::sqrt(static_cast<double>(n * N * N)) +
                                       opt.rel_tol * std::sqrt(std::max(xnorm, ynorm));
    const bool check = small || it % opt.check_every == 0 || it == opt.max_iter;
    if (check) {
      // (z_i - x_i) / gamma lies in the subdifferential of (1/2)||.||_tr at
      // x_i; their common component is the dual observable.
      std::vector<CMatrix> hints(n);
      CMatrix rhs = CMatrix::Zero(N, N);
      for (std::size_t i = 0; i < n; ++i) {
        hints[i] = (z[i] - x[i]) / gamma;
        rhs += proj.p(hints[i], i);
      }
      const CMatrix h = linalg::hermitian_part(proj.s_pinv(rhs));
      best_witness = std::max(best_witness, observable_witness(proj, h, diff, &hints));
      double value = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        value += linalg::half_trace_norm(y[i]);
      }
      last_gap = value - std::max(best_witness, trace_dist);
      if (small || last_gap <= opt.gap_tol) {
        return finish(std::move(y), best_witness, residual, it);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      z[i] += alpha * (y[i] - x[i]);
    }
  }
  throw ConvergenceError("w1_exact did not converge", residual, last_gap, opt.max_iter);
}

/// Product of per-site projective measurements: site i is measured in the
/// orthonormal basis given by the columns of bases[i] (computational basis
/// when bases is empty).
struct ProductMeasurement {
  Dims dims;
  std::vector<CMatrix> bases;

  [[nodiscard]] CMatrix unitary() const {
    CMatrix u = CMatrix::Identity(1, 1);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const CMatrix b = bases.empty() ? CMatrix(CMatrix::Identity(dims[i], dims[i])) : bases[i];
      u = linalg::kron(u, b);
    }
    return u;
  }
};

/// Outcome probabilities, indexed like the tensor basis.
inline RVector measurement_probabilities(const DensityOperator& state,
                                         const ProductMeasurement& m) {
  if (state.dims() != m.dims) {
    throw DimensionError("measurement: dims mismatch");
  }
  const CMatrix u = m.unitary();
  return (u.adjoint() * state.matrix() * u).diagonal().real().cwiseMax(0.0);
}

/// Law of the outcome tuple (x_1..x_n) of a product measurement.
inline Distribution<std::vector<int>> measurement_distribution(
    const DensityOperator& state, const ProductMeasurement& m) {
  const RVector p = measurement_probabilities(state, m);
  Distribution<std::vector<int>> out;
  std::vector<Eigen::Index> t(m.dims.size(), 0);
  Eigen::Index idx = 0;
  while (true) {
    if (p(idx) > 0.0) {
      out[std::vector<int>(t.begin(), t.end())] = p(idx);
    }
    ++idx;
    std::size_t j = t.size();
    bool more = false;
    while (j-- > 0) {
      if (++t[j] < m.dims[j]) {
        more = true;
        break;
      }
      t[j] = 0;
    }
    if (!more) {
      break;
    }
  }
  return out;
}

/// Largest |f(x) - f(x')| over outcome pairs differing in one coordinate.
inline double hamming_lipschitz_constant(const std::vector<double>& f, const Dims& dims) {
  const Eigen::Index total = total_dim(dims);
  if (static_cast<Eigen::Index>(f.size()) != total) {
    throw DimensionError("function size does not match the outcome grid");
  }
  double worst = 0.0;
  Eigen::Index stride = 1;
  for (std::size_t site = dims.size(); site-- > 0;) {
    const Eigen::Index d = dims[site];
    for (Eigen::Index idx = 0; idx < total; ++idx) {
      const Eigen::Index digit = (idx / stride) % d;
      for (Eigen::Index other = digit + 1; other < d; ++other) {
        const Eigen::Index j = idx + (other - digit) * stride;
        worst = std::max(worst, std::abs(f[static_cast<std::size_t>(idx)] -
                                         f[static_cast<std::size_t>(j)]));
      }
    }
    stride *= d;
  }
  return worst;
}

/// tr[(Pi f)(rho - sigma)] for a Hamming-1-Lipschitz outcome function f:
/// a lower bound on the quantum W1 distance.
inline double dual_witness_from_classical(const std::vector<double>& f,
                                          const ProductMeasurement& m,
                                          const DensityOperator& rho,
                                          const DensityOperator& sigma) {
  if (hamming_lipschitz_constant(f, m.dims) > 1.0 + 1e-12) {
    throw DomainError("dual_witness_from_classical: f is not 1-Lipschitz for the Hamming distance");
  }
  const RVector diff = measurement_probabilities(rho, m) - measurement_probabilities(sigma, m);
  return Eigen::Map<const RVector>(f.data(), static_cast<Eigen::Index>(f.size())).dot(diff);
}

struct RdmMonotonicityRow {
  std::size_t k = 0;
  double w1 = 0.0;     // W1 between normalized k-RDMs
  double value = 0.0;  // w1 / k
  double gap = 0.0;    // certified duality gap of the solve
};

/// (1/k) W1(normalized Gamma^(k) of A, normalized Gamma^(k) of B) for
/// k = 1..n.
inline std::vector<RdmMonotonicityRow> rdm_monotonicity_check(
    const OrthonormalFamily& a, const OrthonormalFamily& b,
    const W1SolverOptions& opt = {}) {
  const DensityOperator ra = full_state_vector(a, static_cast<double>(opt.dim_cap));
  const DensityOperator rb = full_state_vector(b, static_cast<double>(opt.dim_cap));
  std::vector<RdmMonotonicityRow> rows;
  for (std::size_t k = 1; k <= ra.subsystems(); ++k) {
    const W1Certificate c = w1_exact(reduced_density_matrix(ra, k),
                                     reduced_density_matrix(rb, k), opt);
    rows.push_back({k, c.value, c.value / static_cast<double>(k), c.gap});
  }
  return rows;
}

}  // namespace fermiflow
