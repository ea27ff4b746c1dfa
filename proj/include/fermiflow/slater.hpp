#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fermiflow/density_operator.hpp"
#include "fermiflow/ground_space.hpp"
#include "fermiflow/linalg.hpp"
#include "fermiflow/types.hpp"

namespace fermiflow {

/// n x n matrix of one-particle overlaps M(i, j) = <psi_i|phi_j>.
/// Its singular values never exceed one: it is a block of a unitary change
/// of frames.
class OverlapMatrix {
 public:
  static constexpr double kSingularTol = 1e-9;

  explicit OverlapMatrix(CMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
      throw DimensionError("OverlapMatrix: matrix is not square");
    }
    if (entries_.size() > 0 &&
        linalg::singular_values(entries_).maxCoeff() > 1.0 + kSingularTol) {
      throw DomainError("OverlapMatrix: singular value exceeds one");
    }
  }

  [[nodiscard]] const CMatrix& entries() const { return entries_; }
  [[nodiscard]] Eigen::Index size() const { return entries_.rows(); }

  /// Restriction to the rows and columns listed in `indices`.
  [[nodiscard]] OverlapMatrix restricted(
      const std::vector<Eigen::Index>& indices) const {
    const auto k = static_cast<Eigen::Index>(indices.size());
    CMatrix sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        sub(a, b) = entries_(indices[static_cast<std::size_t>(a)],
                             indices[static_cast<std::size_t>(b)]);
      }
    }
    return OverlapMatrix(std::move(sub));
  }

 private:
  CMatrix entries_;
};

inline OverlapMatrix overlap_matrix(const OrthonormalFamily& a,
                                    const OrthonormalFamily& b) {
  if (!(a.space() == b.space())) {
    throw DimensionError("overlap_matrix: families live on different spaces");
  }
  if (a.size() != b.size()) {
    throw DimensionError("overlap_matrix: families have different sizes");
  }
  return OverlapMatrix(a.matrix().adjoint() *
                       a.space().weight_vector().asDiagonal() * b.matrix());
}

/// |<Psi|Phi>|^2 = |det M|^2, clamped to [0, 1]. Computed from the
/// log-determinant so long products of near-one factors stay accurate.
inline double slater_fidelity(const OverlapMatrix& m) {
  const auto ld = linalg::log_determinant(m.entries());
  if (ld.is_zero) {
    return 0.0;
  }
  return std::clamp(std::exp(2.0 * ld.log_abs), 0.0, 1.0);
}

/// sqrt(1 - |det M|^2): trace distance between the two Slater states.
inline double trace_distance_slater(const OverlapMatrix& m) {
  return std::sqrt(std::max(0.0, 1.0 - slater_fidelity(m)));
}

/// Kernel K(x, y) on a ground space, as a |E| x |E| matrix. Integral
/// operators act through the weights: (K f)(x) = sum_y K(x, y) f(y) mu(y)
/// up to the conjugation convention below.
struct Kernel {
  GroundSpace space;
  CMatrix matrix;
};

/// K(x, y) = sum_l conj(psi_l(x)) psi_l(y): the projection onto the span of
/// a rank-n orthonormal family.
struct ProjectionKernel : Kernel {
  Eigen::Index rank = 0;
};

inline ProjectionKernel projection_kernel(const OrthonormalFamily& a) {
  const CMatrix& psi = a.matrix();
  ProjectionKernel k;
  k.space = a.space();
  k.matrix = psi.conjugate() * psi.transpose();
  k.rank = a.size();
  return k;
}

/// Kernel sum_i lambda_i conj(psi_i(x)) psi_i(y) of a family with weights.
inline Kernel weighted_kernel(const OrthonormalFamily& a, const RVector& lambdas) {
  if (lambdas.size() != a.size()) {
    throw DimensionError("weighted_kernel: one eigenvalue per function required");
  }
  const CMatrix& psi = a.matrix();
  return {a.space(), psi.conjugate() * lambdas.cast<Complex>().asDiagonal() *
                         psi.transpose()};
}

/// Matrix of the kernel's integral operator in the sqrt(mu)-folded basis,
/// i.e. sum_l |psi_l><psi_l| with |psi_l> = (psi_l(x) sqrt(mu(x)))_x.
inline CMatrix kernel_operator_matrix(const Kernel& k) {
  const RVector s = k.space.sqrt_weights();
  return s.asDiagonal() * CMatrix(k.matrix.transpose()) * s.asDiagonal();
}

/// sum_x K(x, x) mu(x).
inline double weighted_trace(const Kernel& k) {
  return (k.matrix.diagonal().real().cwiseProduct(k.space.weight_vector())).sum();
}

inline double factorial(Eigen::Index n) {
  return std::tgamma(static_cast<double>(n) + 1.0);
}

/// (1/sqrt(n!)) det(psi_i(x_j)) for an ordered tuple of point indices.
inline Complex slater_amplitude(const OrthonormalFamily& a,
                                const std::vector<Eigen::Index>& tuple) {
  const Eigen::Index n = a.size();
  if (static_cast<Eigen::Index>(tuple.size()) != n) {
    throw DimensionError("slater_amplitude: tuple length differs from n");
  }
  CMatrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index x = tuple[static_cast<std::size_t>(j)];
    if (x < 0 || x >= a.space().dim()) {
      throw DimensionError("slater_amplitude: point index out of range");
    }
    m.col(j) = a.matrix().row(x).transpose();
  }
  return linalg::determinant(m) / std::sqrt(factorial(n));
}

inline constexpr double kStateVectorCap = 1e5;
inline constexpr double kDensityDimCap = 4096;

/// Advances an odometer over {0..base-1}^n; false after the last tuple.
inline bool next_tuple(std::vector<Eigen::Index>& t, Eigen::Index base) {
  for (std::size_t j = t.size(); j-- > 0;) {
    if (++t[j] < base) {
      return true;
    }
    t[j] = 0;
  }
  return false;
}

/// Slater state vector on the n-fold tensor space, with sqrt(mu) folded
/// into each factor so the standard inner product applies.
inline CVector slater_state_vector(const OrthonormalFamily& a,
                                   double cap = kStateVectorCap) {
  const Eigen::Index n = a.size();
  const Eigen::Index d = a.space().dim();
  const double required = std::pow(static_cast<double>(d), static_cast<double>(n));
  if (required > cap) {
    throw CapExceededError("slater_state_vector", required, cap);
  }
  const CMatrix folded = a.folded();
  const double norm = 1.0 / std::sqrt(factorial(n));
  CVector v(static_cast<Eigen::Index>(required));
  std::vector<Eigen::Index> t(static_cast<std::size_t>(n), 0);
  Eigen::Index idx = 0;
  CMatrix m(n, n);
  do {
    for (Eigen::Index j = 0; j < n; ++j) {
      m.col(j) = folded.row(t[static_cast<std::size_t>(j)]).transpose();
    }
    v(idx++) = linalg::determinant(m) * norm;
  } while (next_tuple(t, d));
  return v;
}

/// |Psi><Psi| as a DensityOperator on n copies of C^|E|.
inline DensityOperator full_state_vector(const OrthonormalFamily& a,
                                         double dim_cap = kDensityDimCap) {
  const double required = std::pow(static_cast<double>(a.space().dim()),
                                   static_cast<double>(a.size()));
  if (required > dim_cap) {
    throw CapExceededError("full_state_vector", required, dim_cap);
  }
  const CVector v = slater_state_vector(a, dim_cap);
  return DensityOperator::pure(Dims(static_cast<std::size_t>(a.size()), a.space().dim()), v);
}

/// binom(n,k)^{-1} Gamma^(k): the state traced down to its first k
/// subsystems.
inline DensityOperator reduced_density_matrix(const DensityOperator& state,
                                              std::size_t k) {
  return reduce_to_first(state, k);
}

}  // namespace fermiflow
