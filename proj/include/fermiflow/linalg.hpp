#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "fermiflow/types.hpp"

namespace fermiflow::linalg {

/// Determinant stored as log|det| and a unit phase, so products of many
/// factors close to one do not underflow.
struct LogDeterminant {
  double log_abs = 0.0;
  Complex phase{1.0, 0.0};
  bool is_zero = false;

  [[nodiscard]] double abs() const {
    return is_zero ? 0.0 : std::exp(log_abs);
  }
  [[nodiscard]] Complex value() const {
    return is_zero ? Complex{0.0, 0.0} : phase * std::exp(log_abs);
  }
};

/// LU with partial pivoting, accumulating magnitude and phase separately.
inline LogDeterminant log_determinant(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("log_determinant: matrix is not square");
  }
  LogDeterminant out;
  if (m.rows() == 0) {
    return out;
  }
  Eigen::PartialPivLU<CMatrix> lu(m);
  const CMatrix& packed = lu.matrixLU();
  out.phase = Complex(lu.permutationP().determinant(), 0.0);
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const Complex u = packed(i, i);
    const double a = std::abs(u);
    if (a == 0.0 || !std::isfinite(a)) {
      out.is_zero = true;
      out.log_abs = -std::numeric_limits<double>::infinity();
      out.phase = Complex{0.0, 0.0};
      return out;
    }
    out.log_abs += std::log(a);
    out.phase *= u / a;
  }
  return out;
}

inline Complex determinant(const CMatrix& m) {
  return log_determinant(m).value();
}

inline RVector singular_values(const CMatrix& m) {
  if (m.size() == 0) {
    return RVector(0);
  }
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues();
}

inline double nuclear_norm(const CMatrix& m) {
  return singular_values(m).sum();
}

inline CMatrix hermitian_part(const CMatrix& x) {
  return (x + x.adjoint()) * 0.5;
}

inline double hermiticity_defect(const CMatrix& x) {
  return (x - x.adjoint()).cwiseAbs().maxCoeff();
}

inline RVector hermitian_eigenvalues(const CMatrix& x) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(x),
                                            Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// (1/2) tr|X| for Hermitian X. This half-normalized trace norm is the
/// convention used everywhere in the library.
inline double half_trace_norm(const CMatrix& x) {
  if (x.size() == 0) {
    return 0.0;
  }
  return 0.5 * hermitian_eigenvalues(x).cwiseAbs().sum();
}

/// Largest |eigenvalue| of a Hermitian matrix.
inline double hermitian_operator_norm(const CMatrix& x) {
  if (x.size() == 0) {
    return 0.0;
  }
  return hermitian_eigenvalues(x).cwiseAbs().maxCoeff();
}

inline double max_abs(const CMatrix& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

/// Extends the first `filled` orthonormal columns of q to a full unitary by
/// Gram-Schmidt against the standard basis.
inline void complete_unitary(CMatrix& q, Eigen::Index filled) {
  const Eigen::Index n = q.rows();
  Eigen::Index next = filled;
  for (Eigen::Index e = 0; e < n && next < q.cols(); ++e) {
    CVector v = CVector::Unit(n, e);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < next; ++j) {
        v -= q.col(j) * q.col(j).dot(v);
      }
    }
    const double norm = v.norm();
    if (norm > 1e-8) {
      q.col(next++) = v / norm;
    }
  }
}

/// Unitary factor W of the polar decomposition X = W P, computed from the
/// Hermitian eigendecomposition of X^dagger X. Zero singular directions are
/// completed arbitrarily.
inline CMatrix polar_unitary(const CMatrix& x) {
  const Eigen::Index n = x.rows();
  if (x.cols() != n) {
    throw DimensionError("polar_unitary: matrix is not square");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(x.adjoint() * x);
  const CMatrix& v = es.eigenvectors();
  const RVector& lam = es.eigenvalues();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  CMatrix u = CMatrix::Zero(n, n);
  Eigen::Index filled = 0;
  // Largest eigenvalues last; take them first.
  CMatrix vs = CMatrix::Zero(n, n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const double s2 = lam(k);
    if (s2 <= 1e-24 * scale) {
      break;
    }
    CVector col = x * v.col(k);
    for (Eigen::Index j = 0; j < filled; ++j) {
      col -= u.col(j) * u.col(j).dot(col);
    }
    const double norm = col.norm();
    if (norm <= 1e-14 * std::sqrt(scale)) {
      break;
    }
    u.col(filled) = col / norm;
    vs.col(filled) = v.col(k);
    ++filled;
  }
  const Eigen::Index used = filled;
  for (Eigen::Index k = n - 1 - used; k >= 0; --k) {
    vs.col(filled++) = v.col(k);
  }
  complete_unitary(u, used);
  return u * vs.adjoint();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace fermiflow::linalg
