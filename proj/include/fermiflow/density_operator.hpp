#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fermiflow/linalg.hpp"
#include "fermiflow/types.hpp"

namespace fermiflow {

using Dims = std::vector<Eigen::Index>;

inline Eigen::Index total_dim(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), Eigen::Index{1},
                         std::multiplies<>());
}

/// Hermitian positive semidefinite unit-trace operator on a tensor product
/// of subsystems with the given dimensions (first subsystem most
/// significant in the basis ordering).
class DensityOperator {
 public:
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenTol = 1e-10;

  DensityOperator(Dims dims, CMatrix matrix) : dims_(std::move(dims)) {
    const Eigen::Index d = total_dim(dims_);
    if (matrix.rows() != d || matrix.cols() != d) {
      throw DimensionError("DensityOperator: matrix size does not match dims");
    }
    if (linalg::hermiticity_defect(matrix) > 1e-9) {
      throw DomainError("DensityOperator: matrix is not Hermitian");
    }
    matrix_ = linalg::hermitian_part(matrix);
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > kTraceTol) {
      throw DomainError("DensityOperator: trace is " + std::to_string(tr));
    }
    if (d > 0 && linalg::hermitian_eigenvalues(matrix_).minCoeff() < -kEigenTol) {
      throw DomainError("DensityOperator: matrix is not positive semidefinite");
    }
  }

  /// |v><v| for a unit vector v.
  static DensityOperator pure(Dims dims, const CVector& v) {
    return {std::move(dims), v * v.adjoint()};
  }

  [[nodiscard]] const Dims& dims() const { return dims_; }
  [[nodiscard]] const CMatrix& matrix() const { return matrix_; }
  [[nodiscard]] std::size_t subsystems() const { return dims_.size(); }

 private:
  Dims dims_;
  CMatrix matrix_;
};

/// Traces out subsystem `site` of a square matrix on the product `dims`.
inline CMatrix trace_out_site(const CMatrix& op, const Dims& dims,
                              std::size_t site) {
  if (site >= dims.size()) {
    throw DimensionError("partial trace: subsystem index out of range");
  }
  const Eigen::Index d = dims[site];
  Eigen::Index right = 1;
  for (std::size_t j = site + 1; j < dims.size(); ++j) {
    right *= dims[j];
  }
  const Eigen::Index left = total_dim(dims) / (d * right);
  const Eigen::Index out_dim = left * right;
  CMatrix out = CMatrix::Zero(out_dim, out_dim);
  for (Eigen::Index l1 = 0; l1 < left; ++l1) {
    for (Eigen::Index l2 = 0; l2 < left; ++l2) {
      for (Eigen::Index a = 0; a < d; ++a) {
        out.block(l1 * right, l2 * right, right, right) +=
            op.block((l1 * d + a) * right, (l2 * d + a) * right, right, right);
      }
    }
  }
  return out;
}

/// Inverse-shaped companion of trace_out_site: places the identity on
/// subsystem `site`, i.e. returns 1_site (x) y with y acting on the other
/// subsystems (in their original order).
inline CMatrix embed_identity(const CMatrix& y, const Dims& dims,
                              std::size_t site) {
  if (site >= dims.size()) {
    throw DimensionError("embed_identity: subsystem index out of range");
  }
  const Eigen::Index d = dims[site];
  Eigen::Index right = 1;
  for (std::size_t j = site + 1; j < dims.size(); ++j) {
    right *= dims[j];
  }
  const Eigen::Index full = total_dim(dims);
  const Eigen::Index left = full / (d * right);
  if (y.rows() != left * right || y.cols() != left * right) {
    throw DimensionError("embed_identity: operand has the wrong size");
  }
  CMatrix out = CMatrix::Zero(full, full);
  for (Eigen::Index l1 = 0; l1 < left; ++l1) {
    for (Eigen::Index l2 = 0; l2 < left; ++l2) {
      for (Eigen::Index a = 0; a < d; ++a) {
        out.block((l1 * d + a) * right, (l2 * d + a) * right, right, right) =
            y.block(l1 * right, l2 * right, right, right);
      }
    }
  }
  return out;
}

/// Traces out every subsystem listed in `which`. The result acts on the
/// remaining subsystems in their original order; tracing out all of them
/// gives a 1 x 1 matrix holding the trace.
inline CMatrix partial_trace(const CMatrix& op, const Dims& dims,
                             const std::vector<std::size_t>& which) {
  if (op.rows() != total_dim(dims) || op.cols() != op.rows()) {
    throw DimensionError("partial trace: matrix does not match dims");
  }
  std::set<std::size_t> sites(which.begin(), which.end());
  if (!sites.empty() && *sites.rbegin() >= dims.size()) {
    throw DimensionError("partial trace: subsystem index out of range");
  }
  CMatrix cur = op;
  Dims cur_dims = dims;
  for (auto it = sites.rbegin(); it != sites.rend(); ++it) {
    cur = trace_out_site(cur, cur_dims, *it);
    cur_dims.erase(cur_dims.begin() + static_cast<std::ptrdiff_t>(*it));
  }
  return cur;
}

/// Normalized partial trace keeping the first k subsystems.
inline DensityOperator reduce_to_first(const DensityOperator& state,
                                       std::size_t k) {
  const std::size_t n = state.subsystems();
  if (k < 1 || k > n) {
    throw DomainError("reduced density matrix: k must lie in [1, n]");
  }
  std::vector<std::size_t> drop;
  for (std::size_t j = k; j < n; ++j) {
    drop.push_back(j);
  }
  Dims kept(state.dims().begin(), state.dims().begin() + static_cast<std::ptrdiff_t>(k));
  return {std::move(kept), partial_trace(state.matrix(), state.dims(), drop)};
}

/// (1/2) tr|rho - sigma|.
inline double trace_distance(const DensityOperator& rho,
                             const DensityOperator& sigma) {
  if (rho.dims() != sigma.dims()) {
    throw DimensionError("trace_distance: states live on different spaces");
  }
  return linalg::half_trace_norm(rho.matrix() - sigma.matrix());
}

}  // namespace fermiflow
