#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fermiflow/linalg.hpp"
#include "fermiflow/random.hpp"
#include "fermiflow/types.hpp"

namespace fermiflow {

/// Finite measure space: labelled points with positive masses and optional
/// real coordinates (one per point). Every integral over the space is a
/// weighted sum.
class GroundSpace {
 public:
  GroundSpace() = default;

  GroundSpace(std::vector<std::string> labels, std::vector<double> weights,
              std::vector<double> coordinates = {})
      : labels_(std::move(labels)),
        weights_(std::move(weights)),
        coordinates_(std::move(coordinates)) {
    if (labels_.size() != weights_.size()) {
      throw DimensionError("GroundSpace: labels and weights differ in length");
    }
    if (!coordinates_.empty() && coordinates_.size() != labels_.size()) {
      throw DimensionError("GroundSpace: coordinates and labels differ in length");
    }
    for (double w : weights_) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw DomainError("GroundSpace: weights must be positive and finite");
      }
    }
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size()) {
      throw DomainError("GroundSpace: point labels must be distinct");
    }
  }

  /// `size` points labelled "0".."size-1", each with mass total/size.
  static GroundSpace uniform(std::size_t size, double total = 1.0) {
    std::vector<std::string> labels;
    labels.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      labels.push_back(std::to_string(i));
    }
    return {std::move(labels),
            std::vector<double>(size, total / static_cast<double>(size))};
  }

  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] Eigen::Index dim() const {
    return static_cast<Eigen::Index>(weights_.size());
  }
  [[nodiscard]] const std::vector<std::string>& labels() const {
    return labels_;
  }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] double weight(std::size_t i) const { return weights_.at(i); }
  [[nodiscard]] bool has_coordinates() const { return !coordinates_.empty(); }
  [[nodiscard]] const std::vector<double>& coordinates() const {
    return coordinates_;
  }

  [[nodiscard]] RVector weight_vector() const {
    return Eigen::Map<const RVector>(weights_.data(), dim());
  }
  [[nodiscard]] RVector sqrt_weights() const {
    return weight_vector().cwiseSqrt();
  }

  friend bool operator==(const GroundSpace&, const GroundSpace&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<double> weights_;
  std::vector<double> coordinates_;
};

/// Complex values, one per point of a GroundSpace.
using GroundFunction = CVector;

inline void check_function(const GroundFunction& f, const GroundSpace& s) {
  if (f.size() != s.dim()) {
    throw DimensionError("function has " + std::to_string(f.size()) +
                         " values on a space of " + std::to_string(s.size()) +
                         " points");
  }
}

/// <f|g> = sum_x conj(f(x)) g(x) mu(x).
inline Complex inner_product(const GroundFunction& f, const GroundFunction& g,
                             const GroundSpace& s) {
  check_function(f, s);
  check_function(g, s);
  Complex acc{0.0, 0.0};
  for (Eigen::Index x = 0; x < f.size(); ++x) {
    acc += std::conj(f(x)) * g(x) * s.weights()[static_cast<std::size_t>(x)];
  }
  return acc;
}

/// Gram matrix of the columns of `columns` (one function per column).
inline CMatrix gram_matrix(const CMatrix& columns, const GroundSpace& s) {
  if (columns.rows() != s.dim()) {
    throw DimensionError("gram_matrix: functions do not live on the space");
  }
  return columns.adjoint() * s.weight_vector().asDiagonal() * columns;
}

inline CMatrix stack_functions(const std::vector<GroundFunction>& fns,
                               const GroundSpace& s) {
  CMatrix m(s.dim(), static_cast<Eigen::Index>(fns.size()));
  for (std::size_t j = 0; j < fns.size(); ++j) {
    check_function(fns[j], s);
    m.col(static_cast<Eigen::Index>(j)) = fns[j];
  }
  return m;
}

inline CMatrix gram_matrix(const std::vector<GroundFunction>& fns,
                           const GroundSpace& s) {
  return gram_matrix(stack_functions(fns, s), s);
}

inline constexpr double kDefaultOrthonormalTol = 1e-9;

/// n functions on a ground space whose Gram matrix is the identity within
/// `tol` (max-entry norm). Stored column-wise as a |E| x n matrix.
class OrthonormalFamily {
 public:
  OrthonormalFamily(GroundSpace space, CMatrix functions,
                    double tol = kDefaultOrthonormalTol)
      : space_(std::move(space)), functions_(std::move(functions)), tol_(tol) {
    if (functions_.rows() != space_.dim()) {
      throw DimensionError("OrthonormalFamily: functions do not live on the space");
    }
    if (functions_.cols() > space_.dim()) {
      throw DimensionError("OrthonormalFamily: more functions than points");
    }
    const double defect = gram_defect();
    if (defect > tol_) {
      throw DomainError("OrthonormalFamily: Gram matrix deviates from identity by " +
                        std::to_string(defect));
    }
  }

  OrthonormalFamily(GroundSpace space, const std::vector<GroundFunction>& fns,
                    double tol = kDefaultOrthonormalTol)
      : OrthonormalFamily(space, stack_functions(fns, space), tol) {}

  [[nodiscard]] const GroundSpace& space() const { return space_; }
  [[nodiscard]] Eigen::Index size() const { return functions_.cols(); }
  [[nodiscard]] const CMatrix& matrix() const { return functions_; }
  [[nodiscard]] GroundFunction function(Eigen::Index i) const {
    return functions_.col(i);
  }
  [[nodiscard]] double tol() const { return tol_; }

  /// Columns scaled by sqrt(mu): orthonormal in the standard inner product.
  [[nodiscard]] CMatrix folded() const {
    return space_.sqrt_weights().asDiagonal() * functions_;
  }

  [[nodiscard]] double gram_defect() const {
    if (functions_.cols() == 0) {
      return 0.0;
    }
    const CMatrix g = gram_matrix(functions_, space_);
    return (g - CMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }

  /// The family {sum_i psi_i u(i, j)}_j for an n x n unitary u; spans the
  /// same subspace.
  [[nodiscard]] OrthonormalFamily recombined(const CMatrix& u) const {
    if (u.rows() != size() || u.cols() != size()) {
      throw DimensionError("recombined: unitary has the wrong size");
    }
    return {space_, functions_ * u, tol_};
  }

  [[nodiscard]] OrthonormalFamily subfamily(
      const std::vector<Eigen::Index>& indices) const {
    CMatrix m(space_.dim(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
      m.col(static_cast<Eigen::Index>(j)) = functions_.col(indices[j]);
    }
    return {space_, std::move(m), tol_};
  }

 private:
  GroundSpace space_;
  CMatrix functions_;
  double tol_;
};

/// Modified Gram-Schmidt in the weighted inner product, two passes per
/// vector, fixed input order.
inline OrthonormalFamily orthonormalize(const CMatrix& columns,
                                        const GroundSpace& s,
                                        double tol = kDefaultOrthonormalTol) {
  if (columns.rows() != s.dim()) {
    throw DimensionError("orthonormalize: functions do not live on the space");
  }
  const RVector w = s.weight_vector();
  auto ip = [&w](const CVector& a, const CVector& b) {
    return (a.conjugate().cwiseProduct(b).cwiseProduct(w.cast<Complex>())).sum();
  };
  CMatrix q(columns.rows(), columns.cols());
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    CVector v = columns.col(k);
    const double input_norm = std::sqrt(std::max(0.0, ip(v, v).real()));
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < k; ++j) {
        v -= q.col(j) * ip(q.col(j), v);
      }
    }
    const double residual = std::sqrt(std::max(0.0, ip(v, v).real()));
    if (residual < tol * std::max(1.0, input_norm)) {
      throw RankDeficiencyError(static_cast<std::size_t>(k), residual);
    }
    q.col(k) = v / residual;
  }
  return {s, std::move(q), tol};
}

inline OrthonormalFamily orthonormalize(const std::vector<GroundFunction>& fns,
                                        const GroundSpace& s,
                                        double tol = kDefaultOrthonormalTol) {
  return orthonormalize(stack_functions(fns, s), s, tol);
}

/// Values of the first 2^levels Walsh functions in sequency order on the
/// dyadic grid of 2^levels cells: row k holds w_k, entries are +-1.
/// w_k is the product of the Rademacher functions selected by the Gray code
/// of k, where Rademacher r_1 flips sign at 1/2, r_2 at 1/4 and 3/4, etc.
inline std::vector<std::vector<int>> walsh_sign_table(int levels) {
  if (levels < 1 || levels > 20) {
    throw DomainError("walsh_sign_table: levels must lie in [1, 20]");
  }
  const std::size_t cells = std::size_t{1} << levels;
  std::vector<std::vector<int>> table(cells, std::vector<int>(cells));
  for (std::size_t k = 0; k < cells; ++k) {
    const std::size_t gray = k ^ (k >> 1);
    for (std::size_t j = 0; j < cells; ++j) {
      int parity = 0;
      for (int bit = 0; bit < levels; ++bit) {
        if ((gray >> bit) & 1U) {
          // r_{bit+1} reads binary digit bit+1 of the cell's left endpoint.
          parity ^= static_cast<int>((j >> (levels - 1 - bit)) & 1U);
        }
      }
      table[k][j] = parity ? -1 : 1;
    }
  }
  return table;
}

struct WalshFamily {
  GroundSpace space;
  std::vector<GroundFunction> functions;
};

/// Uniform-weight dyadic grid on [0,1] with cell-centre coordinates, plus
/// the Walsh functions w_0 .. w_{2^levels - 1} in sequency order.
inline WalshFamily walsh_family(int levels) {
  const auto table = walsh_sign_table(levels);
  const std::size_t cells = table.size();
  const double h = 1.0 / static_cast<double>(cells);
  std::vector<std::string> labels;
  std::vector<double> coords;
  for (std::size_t j = 0; j < cells; ++j) {
    labels.push_back("[" + std::to_string(j) + "/" + std::to_string(cells) +
                     "," + std::to_string(j + 1) + "/" +
                     std::to_string(cells) + ")");
    coords.push_back((static_cast<double>(j) + 0.5) * h);
  }
  WalshFamily out{GroundSpace(std::move(labels), std::vector<double>(cells, h),
                              std::move(coords)),
                  {}};
  for (const auto& row : table) {
    GroundFunction f(static_cast<Eigen::Index>(cells));
    for (std::size_t j = 0; j < cells; ++j) {
      f(static_cast<Eigen::Index>(j)) = Complex(row[j], 0.0);
    }
    out.functions.push_back(std::move(f));
  }
  return out;
}

/// Haar-random n-frame: i.i.d. complex Gaussians divided by sqrt(mu) (so the
/// folded vectors are standard Gaussian), then orthonormalized.
inline OrthonormalFamily random_orthonormal(const GroundSpace& s,
                                            Eigen::Index n, std::uint64_t seed,
                                            std::uint64_t stream = 0) {
  if (n > s.dim() || n < 0) {
    throw DimensionError("random_orthonormal: n = " + std::to_string(n) +
                         " exceeds dimension " + std::to_string(s.size()));
  }
  Rng rng = make_rng(seed, stream);
  CMatrix g = complex_gaussian(s.dim(), n, rng);
  const RVector inv_sqrt = s.sqrt_weights().cwiseInverse();
  g = inv_sqrt.asDiagonal() * g;
  return orthonormalize(g, s);
}

}  // namespace fermiflow
