#pragma once

#include <complex>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fermiflow {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (lengths, ground spaces, subsystem dims).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition failed: non-orthonormal input, negative mass,
/// non-Hermitian operator and the like.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Orthonormalization found a (numerically) dependent input function.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(std::size_t index, double residual)
      : Error("rank deficiency at function " + std::to_string(index) +
              " (residual norm " + std::to_string(residual) + ")"),
        index_(index),
        residual_(residual) {}

  [[nodiscard]] std::size_t index() const { return index_; }
  [[nodiscard]] double residual() const { return residual_; }

 private:
  std::size_t index_;
  double residual_;
};

/// An enumeration or solver size cap would be exceeded.
class CapExceededError : public Error {
 public:
  CapExceededError(const std::string& what, double required, double cap)
      : Error(what + ": requires " + format(required) + ", cap is " +
              format(cap)),
        required_(required),
        cap_(cap) {}

  [[nodiscard]] double required() const { return required_; }
  [[nodiscard]] double cap() const { return cap_; }

 private:
  static std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }
  double required_;
  double cap_;
};

/// Iterative solver stopped at its iteration limit.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double primal_residual,
                   double gap, long iterations)
      : Error(what + " (residual " + std::to_string(primal_residual) +
              ", gap " + std::to_string(gap) + ", iterations " +
              std::to_string(iterations) + ")"),
        primal_residual_(primal_residual),
        gap_(gap),
        iterations_(iterations) {}

  [[nodiscard]] double primal_residual() const { return primal_residual_; }
  [[nodiscard]] double gap() const { return gap_; }
  [[nodiscard]] long iterations() const { return iterations_; }

 private:
  double primal_residual_;
  double gap_;
  long iterations_;
};

}  // namespace fermiflow
