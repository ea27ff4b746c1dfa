#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "fermiflow/types.hpp"

namespace fermiflow {

/// SplitMix64 finalizer; used to derive independent stream seeds from a
/// (root seed, stream index) pair.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream) {
  return mix64(mix64(root) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

/// Engine for stream `stream` of root seed `root`. Distinct streams are
/// reproducible and can be consumed in any order or in parallel.
inline Rng make_rng(std::uint64_t root, std::uint64_t stream = 0) {
  return Rng(stream_seed(root, stream));
}

/// Matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1).
inline CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols,
                                Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = Complex(re, im);
    }
  }
  return m;
}

/// Haar-distributed n x n unitary (QR of a Ginibre matrix with the phases of
/// R's diagonal absorbed).
inline CMatrix haar_unitary(Eigen::Index n, Rng& rng) {
  const CMatrix g = complex_gaussian(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) {
      q.col(j) *= r(j, j) / a;
    }
  }
  return q;
}

}  // namespace fermiflow
