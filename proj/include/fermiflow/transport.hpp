#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "fermiflow/types.hpp"

namespace fermiflow {

/// Finitely supported probability distribution keyed by outcome. Keys
/// absent from the map carry zero mass, so two distributions are always
/// compared on their merged support.
template <class Key>
using Distribution = std::map<Key, double>;

template <class Key>
double total_mass(const Distribution<Key>& p) {
  double s = 0.0;
  for (const auto& [k, v] : p) {
    s += v;
  }
  return s;
}

template <class Key>
void check_masses(const Distribution<Key>& p) {
  for (const auto& [k, v] : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("distribution has a negative or non-finite mass");
    }
  }
}

/// (1/2) sum |p - q| over the merged support.
template <class Key>
double total_variation(const Distribution<Key>& p, const Distribution<Key>& q) {
  check_masses(p);
  check_masses(q);
  double acc = 0.0;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() || iq != q.end()) {
    if (iq == q.end() || (ip != p.end() && ip->first < iq->first)) {
      acc += ip->second;
      ++ip;
    } else if (ip == p.end() || iq->first < ip->first) {
      acc += iq->second;
      ++iq;
    } else {
      acc += std::abs(ip->second - iq->second);
      ++ip;
      ++iq;
    }
  }
  return 0.5 * acc;
}

/// sup over f: E -> [0,1] of int f d(p - q); attained by the indicator of
/// {p > q}.
template <class Key>
double total_variation_sup(const Distribution<Key>& p,
                           const Distribution<Key>& q) {
  double acc = 0.0;
  for (const auto& [k, v] : p) {
    const auto it = q.find(k);
    const double w = it == q.end() ? 0.0 : it->second;
    acc += std::max(0.0, v - w);
  }
  return acc;
}

/// Nonnegative finite transport costs between a row support and a column
/// support.
class CostMatrix {
 public:
  explicit CostMatrix(RMatrix costs) : costs_(std::move(costs)) {
    if (costs_.size() > 0 &&
        (!costs_.allFinite() || costs_.minCoeff() < 0.0)) {
      throw DomainError("CostMatrix: entries must be finite and nonnegative");
    }
  }
  [[nodiscard]] const RMatrix& values() const { return costs_; }
  [[nodiscard]] Eigen::Index rows() const { return costs_.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return costs_.cols(); }
  [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const {
    return costs_(i, j);
  }

 private:
  RMatrix costs_;
};

struct PlanEntry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double mass = 0.0;
};

struct TransportResult {
  double cost = 0.0;
  std::vector<PlanEntry> plan;  // nonzero entries, sorted by (row, col)
  RVector row_potential;        // Kantorovich potentials u, v with
  RVector col_potential;        // u_i + v_j <= c_ij
  double dual_value = 0.0;
  double rounding_residual = 0.0;  // max |integer mass / scale - input mass|
  long augmentations = 0;
};

inline constexpr std::int64_t kMassScale = 1'000'000'000'000;  // 1e12
inline constexpr Eigen::Index kSupportCap = 2000;
inline constexpr double kMassMismatchTol = 1e-9;

namespace detail {

/// Largest-remainder rounding of p / sum(p) to integers summing to kMassScale.
inline std::vector<std::int64_t> scale_masses(const RVector& p, double& residual) {
  const double total = p.sum();
  std::vector<std::int64_t> out(static_cast<std::size_t>(p.size()));
  std::vector<std::pair<double, std::size_t>> rem;
  std::int64_t assigned = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double exact = p(i) / total * static_cast<double>(kMassScale);
    const double fl = std::floor(exact);
    out[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(fl);
    assigned += static_cast<std::int64_t>(fl);
    rem.emplace_back(exact - fl, static_cast<std::size_t>(i));
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::int64_t left = kMassScale - assigned;
  for (std::size_t k = 0; left > 0 && k < rem.size(); ++k, --left) {
    ++out[rem[k].second];
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    residual = std::max(residual,
                        std::abs(static_cast<double>(out[static_cast<std::size_t>(i)]) /
                                     static_cast<double>(kMassScale) -
                                 p(i)));
  }
  return out;
}

}  // namespace detail

/// Exact optimal transport between mass vectors p (rows) and q (columns).
///
/// Masses are rescaled to integers with common denominator 1e12 and the
/// transportation problem is solved as a min-cost flow by successive
/// shortest augmenting paths (dense Dijkstra on reduced costs). Ties are
/// broken towards the lowest (row, col) index so results are reproducible.
inline TransportResult ot_cost(const RVector& p, const RVector& q,
                               const CostMatrix& c) {
  const Eigen::Index R = p.size();
  const Eigen::Index C = q.size();
  if (c.rows() != R || c.cols() != C) {
    throw DimensionError("ot_cost: cost matrix does not match supports");
  }
  if (R > kSupportCap || C > kSupportCap) {
    throw CapExceededError("ot_cost support", static_cast<double>(std::max(R, C)),
                           static_cast<double>(kSupportCap));
  }
  if (R == 0 || C == 0) {
    throw DomainError("ot_cost: empty support");
  }
  if ((p.array() < 0).any() || (q.array() < 0).any() || !p.allFinite() ||
      !q.allFinite()) {
    throw DomainError("ot_cost: negative or non-finite mass");
  }
  if (std::abs(p.sum() - q.sum()) > kMassMismatchTol || !(p.sum() > 0.0)) {
    throw DomainError("ot_cost: total masses differ (infeasible)");
  }

  TransportResult out;
  std::vector<std::int64_t> supply = detail::scale_masses(p, out.rounding_residual);
  std::vector<std::int64_t> demand = detail::scale_masses(q, out.rounding_residual);
  const std::vector<std::int64_t> supply0 = supply;
  const std::vector<std::int64_t> demand0 = demand;

  const RMatrix& cost = c.values();
  std::vector<std::int64_t> flow(static_cast<std::size_t>(R * C), 0);
  auto f = [&](Eigen::Index i, Eigen::Index j) -> std::int64_t& {
    return flow[static_cast<std::size_t>(i * C + j)];
  };

  // Node ids: rows 0..R-1, columns R..R+C-1.
  const Eigen::Index V = R + C;
  RVector pot = RVector::Zero(V);
  for (Eigen::Index j = 0; j < C; ++j) {
    pot(R + j) = cost.col(j).minCoeff();
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(V));
  std::vector<Eigen::Index> prev(static_cast<std::size_t>(V));
  std::vector<char> done(static_cast<std::size_t>(V));

  std::int64_t remaining = kMassScale;
  while (remaining > 0) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (Eigen::Index i = 0; i < R; ++i) {
      if (supply[static_cast<std::size_t>(i)] > 0) {
        dist[static_cast<std::size_t>(i)] = 0.0;
      }
    }
    Eigen::Index target = -1;
    while (true) {
      Eigen::Index u = -1;
      double best = inf;
      for (Eigen::Index v = 0; v < V; ++v) {
        if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < best) {
          best = dist[static_cast<std::size_t>(v)];
          u = v;
        }
      }
      if (u < 0) {
        break;
      }
      done[static_cast<std::size_t>(u)] = 1;
      if (u >= R && demand[static_cast<std::size_t>(u - R)] > 0) {
        target = u;
        break;
      }
      if (u < R) {
        for (Eigen::Index j = 0; j < C; ++j) {
          const Eigen::Index v = R + j;
          if (done[static_cast<std::size_t>(v)]) {
            continue;
          }
          const double red = std::max(0.0, cost(u, j) + pot(u) - pot(v));
          if (best + red < dist[static_cast<std::size_t>(v)]) {
            dist[static_cast<std::size_t>(v)] = best + red;
            prev[static_cast<std::size_t>(v)] = u;
          }
        }
      } else {
        const Eigen::Index j = u - R;
        for (Eigen::Index i = 0; i < R; ++i) {
          if (done[static_cast<std::size_t>(i)] || f(i, j) == 0) {
            continue;
          }
          const double red = std::max(0.0, -cost(i, j) + pot(u) - pot(i));
          if (best + red < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = best + red;
            prev[static_cast<std::size_t>(i)] = u;
          }
        }
      }
    }
    if (target < 0) {
      throw Error("ot_cost: no augmenting path (internal error)");
    }
    const double t = dist[static_cast<std::size_t>(target)];
    for (Eigen::Index v = 0; v < V; ++v) {
      pot(v) += std::min(dist[static_cast<std::size_t>(v)], t);
    }
    // Bottleneck along the path.
    std::int64_t delta = demand[static_cast<std::size_t>(target - R)];
    Eigen::Index v = target;
    while (prev[static_cast<std::size_t>(v)] >= 0) {
      const Eigen::Index u = prev[static_cast<std::size_t>(v)];
      if (u >= R) {  // reverse edge column u -> row v
        delta = std::min(delta, f(v, u - R));
      }
      v = u;
    }
    delta = std::min(delta, supply[static_cast<std::size_t>(v)]);
    supply[static_cast<std::size_t>(v)] -= delta;
    demand[static_cast<std::size_t>(target - R)] -= delta;
    v = target;
    while (prev[static_cast<std::size_t>(v)] >= 0) {
      const Eigen::Index u = prev[static_cast<std::size_t>(v)];
      if (u < R) {
        f(u, v - R) += delta;
      } else {
        f(v, u - R) -= delta;
      }
      v = u;
    }
    remaining -= delta;
    ++out.augmentations;
  }

  const double scale = static_cast<double>(kMassScale);
  for (Eigen::Index i = 0; i < R; ++i) {
    for (Eigen::Index j = 0; j < C; ++j) {
      if (f(i, j) > 0) {
        const double m = static_cast<double>(f(i, j)) / scale;
        out.plan.push_back({i, j, m});
        out.cost += m * cost(i, j);
      }
    }
  }
  out.row_potential = -pot.head(R);
  out.col_potential = pot.tail(C);
  // Shift so the potentials are small; u + v is unchanged.
  const double shift = out.row_potential.size() > 0 ? out.row_potential.minCoeff() : 0.0;
  out.row_potential.array() -= shift;
  out.col_potential.array() += shift;
  for (Eigen::Index i = 0; i < R; ++i) {
    out.dual_value += static_cast<double>(supply0[static_cast<std::size_t>(i)]) / scale *
                      out.row_potential(i);
  }
  for (Eigen::Index j = 0; j < C; ++j) {
    out.dual_value += static_cast<double>(demand0[static_cast<std::size_t>(j)]) / scale *
                      out.col_potential(j);
  }
  return out;
}

template <class Key>
struct LabelledTransport {
  TransportResult result;
  std::vector<Key> rows;
  std::vector<Key> cols;
};

/// Optimal transport between two keyed distributions with a cost function
/// on keys. Zero-mass keys are dropped from the supports.
template <class Key, class CostFn>
LabelledTransport<Key> ot_cost(const Distribution<Key>& p,
                               const Distribution<Key>& q, CostFn&& cost) {
  LabelledTransport<Key> out;
  std::vector<double> pm;
  std::vector<double> qm;
  for (const auto& [k, v] : p) {
    if (v < 0.0) {
      throw DomainError("ot_cost: negative mass");
    }
    if (v > 0.0) {
      out.rows.push_back(k);
      pm.push_back(v);
    }
  }
  for (const auto& [k, v] : q) {
    if (v < 0.0) {
      throw DomainError("ot_cost: negative mass");
    }
    if (v > 0.0) {
      out.cols.push_back(k);
      qm.push_back(v);
    }
  }
  RMatrix cm(static_cast<Eigen::Index>(out.rows.size()),
             static_cast<Eigen::Index>(out.cols.size()));
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    for (std::size_t j = 0; j < out.cols.size(); ++j) {
      cm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(cost(out.rows[i], out.cols[j]));
    }
  }
  out.result = ot_cost(Eigen::Map<RVector>(pm.data(), static_cast<Eigen::Index>(pm.size())),
                       Eigen::Map<RVector>(qm.data(), static_cast<Eigen::Index>(qm.size())),
                       CostMatrix(std::move(cm)));
  return out;
}

/// Number of coordinates in which two equal-length tuples differ.
template <class Tuple>
int hamming_cost(const Tuple& x, const Tuple& y) {
  if (x.size() != y.size()) {
    throw DimensionError("hamming_cost: tuples differ in length");
  }
  int d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d += x[i] != y[i] ? 1 : 0;
  }
  return d;
}

/// |A symmetric-difference B| for finite sets given as sorted ranges.
template <class SortedRange>
int symmetric_difference_cost(const SortedRange& a, const SortedRange& b) {
  int d = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++d;
      ++ia;
    } else if (*ib < *ia) {
      ++d;
      ++ib;
    } else {
      ++ia;
      ++ib;
    }
  }
  d += static_cast<int>(std::distance(ia, a.end()) + std::distance(ib, b.end()));
  return d;
}

/// 1 if x != y else 0.
template <class Key>
int trivial_cost(const Key& x, const Key& y) {
  return x == y ? 0 : 1;
}

}  // namespace fermiflow
