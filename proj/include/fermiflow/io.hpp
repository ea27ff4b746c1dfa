#pragma once

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fermiflow/bounds.hpp"
#include "fermiflow/density_operator.hpp"
#include "fermiflow/dpp.hpp"
#include "fermiflow/ground_space.hpp"
#include "fermiflow/transport.hpp"
#include "fermiflow/w1_bounds.hpp"
#include "fermiflow/w1_exact.hpp"

namespace fermiflow::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

/// Row-major list of [re, im] rows.
inline Json matrix_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(complex_json(m(i, j)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json function_json(const GroundFunction& f) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    out.push_back(complex_json(f(i)));
  }
  return out;
}

inline Json space_json(const GroundSpace& s) {
  Json j{{"points", s.labels()}, {"weights", s.weights()}};
  if (s.has_coordinates()) {
    j["coordinates"] = s.coordinates();
  }
  return j;
}

/// {points, weights, functions: [[[re, im], ...], ...]}
inline Json family_json(const OrthonormalFamily& f) {
  Json j = space_json(f.space());
  Json fns = Json::array();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    fns.push_back(function_json(f.function(i)));
  }
  j["functions"] = std::move(fns);
  return j;
}

inline Json density_json(const DensityOperator& rho) {
  return {{"dims", rho.dims()}, {"matrix", matrix_json(rho.matrix())}};
}

inline Json plan_json(const TransportResult& t) {
  Json plan = Json::array();
  for (const auto& e : t.plan) {
    plan.push_back(Json::array({e.row, e.col, e.mass}));
  }
  return {{"cost", t.cost},
          {"dual_value", t.dual_value},
          {"rounding_residual", t.rounding_residual},
          {"plan", std::move(plan)}};
}

inline Json configuration_json(const PointConfiguration& c) { return c.points(); }

/// Exact laws as [[points, probability], ...]; empirical laws as
/// {"1,3": count, ...} with seed and sample_count.
inline Json distribution_json(const ConfigurationDistribution& d) {
  if (d.kind == DistributionKind::Exact) {
    Json entries = Json::array();
    for (const auto& [cfg, p] : d.probs) {
      entries.push_back(Json::array({cfg.points(), p}));
    }
    return {{"kind", "exact"}, {"probabilities", std::move(entries)}};
  }
  Json counts = Json::object();
  for (const auto& [cfg, c] : d.counts) {
    std::string key;
    for (int x : cfg.points()) {
      key += (key.empty() ? "" : ",") + std::to_string(x);
    }
    counts[key] = c;
  }
  return {{"kind", "empirical"},
          {"seed", d.seed},
          {"sample_count", d.sample_count},
          {"counts", std::move(counts)}};
}

inline Json certificate_json(const W1Certificate& c, bool with_parts = false) {
  Json j{{"value", c.value},
         {"costs", c.costs},
         {"dual_witness_value", c.dual_witness_value},
         {"gap", c.gap},
         {"sum_residual", c.sum_residual},
         {"partial_trace_residual", c.partial_trace_residual},
         {"dr_residual", c.dr_residual},
         {"iterations", c.iterations}};
  if (with_parts) {
    Json parts = Json::array();
    for (const auto& x : c.primal_parts) {
      parts.push_back(matrix_json(x));
    }
    j["primal_parts"] = std::move(parts);
  }
  return j;
}

inline Json slater_report_json(const SlaterBoundsReport& r) {
  return {{"n", r.n},
          {"trace_distance", r.trace_distance},
          {"w1_upper", r.w1_upper},
          {"n_times_trace", r.n_times_trace},
          {"stabilizer_overlap", r.stabilizer_overlap},
          {"singular_values", r.singular_values}};
}

inline Json estimate_json(const Estimate& e) {
  Json j{{"value", e.value},
         {"kind", e.kind == DistributionKind::Exact ? "exact" : "empirical"}};
  if (e.ci) {
    j["ci95"] = Json::array({e.ci->first, e.ci->second});
  }
  return j;
}

inline Json bounds_report_json(const DppBoundsReport& r) {
  return {{"tv", estimate_json(r.tv)},
          {"wsharp", estimate_json(r.wsharp)},
          {"tv_bound", r.tv_bound},
          {"wsharp_bound", r.wsharp_bound},
          {"tv_bound_paired", r.tv_bound_paired},
          {"wsharp_bound_paired", r.wsharp_bound_paired},
          {"slack_tv", r.slack_tv},
          {"slack_wsharp", r.slack_wsharp},
          {"indices", r.indices},
          {"dim", r.dim},
          {"seed", r.seed}};
}

inline Json walsh_json(const WalshReport& r) {
  return {{"covariance_first", rational_string(r.covariance_first)},
          {"covariance_second", rational_string(r.covariance_second)},
          {"covariance_first_float", r.covariance_first_float},
          {"covariance_second_float", r.covariance_second_float},
          {"falsified_rhs", r.falsified_rhs},
          {"tv_exact", r.tv_exact},
          {"wsharp_exact", r.wsharp_exact},
          {"tv_bound", r.tv_bound},
          {"wsharp_bound", r.wsharp_bound}};
}

/// Shortest decimal that round-trips a double.
inline std::string number(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) {
      break;
    }
  }
  return buf;
}

/// Minimal CSV table: fixed header, rows of preformatted cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
      throw DimensionError("CsvTable: row width does not match header");
    }
    rows_.push_back(std::move(row));
  }

  void write(std::ostream& os) const {
    write_row(os, header_);
    for (const auto& r : rows_) {
      write_row(os, r);
    }
  }

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t size() const { return rows_.size(); }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << (i ? "," : "") << quote(r[i]);
    }
    os << '\n';
  }

  static std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
      return cell;
    }
    std::string q = "\"";
    for (char ch : cell) {
      q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    }
    return q + "\"";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace fermiflow::io
