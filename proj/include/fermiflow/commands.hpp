#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "fermiflow/bounds.hpp"
#include "fermiflow/config.hpp"
#include "fermiflow/io.hpp"
#include "fermiflow/selftest.hpp"
#include "fermiflow/verify.hpp"
#include "fermiflow/w1_bounds.hpp"
#include "fermiflow/w1_exact.hpp"

namespace fermiflow::cli {

using io::Json;

enum ExitCode : int { kOk = 0, kViolation = 1, kResourceError = 2 };

struct CommandResult {
  int exit_code = kOk;
  Json json;
  io::CsvTable csv{{}};
};

namespace detail {

enum Tag : std::uint64_t { kLemma = 1, kBounds = 2, kRdm = 3 };

inline std::uint64_t stream(Tag tag, std::uint64_t instance) {
  return (static_cast<std::uint64_t>(tag) << 32) | instance;
}

inline Json header(const std::string& command, const RunConfig& cfg) {
  Json config = Json::object();
  for (const auto& [k, v] : cfg.values()) {
    config[k] = v;
  }
  return {{"schema_version", io::kSchemaVersion},
          {"command", command},
          {"seed", cfg.seed()},
          {"config", std::move(config)}};
}

inline std::string num(double v) { return io::number(v); }
inline std::string num(std::int64_t v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string yes(bool b) { return b ? "true" : "false"; }

}  // namespace detail

inline W1SolverOptions solver_options(const RunConfig& cfg) {
  W1SolverOptions opt;
  opt.rho_penalty = cfg.real("w1.rho_penalty");
  opt.relaxation = cfg.real("w1.relaxation");
  opt.abs_tol = cfg.real("w1.tol");
  opt.rel_tol = cfg.real("w1.rel_tol");
  opt.gap_tol = cfg.real("w1.gap_tol");
  opt.max_iter = static_cast<long>(cfg.positive("w1.max_iter"));
  opt.dim_cap = static_cast<Eigen::Index>(cfg.positive("w1.dim_cap"));
  if (!(opt.relaxation > 0.0 && opt.relaxation < 2.0)) {
    throw ConfigError("w1.relaxation must lie in (0, 2)");
  }
  return opt;
}

/// Brute-force measurement law vs determinantal minors, plus sampler
/// goodness of fit, over lemma.seeds random families.
inline CommandResult cmd_verify_lemma(const RunConfig& cfg) {
  const auto dim = cfg.positive("lemma.dim");
  const auto n = cfg.positive("lemma.n");
  const auto seeds = cfg.positive("lemma.seeds");
  const auto samples = static_cast<std::size_t>(cfg.integer("lemma.samples"));
  const double alpha = cfg.real("lemma.alpha");
  const bool corrupt = cfg.flag("lemma.corrupt");
  const double cap = cfg.real("enumeration_cap");
  const double tol = cfg.real("tol");
  if (n > dim) {
    throw ConfigError("lemma.n must not exceed lemma.dim");
  }
  const double required = std::pow(static_cast<double>(dim), static_cast<double>(n));
  if (required > cap) {
    throw CapExceededError("configuration enumeration (lemma.dim^lemma.n tuples)", required, cap);
  }
  // Bonferroni over seeds keeps the family-wise false-alarm rate at alpha.
  const double per_seed_alpha = alpha / static_cast<double>(seeds);

  CommandResult out;
  out.json = detail::header("verify-lemma", cfg);
  out.csv = io::CsvTable({"instance", "max_minor_error", "diagonal_mass", "total_mass_error",
                          "minors_checked", "chi2", "dof", "p_value", "max_abs_z", "pass"});
  const std::uint64_t root = cfg.seed();
  Json rows = Json::array();
  bool all = true;
  for (std::int64_t i = 0; i < seeds; ++i) {
    const std::uint64_t s = detail::stream(detail::kLemma, static_cast<std::uint64_t>(i));
    Rng rng = make_rng(root, s);
    const GroundSpace space = random_weight_space(static_cast<std::size_t>(dim), rng);
    const OrthonormalFamily fam = random_orthonormal(space, n, root, s);
    const LemmaCheck lc = lemma_check(fam, cap, corrupt);
    bool pass = lc.max_minor_error <= tol && lc.diagonal_mass <= tol &&
                lc.total_mass_error <= 1e-10;
    Json row{{"instance", i},
             {"max_minor_error", lc.max_minor_error},
             {"diagonal_mass", lc.diagonal_mass},
             {"total_mass_error", lc.total_mass_error},
             {"minors_checked", lc.minors_checked}};
    std::vector<std::string> cells = {detail::num(static_cast<std::int64_t>(i)),
                                      detail::num(lc.max_minor_error),
                                      detail::num(lc.diagonal_mass),
                                      detail::num(lc.total_mass_error),
                                      detail::num(lc.minors_checked)};
    if (samples > 0) {
      const SamplerCheck sc = sampler_check(fam, samples, rng, cap);
      pass = pass && sc.p_value >= per_seed_alpha && sc.max_abs_z <= 4.0 && !sc.wrong_cardinality;
      row["sampler"] = {{"samples", sc.samples},
                        {"chi2", sc.chi2},
                        {"dof", sc.dof},
                        {"p_value", sc.p_value},
                        {"max_abs_z", sc.max_abs_z}};
      cells.insert(cells.end(), {detail::num(sc.chi2), std::to_string(sc.dof),
                                 detail::num(sc.p_value), detail::num(sc.max_abs_z)});
    } else {
      cells.insert(cells.end(), {"", "", "", ""});
    }
    row["pass"] = pass;
    cells.push_back(detail::yes(pass));
    rows.push_back(std::move(row));
    out.csv.add(std::move(cells));
    all = all && pass;
  }
  out.json["instances"] = std::move(rows);
  out.json["per_instance_alpha"] = per_seed_alpha;
  out.json["pass"] = all;
  out.exit_code = all ? kOk : kViolation;
  return out;
}

/// The Walsh pair {w0, w1} vs {w0, w2}: exact covariances, the refuted
/// bound's right-hand side, exact distances and the valid bounds.
inline CommandResult cmd_walsh(const RunConfig& cfg) {
  const WalshReport w = walsh_counterexample();
  const bool pass = w.covariance_first == Rational(-1, 4) &&
                    w.covariance_second == Rational(0) && std::abs(w.falsified_rhs) <= 1e-12 &&
                    w.tv_exact > 0.0 && w.tv_exact <= w.tv_bound + cfg.real("tol") &&
                    w.wsharp_exact <= w.wsharp_bound + cfg.real("tol");
  CommandResult out;
  out.json = detail::header("walsh", cfg);
  out.json["report"] = io::walsh_json(w);
  out.json["pass"] = pass;
  out.csv = io::CsvTable({"covariance_first", "covariance_second", "falsified_rhs", "tv_exact",
                          "wsharp_exact", "tv_bound", "wsharp_bound"});
  out.csv.add({rational_string(w.covariance_first), rational_string(w.covariance_second),
               detail::num(w.falsified_rhs), detail::num(w.tv_exact),
               detail::num(w.wsharp_exact), detail::num(w.tv_bound),
               detail::num(w.wsharp_bound)});
  out.exit_code = pass ? kOk : kViolation;
  return out;
}

/// One DppBoundsReport per random instance pair; slack violations are
/// property failures in exact mode only.
inline CommandResult cmd_bounds(const RunConfig& cfg) {
  const auto dim = cfg.positive("bounds.dim");
  const auto n = cfg.positive("bounds.n");
  const auto instances = cfg.positive("bounds.instances");
  const std::string& kernel = cfg.str("bounds.kernel");
  const std::string& mode = cfg.str("bounds.mode");
  const bool identical = cfg.flag("bounds.identical");
  const double tol = cfg.real("tol");
  if (kernel != "projection" && kernel != "mixed") {
    throw ConfigError("bounds.kernel must be projection or mixed");
  }
  if (mode != "exact" && mode != "empirical") {
    throw ConfigError("bounds.mode must be exact or empirical");
  }
  if (n > dim) {
    throw ConfigError("bounds.n must not exceed bounds.dim");
  }
  if (static_cast<std::size_t>(n) > kMaxIndices) {
    throw CapExceededError("bounds.n index subsets", static_cast<double>(n),
                           static_cast<double>(kMaxIndices));
  }
  const std::uint64_t root = cfg.seed();
  const GroundSpace space = GroundSpace::uniform(static_cast<std::size_t>(dim));

  CommandResult out;
  out.json = detail::header("bounds", cfg);
  out.csv = io::CsvTable({"instance", "tv", "tv_kind", "tv_ci_low", "tv_ci_high", "wsharp",
                          "wsharp_ci_low", "wsharp_ci_high", "tv_bound", "tv_bound_paired",
                          "wsharp_bound", "wsharp_bound_paired", "slack_tv", "slack_wsharp"});
  Json reports = Json::array();
  double min_tv = std::numeric_limits<double>::infinity();
  double min_ws = std::numeric_limits<double>::infinity();
  std::int64_t violations = 0;
  for (std::int64_t i = 0; i < instances; ++i) {
    const std::uint64_t s = detail::stream(detail::kBounds, static_cast<std::uint64_t>(i));
    Rng rng = make_rng(root, s);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> la(static_cast<std::size_t>(n), 1.0);
    std::vector<double> lb(static_cast<std::size_t>(n), 1.0);
    if (kernel == "mixed") {
      for (auto& l : la) l = unif(rng);
      for (auto& l : lb) l = unif(rng);
    }
    const MixedKernelSpec a(random_orthonormal(space, n, root, 2 * s), la);
    const MixedKernelSpec b = identical
                                  ? a
                                  : MixedKernelSpec(random_orthonormal(space, n, root, 2 * s + 1), lb);
    VerifyOptions vo;
    vo.mode = mode == "exact" ? VerifyMode::Exact : VerifyMode::Empirical;
    vo.samples = static_cast<std::size_t>(cfg.positive("bounds.samples"));
    vo.bootstrap = static_cast<std::size_t>(cfg.integer("bounds.bootstrap"));
    vo.seed = stream_seed(root, s);
    vo.enumeration_cap = cfg.real("enumeration_cap");
    const DppBoundsReport r = verify_instance(a, b, vo);
    min_tv = std::min(min_tv, r.slack_tv);
    min_ws = std::min(min_ws, r.slack_wsharp);
    if (vo.mode == VerifyMode::Exact && (r.slack_tv < -tol || r.slack_wsharp < -tol)) {
      ++violations;
    }
    Json rep = io::bounds_report_json(r);
    rep["instance"] = i;
    reports.push_back(std::move(rep));
    auto ci = [](const Estimate& e, bool low) {
      return e.ci ? detail::num(low ? e.ci->first : e.ci->second) : std::string();
    };
    out.csv.add({detail::num(static_cast<std::int64_t>(i)), detail::num(r.tv.value), mode,
                 ci(r.tv, true), ci(r.tv, false), detail::num(r.wsharp.value),
                 ci(r.wsharp, true), ci(r.wsharp, false), detail::num(r.tv_bound),
                 detail::num(r.tv_bound_paired), detail::num(r.wsharp_bound),
                 detail::num(r.wsharp_bound_paired), detail::num(r.slack_tv),
                 detail::num(r.slack_wsharp)});
  }
  out.csv.add({"min", "", "", "", "", "", "", "", "", "", "", "", detail::num(min_tv),
               detail::num(min_ws)});
  out.json["reports"] = std::move(reports);
  out.json["summary"] = {{"min_slack_tv", min_tv},
                         {"min_slack_wsharp", min_ws},
                         {"violations", violations},
                         {"slack_checked", mode == "exact"}};
  out.json["pass"] = violations == 0;
  out.exit_code = violations == 0 ? kOk : kViolation;
  return out;
}

/// (1/k) W1 of normalized k-RDMs for k = 1..n over rdm.seeds random pairs.
/// A row whose solve fails is reported and makes the exit code 2.
inline CommandResult cmd_rdm_monotonicity(const RunConfig& cfg) {
  const auto dim = cfg.positive("rdm.dim");
  const auto n = cfg.positive("rdm.n");
  const auto seeds = cfg.positive("rdm.seeds");
  if (n > dim) {
    throw ConfigError("rdm.n must not exceed rdm.dim");
  }
  const W1SolverOptions opt = solver_options(cfg);
  const double required = std::pow(static_cast<double>(dim), static_cast<double>(n));
  if (required > static_cast<double>(opt.dim_cap)) {
    throw CapExceededError("w1 solver total dimension (rdm.dim^rdm.n)", required,
                           static_cast<double>(opt.dim_cap));
  }
  const double tol = 2.0 * std::max(opt.gap_tol, opt.abs_tol);
  const std::uint64_t root = cfg.seed();
  const GroundSpace space = GroundSpace::uniform(static_cast<std::size_t>(dim));

  CommandResult out;
  out.json = detail::header("rdm-monotonicity", cfg);
  out.csv = io::CsvTable({"instance", "k", "w1", "value", "gap", "monotone", "error"});
  Json rows = Json::array();
  bool monotone_all = true;
  bool solver_failed = false;
  for (std::int64_t i = 0; i < seeds; ++i) {
    const std::uint64_t s = detail::stream(detail::kRdm, static_cast<std::uint64_t>(i));
    Json row{{"instance", i}};
    try {
      const auto values = rdm_monotonicity_check(random_orthonormal(space, n, root, 2 * s),
                                                 random_orthonormal(space, n, root, 2 * s + 1),
                                                 opt);
      bool monotone = true;
      Json ks = Json::array();
      for (std::size_t k = 0; k < values.size(); ++k) {
        const bool step_ok = k == 0 || values[k].value >= values[k - 1].value - tol;
        monotone = monotone && step_ok;
        ks.push_back({{"k", values[k].k},
                      {"w1", values[k].w1},
                      {"value", values[k].value},
                      {"gap", values[k].gap}});
        out.csv.add({detail::num(static_cast<std::int64_t>(i)), detail::num(values[k].k),
                     detail::num(values[k].w1), detail::num(values[k].value),
                     detail::num(values[k].gap), detail::yes(step_ok), ""});
      }
      row["values"] = std::move(ks);
      row["monotone"] = monotone;
      monotone_all = monotone_all && monotone;
    } catch (const ConvergenceError& e) {
      solver_failed = true;
      row["error"] = e.what();
      out.csv.add({detail::num(static_cast<std::int64_t>(i)), "", "", "", "", "", e.what()});
    }
    rows.push_back(std::move(row));
  }
  out.json["rows"] = std::move(rows);
  out.json["tolerance"] = tol;
  out.json["pass"] = monotone_all && !solver_failed;
  out.exit_code = solver_failed ? kResourceError : (monotone_all ? kOk : kViolation);
  return out;
}

/// The determinant / mean-overlap divergence table.
inline CommandResult cmd_example_gap(const RunConfig& cfg) {
  const auto n_max = cfg.positive("gap.n_max");
  EpsRule rule;
  try {
    rule = EpsRule::parse(cfg.str("gap.eps"));
  } catch (const std::logic_error&) {
    throw ConfigError("gap.eps: cannot parse '" + cfg.str("gap.eps") + "'");
  } catch (const DomainError& e) {
    throw ConfigError(std::string("gap.eps: ") + e.what());
  }
  const auto rows = example_gap_table(static_cast<int>(n_max), rule);
  CommandResult out;
  out.json = detail::header("example-gap", cfg);
  out.csv = io::CsvTable({"n", "determinant", "mean_overlap", "stabilizer_overlap",
                          "trace_distance", "w1_upper_over_n"});
  Json table = Json::array();
  for (const GapRow& r : rows) {
    table.push_back({{"n", r.n},
                     {"determinant", r.determinant},
                     {"mean_overlap", r.mean_overlap},
                     {"stabilizer_overlap", r.stabilizer_overlap},
                     {"trace_distance", r.trace_distance},
                     {"w1_upper_over_n", r.w1_upper_over_n}});
    out.csv.add({std::to_string(r.n), detail::num(r.determinant), detail::num(r.mean_overlap),
                 detail::num(r.stabilizer_overlap), detail::num(r.trace_distance),
                 detail::num(r.w1_upper_over_n)});
  }
  out.json["eps_rule"] = rule.name;
  out.json["rows"] = std::move(table);
  return out;
}

/// Acceptance criteria 1..9. Wall times go under "timing", the one part of
/// the JSON that is not reproducible.
inline CommandResult cmd_selftest(const RunConfig& cfg, const std::vector<int>& only = {}) {
  const auto results = selftest::run(cfg.seed(), solver_options(cfg), only);
  CommandResult out;
  out.json = detail::header("selftest", cfg);
  out.csv = io::CsvTable({"criterion", "name", "pass", "seconds", "time_limit", "detail"});
  Json criteria = Json::array();
  Json timing = Json::object();
  bool all = true;
  for (const auto& r : results) {
    criteria.push_back({{"criterion", r.id},
                        {"name", r.name},
                        {"pass", r.passed},
                        {"time_limit", r.time_limit},
                        {"detail", r.detail}});
    timing[std::to_string(r.id)] = r.seconds;
    out.csv.add({std::to_string(r.id), r.name, detail::yes(r.passed), detail::num(r.seconds),
                 detail::num(r.time_limit), r.detail});
    all = all && r.passed;
  }
  out.json["criteria"] = std::move(criteria);
  out.json["timing"] = std::move(timing);
  out.json["pass"] = all;
  out.exit_code = all ? kOk : kViolation;
  return out;
}

inline void write_result(const CommandResult& r, const RunConfig& cfg, std::ostream& os) {
  if (cfg.format() == OutputFormat::Csv) {
    r.csv.write(os);
  } else {
    os << r.json.dump(2) << '\n';
  }
}

/// Runs `command` and writes its output to cfg "out" (stdout when empty).
/// Library errors map to exit code 2 with a message on `err`.
inline int run(const std::string& command, const RunConfig& cfg, std::ostream& os,
               std::ostream& err, const std::vector<int>& only = {}) {
  try {
    CommandResult r;
    if (command == "verify-lemma") {
      r = cmd_verify_lemma(cfg);
    } else if (command == "walsh") {
      r = cmd_walsh(cfg);
    } else if (command == "bounds") {
      r = cmd_bounds(cfg);
    } else if (command == "rdm-monotonicity") {
      r = cmd_rdm_monotonicity(cfg);
    } else if (command == "example-gap") {
      r = cmd_example_gap(cfg);
    } else if (command == "selftest") {
      r = cmd_selftest(cfg, only);
    } else {
      err << "fermiflow: unknown command '" << command << "'\n";
      return kResourceError;
    }
    const std::string& path = cfg.str("out");
    if (path.empty()) {
      write_result(r, cfg, os);
    } else {
      std::ofstream file(path);
      if (!file) {
        err << "fermiflow: cannot write " << path << '\n';
        return kResourceError;
      }
      write_result(r, cfg, file);
    }
    if (r.exit_code == kViolation) {
      err << "fermiflow: " << command << ": property violation\n";
    }
    return r.exit_code;
  } catch (const CapExceededError& e) {
    err << "fermiflow: cap exceeded: " << e.what() << '\n';
  } catch (const ConvergenceError& e) {
    err << "fermiflow: " << e.what() << '\n';
  } catch (const ConfigError& e) {
    err << "fermiflow: config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "fermiflow: " << e.what() << '\n';
  }
  return kResourceError;
}

}  // namespace fermiflow::cli
