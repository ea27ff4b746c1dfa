#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <string_view>

#include "fermiflow/types.hpp"

namespace fermiflow {

/// Bad configuration: unknown key, unparsable value, unreadable file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class OutputFormat { Json, Csv };

/// Flat key=value settings with documented defaults. Every key a command
/// reads is listed in defaults(); anything else is rejected.
class RunConfig {
 public:
  RunConfig() : values_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"seed", "1"},
        {"format", "json"},
        {"out", ""},
        {"tol", "1e-9"},
        {"enumeration_cap", "1e6"},
        {"lemma.dim", "6"},
        {"lemma.n", "2"},
        {"lemma.seeds", "10"},
        {"lemma.samples", "50000"},
        {"lemma.alpha", "0.01"},
        {"lemma.corrupt", "false"},
        {"bounds.dim", "6"},
        {"bounds.n", "2"},
        {"bounds.instances", "100"},
        {"bounds.kernel", "projection"},
        {"bounds.mode", "exact"},
        {"bounds.samples", "20000"},
        {"bounds.bootstrap", "1000"},
        {"bounds.identical", "false"},
        {"rdm.dim", "4"},
        {"rdm.n", "2"},
        {"rdm.seeds", "20"},
        {"gap.n_max", "20"},
        {"gap.eps", "geometric:0.5"},
        {"w1.dim_cap", "64"},
        {"w1.rho_penalty", "0.03"},
        {"w1.relaxation", "1.7"},
        {"w1.tol", "1e-8"},
        {"w1.rel_tol", "1e-6"},
        {"w1.gap_tol", "1e-6"},
        {"w1.max_iter", "50000"},
    };
    return d;
  }

  /// Parses `key = value` lines; '#' starts a comment, blank lines are
  /// skipped. Later lines override earlier ones.
  static RunConfig parse(std::istream& in, const std::string& origin = "<config>") {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      const std::string trimmed = trim(line);
      if (trimmed.empty()) {
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
      }
      cfg.set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw ConfigError("cannot open config file " + path);
    }
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) {
    if (defaults().count(key) == 0) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    std::string previous = values_[key];
    values_[key] = value;
    try {
      validate(key);
    } catch (...) {
      values_[key] = std::move(previous);
      throw;
    }
  }

  [[nodiscard]] const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    return it->second;
  }

  [[nodiscard]] double real(const std::string& key) const {
    const std::string& s = str(key);
    std::istringstream is(s);
    double v = 0.0;
    is >> v;
    if (!is || !is.eof() || !std::isfinite(v)) {
      throw ConfigError("config key '" + key + "': not a number: '" + s + "'");
    }
    return v;
  }

  [[nodiscard]] std::int64_t integer(const std::string& key) const {
    const double v = real(key);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) {
      throw ConfigError("config key '" + key + "': not an integer: '" + str(key) + "'");
    }
    return static_cast<std::int64_t>(v);
  }

  [[nodiscard]] std::int64_t positive(const std::string& key) const {
    const auto v = integer(key);
    if (v <= 0) {
      throw ConfigError("config key '" + key + "' must be positive");
    }
    return v;
  }

  [[nodiscard]] std::uint64_t seed() const {
    const std::string& s = str("seed");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("seed must be a non-negative integer: '" + s + "'");
    }
    return v;
  }

  [[nodiscard]] bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + s + "'");
  }

  [[nodiscard]] OutputFormat format() const {
    return str("format") == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  }

  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
      return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  void validate(const std::string& key) const {
    if (key == "format") {
      if (str(key) != "json" && str(key) != "csv") {
        throw ConfigError("format must be json or csv, got '" + str(key) + "'");
      }
    } else if (key == "seed") {
      (void)seed();
    } else if (key == "out" || key == "gap.eps" || key == "bounds.kernel" ||
               key == "bounds.mode") {
      // checked by the command that reads them
    } else if (key == "lemma.corrupt" || key == "bounds.identical") {
      (void)flag(key);
    } else if (key == "lemma.samples" || key == "bounds.bootstrap") {
      if (integer(key) < 0) {
        throw ConfigError("config key '" + key + "' must not be negative");
      }
    } else if (real(key) <= 0.0) {
      throw ConfigError("config key '" + key + "' must be positive");
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace fermiflow
