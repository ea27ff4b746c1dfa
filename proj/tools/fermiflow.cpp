#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fermiflow/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fermiflow: bounds between Slater states and determinantal point processes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string format;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root seed (overrides config)");
  app.add_option("--format", format, "json or csv (overrides config)")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", out, "output file (default stdout)");

  bool corrupt = false;
  std::vector<int> only;
  auto* lemma = app.add_subcommand("verify-lemma", "measurement law vs determinantal minors");
  lemma->add_flag("--corrupt", corrupt, "compare against a perturbed kernel (negative control)");
  app.add_subcommand("walsh", "Walsh-function counterexample report");
  app.add_subcommand("bounds", "distance bounds between random DPP pairs");
  app.add_subcommand("rdm-monotonicity", "W1 of reduced density matrices for k = 1..n");
  app.add_subcommand("example-gap", "trace distance vs W1 bound per particle");
  auto* self = app.add_subcommand("selftest", "acceptance criteria 1-9");
  self->add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, 9));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fermiflow::cli::kResourceError;
  }

  try {
    fermiflow::RunConfig cfg =
        config_path.empty() ? fermiflow::RunConfig() : fermiflow::RunConfig::load(config_path);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (!format.empty()) cfg.set("format", format);
    if (out) cfg.set("out", *out);
    if (corrupt) cfg.set("lemma.corrupt", "true");
    const std::string command = app.get_subcommands().front()->get_name();
    return fermiflow::cli::run(command, cfg, std::cout, std::cerr, only);
  } catch (const fermiflow::ConfigError& e) {
    std::cerr << "fermiflow: config error: " << e.what() << '\n';
    return fermiflow::cli::kResourceError;
  }
}
