// Command line front end: run / sweep / oracle-check.
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "byzbandit/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust federated linear bandit simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int jobs = 1;
  int trials = 1000;
  bool inject_bug = false;

  CLI::App* run = app.add_subcommand("run", "Execute one experiment config");
  run->add_option("--config", config, "JSON experiment config")->required();
  run->add_option("--override", overrides, "dotted.path=value config override (repeatable)");
  run->add_option("--out", out, "output directory (overrides config output.dir)");
  run->add_option("--jobs", jobs, "concurrent repetitions")->check(CLI::PositiveNumber);

  CLI::App* sweep = app.add_subcommand("sweep", "Cross-product of runs over config axes");
  sweep->add_option("--config", config, "JSON sweep config with an 'axes' section")->required();
  sweep->add_option("--override", overrides, "dotted.path=value config override (repeatable)");
  sweep->add_option("--out", out, "output directory (overrides config output.dir)");
  sweep->add_option("--jobs", jobs, "concurrent sweep cells")->check(CLI::PositiveNumber);

  CLI::App* check = app.add_subcommand("oracle-check", "Aggregation-oracle invariant battery");
  check->add_option("--trials", trials, "instance count for the largest battery")
      ->check(CLI::PositiveNumber);
  check->add_flag("--inject-bug", inject_bug,
                  "perturb GM outputs by 0.1 (CI self-test; the battery must fail)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return byzbandit::cli_run(config, overrides, out, jobs);
  if (sweep->parsed()) return byzbandit::cli_sweep(config, overrides, out, jobs);
  return byzbandit::cli_oracle_check(trials, inject_bug);
}
