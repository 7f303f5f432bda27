#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "saddle/io.hpp"
#include "saddle/scenarios.hpp"

namespace {

struct RunArgs {
  std::string scenario;
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string seed;
};

saddle::ConfigMap collect_overrides(const RunArgs& a) {
  saddle::ConfigMap cfg;
  if (!a.config.empty()) cfg = saddle::load_config(a.config);
  for (const std::string& kv : a.sets) {
    auto [k, v] = saddle::parse_assignment(kv);
    cfg[k] = v;
  }
  if (!a.seed.empty()) cfg["seed"] = a.seed;
  return cfg;
}

saddle::RunReport execute(const RunArgs& a) {
  const std::string out = a.out.empty() ? fmt::format("out/{}", a.scenario) : a.out;
  return saddle::run_scenario(a.scenario, collect_overrides(a), out);
}

void print_report(const saddle::RunReport& r) {
  for (const saddle::Check& c : r.checks)
    fmt::print("{} {} = {:.6g} ({} {:.6g})\n", c.pass ? "PASS" : "FAIL", c.name, c.value, c.comparator,
               c.threshold);
  fmt::print("{}: {} in {:.2f}s, manifest {}\n", r.scenario, r.all_pass() ? "all checks pass" : "checks failed",
             r.wall_seconds, r.manifest_hash);
}

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--scenario", a.scenario, "Scenario id (see `list`)")->required();
  cmd->add_option("--config", a.config, "Flat key = value config file");
  cmd->add_option("--set", a.sets, "Parameter override key=value (repeatable)");
  cmd->add_option("--out", a.out, "Output directory (default out/<scenario>)");
  cmd->add_option("--seed", a.seed, "Seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saddle-point dynamics experiments for SAM and GD"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List registered scenarios");
  RunArgs run_args, check_args;
  auto* run = app.add_subcommand("run", "Run a scenario and write its outputs");
  add_run_options(run, run_args);
  auto* check = app.add_subcommand("check", "Run a scenario; exit 0 only if every check passes");
  add_run_options(check, check_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      std::fputs(saddle::list_scenarios().c_str(), stdout);
      return 0;
    }
    if (run->parsed()) {
      print_report(execute(run_args));
      return 0;
    }
    if (check->parsed()) {
      const saddle::RunReport r = execute(check_args);
      print_report(r);
      return r.all_pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "saddle-scope: {}\n", e.what());
    return 2;
  }
  return 2;
}
