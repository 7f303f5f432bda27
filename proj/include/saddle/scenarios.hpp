#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "saddle/io.hpp"
#include "saddle/linalg.hpp"
#include "saddle/optimizers.hpp"

namespace saddle {

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparator;  // one of < <= > >=
  bool pass = false;
};

Check make_check(std::string name, double value, std::string comparator, double threshold);

// Compact JSON object with every OptimConfig field.
std::string optim_config_json(const OptimConfig& cfg);

struct RunReport {
  std::string scenario;
  std::vector<Check> checks;
  double wall_seconds = 0.0;
  std::string manifest_hash;
  std::vector<std::string> files;

  bool all_pass() const;
  const Check& check(std::string_view name) const;
};

struct ScenarioInfo {
  std::string id;
  std::string description;
  ConfigMap defaults;
};

const std::vector<ScenarioInfo>& scenario_catalog();
const ScenarioInfo& find_scenario(std::string_view id);

// One line per scenario, sorted by id.
std::string list_scenarios();

// Resolves overrides against the scenario defaults (unknown keys throw),
// runs the pipeline, writes its CSV files plus manifest.json and report.json
// into out_dir.
RunReport run_scenario(std::string_view id, const ConfigMap& overrides, const std::filesystem::path& out_dir);

std::string report_json(const RunReport& report);

struct ToyNnOptions {
  double eta = 0.01;
  std::size_t steps = 10000;
  std::size_t batch = 1;
  RhoMode rho_mode = RhoMode::normalized;
  std::size_t seeds = 1000;
  std::uint64_t seed = 0;
  double saturation_w1 = 0.05;
  double saturation_loss = 2.45;
};

struct ToyNnRun {
  std::size_t index = 0;
  Point w0;
  Point w_final;
  double loss = 0.0;
  bool saturated = false;
  bool diverged = false;
};

struct ToyNnSummary {
  double rho = 0.0;
  double mean_loss = 0.0;
  double std_error = 0.0;
  double saturated_fraction = 0.0;
  std::size_t diverged = 0;
  std::size_t count = 0;  // converged runs entering the mean
  std::vector<ToyNnRun> runs;
};

// Trains the two-parameter toy network from w1 ~ U[-0.1, 0.1], w2 ~ U[0, 1]
// once per seed and rho (rho = 0 is plain SGD). Every rho sees the same
// initial points and sample draws. Diverged runs are excluded from the mean.
std::vector<ToyNnSummary> toy_nn_sweep(std::span<const double> rhos, const ToyNnOptions& opts);

std::string toy_nn_sweep_csv(std::span<const ToyNnSummary> sweep);

}  // namespace saddle
