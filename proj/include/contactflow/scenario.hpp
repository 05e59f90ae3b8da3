#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "contactflow/monitors.hpp"
#include "contactflow/radial.hpp"

namespace contactflow {

enum class ScenarioMode { radial_gauge, radial_graph, gauge2d };

const char* to_string(ScenarioMode m);

struct ProfileSpec {
  // paraboloid | spherical_cap | catenoid | perturbed_catenoid | perturbed_paraboloid
  std::string name = "paraboloid";
  double amplitude = 0.0;  // perturbed_catenoid; eps for perturbed_paraboloid
};

struct ScenarioConfig {
  std::string name = "scenario";
  ScenarioMode mode = ScenarioMode::radial_gauge;
  RadialCase kase = RadialCase::lens;
  double beta = 0.5;
  ProfileSpec profile;
  int M = 256;
  int P = 16, Q = 32;
  double R_out = 4.0;
  double cfl = 0.4;
  std::string scheme = "default";  // radial_graph: semi_implicit | explicit; gauge2d: explicit | imex
  double T_end = 0.1;
  bool to_extinction = false;
  double output_interval = 0.01;
  OuterBc outer_bc = OuterBc::pinned;
  std::string output_dir;  // relative to the output root; defaults to name
  std::vector<std::string> monitors;  // empty: every monitor that applies to the mode
  std::uint64_t seed = 1;
  std::optional<double> barrier_H0, barrier_c_n;
};

// Unknown keys, bad values and invalid mode/case combinations throw ConfigError.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ScenarioConfig& c);

std::vector<std::string> applicable_monitors(const ScenarioConfig& c);

// CONTACTFLOW_OUT if set, else ./contactflow_out
std::filesystem::path output_root();
std::filesystem::path preset_dir();

struct RunOutcome {
  int exit_code = 0;  // 0 pass, 1 monitor failure, 3 solver breakdown
  std::filesystem::path dir;
  std::vector<MonitorReport> checks;
  nlohmann::json manifest;
  std::string diagnostics;
};

// Runs the scenario into root/output_dir, writing snapshots, series.csv,
// report.json and manifest.json. With resume, continues from the last
// snapshot recorded in an existing manifest.
RunOutcome run_scenario(const ScenarioConfig& config, const std::filesystem::path& root, bool resume = false);

nlohmann::json report_json(const std::vector<MonitorReport>& checks, const nlohmann::json& manifest);

struct ConvergenceRow {
  int level = 0, resolution = 0;
  double delta = 0.0, error = 0.0, order = 0.0;
};

struct ConvergenceOutcome {
  std::string quantity;
  ConvergenceReport report;
  std::vector<ConvergenceRow> rows;
  std::filesystem::path csv;
};

// Resolutions M, 2M, 4M, ... (P likewise for gauge2d). The error is the
// catenoid deviation for catenoid data, the gauge/graph discrepancy for
// radial lenses, and the deviation from a fine radial run (M = 512) for gauge2d.
ConvergenceOutcome converge_scenario(const ScenarioConfig& config, int levels, const std::filesystem::path& root);

}  // namespace contactflow
