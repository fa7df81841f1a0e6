#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rflab/flow.hpp"

namespace rflab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Process exit codes of a run.
enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitUnreliable = 4,
  kExitInconclusive = 5,
};

inline constexpr std::string_view kEnvPrefix = "RFLAB_";
inline constexpr std::string_view kReportSchema = "rflab.report/1";

std::vector<std::string> scenario_names();
std::vector<std::string> check_names();

/// Everything a run depends on. Scenario defaults are filled in by
/// default_config; every field round-trips through to_text.
struct ScenarioConfig {
  std::string scenario = "sphere";
  int n = 3;
  std::size_t points = 201;

  double sigma = 0.1;
  double tolerance = 1e-8;
  double stop_curvature = 1e4;
  double final_time = 1.0;  // gaussian only
  int snapshots_per_decade = 16;
  double resolution_cells = 0.0;
  double neck_ratio = 0.15;

  std::vector<std::string> checks;  // empty: every check
  double eta = 0.02;
  double margin = 0.005;
  double rho = 1e-2;
  double monotone_slack = 1e-4;
  double bound_tolerance = 1e-3;
  double constancy_tolerance = 1e-3;
  double subsolution_tolerance = 1e-3;
  double refinement_ratio = 3.0;
  double naber_drift = 0.1;
  int boundary_cells = 2;

  int nodes = 64;
  int q_points = 65;
  int subsolution_q_cells = 16;
  int subsolution_t_cells = 8;
  int refinement_levels = 3;
  std::size_t classification_points = 65;
  std::size_t ball_curves = 128;
  std::uint64_t seed = 1;
  std::string out;

  bool enabled(std::string_view check) const;
};

ScenarioConfig default_config(std::string_view scenario);

/// key = value lines; '#' starts a comment. The `scenario` key selects the
/// defaults, so it is applied before every other key.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;
ConfigEntries parse_config_text(std::istream& is);
/// Entries from environment variables RFLAB_<KEY> (key upper-cased).
ConfigEntries config_from_environment();
ScenarioConfig make_config(const ConfigEntries& entries);
void apply_entry(ScenarioConfig& config, std::string_view key, std::string_view value);

std::string to_text(const ScenarioConfig& config);
/// FNV-1a over to_text with the output directory left out.
std::string config_hash(const ScenarioConfig& config);

struct ScenarioOutcome {
  nlohmann::json report;
  nlohmann::json manifest;
  /// File name to content, written next to report.json and manifest.json.
  std::map<std::string, std::string> artifacts;
  int exit_code = kExitPass;
  FlowHistory history;
};

/// Evolves the scenario and runs the enabled checks in dependency order.
/// Solver failures are reported in the outcome, not thrown.
ScenarioOutcome run_scenario(const ScenarioConfig& config);

void write_outcome(const ScenarioOutcome& outcome, const std::filesystem::path& dir);

/// Measured values of two reports whose relative difference exceeds
/// `relative`, status changes and checks present in only one report.
/// Throws ConfigError on a schema mismatch.
nlohmann::json compare_reports(const nlohmann::json& a, const nlohmann::json& b, double relative = 5e-3);

}  // namespace rflab
