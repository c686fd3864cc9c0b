#pragma once

#include <stdexcept>
#include <string>

#include "vguide/sim.hpp"

namespace vguide {

/// Configuration error with the offending key in the message.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaitSection {
  std::string type = "sinusoid";  // "sinusoid" or "table"
  double amplitude_rad = 0.3;
  double period_s = 0.8;
  double offset_rad = 0.0;
  double phase0_rad = 0.0;
  int cycles = 1;
  std::string csv;  // table only, resolved against the scenario directory
};

struct GuideSection {
  std::string shape = "constant";
  double modulation = 0.5;
  double taper_start = 2.0;
  double taper_end = 1.0;
  std::string csv;  // custom shape knots
};

struct AssistSection {
  double ki = 20.0;
  double integral_limit = 30.0;
  double idealization_intensity = 1.0;
  double feedforward_intensity = 1.0;
};

struct OutputSection {
  std::string episode_csv = "episode.csv";
  std::string steps_csv = "steps.csv";
  std::string metrics_csv = "metrics.csv";
  std::string sweep_csv = "sweep.csv";
  std::string sweep_aggregate_csv = "sweep_aggregate.csv";
};

/// Fully validated scenario with defaults filled in. The baseline PID shares
/// the backup gains (filter.kp / filter.kd); only the integral term is
/// configured separately.
struct Scenario {
  JointPlant plant{};
  GaitSection gait{};
  GuideSection guide{};
  FilterParams filter{};
  AssistSection assist{};
  UserModel user{};
  EpisodeConfig episode{};
  OutputSection output{};
  std::string base_dir;
};

/// Parses and validates a scenario file (JSON). Minimal files need only the
/// gait section and an assistance factor; everything else defaults. Unknown
/// keys, missing required keys, and range violations raise ScenarioError
/// naming the exact key.
Scenario parse_scenario(const std::string& path);

/// Parses scenario text; relative file references resolve against base_dir.
Scenario parse_scenario_text(const std::string& text, const std::string& base_dir);

/// The effective (post-default) configuration as JSON text. Re-parsing the
/// echo yields an identical scenario; every run writes it next to its
/// outputs for reproducibility.
std::string effective_config_json(const Scenario& sc);

/// Materializes the nominal gait described by the scenario.
std::shared_ptr<const NominalGait> build_gait(const Scenario& sc);

/// Materializes the complete joint: plant, gait, guide factory, filter,
/// baseline PID, and user model.
JointSetup build_joint(const Scenario& sc);

}  // namespace vguide
