#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "postwalk/master_eq.hpp"
#include "postwalk/spin.hpp"

namespace postwalk::cli {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent run configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed configuration file. TOML unless the extension is .json; `lines`
/// maps dotted key paths to their source line where known.
struct ConfigDocument {
  std::string path;
  Json data;
  std::map<std::string, int> lines;
};

ConfigDocument load_config(const std::string& path);
ConfigDocument parse_config_text(const std::string& text, const std::string& name, bool json);

enum class SweepAxis { Eta, P };

struct SweepPlan {
  SweepAxis axis = SweepAxis::Eta;
  std::vector<double> values;
  std::optional<double> observe_at;  ///< fixed horizon instead of steady-state detection
};

/// Everything a walk command needs, fully resolved and validated.
struct WalkPlan {
  SimConfig base;             ///< channel.eta holds the first listed value
  std::vector<double> etas;   ///< one run per value
  bool eta_list = false;      ///< eta was given as an array
  bool trace_distance = false;
  double steady_t_max = 2000.0;
  bool edge_list = false;
  std::optional<SweepPlan> sweep;
};

struct SpinPlan {
  SpinRunConfig base;
  std::vector<double> etas;
  bool eta_list = false;
  bool edge_list = false;
};

WalkPlan parse_walk_plan(const ConfigDocument& doc, bool require_sweep);
SpinPlan parse_spin_plan(const ConfigDocument& doc);

/// Resolved configuration echoed into manifests.
Json to_json(const SimConfig& config);
Json to_json(const SpinRunConfig& config);
Json to_json(const IntegrationSettings& settings);

}  // namespace postwalk::cli
