#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clonesim/params.hpp"
#include "clonesim/scenarios.hpp"

namespace clonesim {

enum class Preset { experiment1, experiment2, experiment3, custom };

Preset parse_preset(std::string_view tag);
std::string_view to_string(Preset p);

struct OutputConfig {
  double grid_h = 0.5;     // trajectory table spacing (h)
  std::string path = "-";  // "-" writes to stdout

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct FitConfig {
  std::vector<std::string> free = fittable_param_names();
  std::map<std::string, std::pair<double, double>> bounds;  // overrides of the defaults
  int max_iterations = 60;
  bool central_differences = false;
  bool balance_blocks = true;
  double level = 0.95;
  int starts = 1;  // > 1 adds seeded random restarts within +/-20% of the start

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

/// Everything a command needs. Presets build their scenario from
/// `preset`, `group`, `n0`, `antigen_dose` and `params`; the custom preset
/// uses `scenario` verbatim (with `params` substituted).
struct RunConfig {
  Preset preset = Preset::experiment1;
  Group group = Group::i;
  double n0 = 8.5;
  double antigen_dose = 1.0;
  ModelParams params;
  ScenarioSpec scenario;
  SolverOptions solver;
  OutputConfig output;
  FitConfig fit;
  std::uint64_t seed = 0;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Parses a JSON document. Missing keys keep their defaults; unknown keys
/// and ill-typed values throw InvalidArgument.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

/// Fully populated JSON for `config`; parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& config);

ScenarioSpec resolve_scenario(const RunConfig& config);

}  // namespace clonesim
