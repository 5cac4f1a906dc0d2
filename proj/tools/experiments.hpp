#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace roughevo::cli {

/// lower <= value <= upper.
struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool pass() const { return value >= lower && value <= upper; }
};

struct RunOptions {
  /// Artifacts are written here when nonempty.
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  bool plots = false;
  bool timings = false;
};

struct RunResult {
  std::string kind;
  std::string name;
  std::map<std::string, double> metrics;
  std::vector<Check> checks;
  nlohmann::json manifest;
  bool passed() const;
};

const std::vector<std::string>& experiment_kinds();

/// Runs one experiment. The config's "experiment" key, when present, must equal `kind`.
/// Throws ConfigError on invalid configs (including violated model constraints).
RunResult run_experiment(const std::string& kind, const nlohmann::json& config, const RunOptions& options);

}  // namespace roughevo::cli
