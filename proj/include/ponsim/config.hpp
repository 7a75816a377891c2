#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ponsim/simulator.hpp"

namespace ponsim {

/// Bad configuration input. key() is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct AnalysisSettings {
  int q_max = 200;  // queue-length truncation of the Markov chains
};

struct SweepSettings {
  std::optional<SweepAxis> axis;
  std::vector<double> values;
  SweepSeeding seeding = SweepSeeding::common;
};

struct RunConfig {
  SimConfig sim;
  AnalysisSettings analysis;
  SweepSettings sweep;
};

/// Defaults: 32 ONUs at 10/2.5 Gb/s, 2 ms cycles, listen and sleep counts of 2, self-similar
/// traffic at 5% utilization in both directions.
RunConfig default_run_config();

/// Parses YAML text on top of the defaults, then applies "dotted.key=value" overrides.
/// Unknown keys, type mismatches and violated invariants raise ConfigError.
RunConfig parse_config(std::string_view yaml_text, std::span<const std::string> overrides = {});
RunConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});

/// Full configuration as YAML that parse_config reads back unchanged.
std::string to_yaml(const RunConfig& cfg);

/// Checks every invariant and names the first violated key.
void validate_config(const RunConfig& cfg);

}  // namespace ponsim
