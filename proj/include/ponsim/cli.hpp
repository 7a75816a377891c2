#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ponsim {

enum class Subcommand { run, sweep, analyze, validate };

/// Everything a subcommand needs from the command line.
struct RunSpec {
  Subcommand subcommand = Subcommand::run;
  std::optional<std::filesystem::path> config;  // built-in defaults when absent
  std::filesystem::path out_dir = ".";
  std::vector<std::string> overrides;  // "dotted.key=value"
  std::optional<std::uint64_t> seed;
  int parallel = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Writes metrics.csv and report.txt.
int cmd_run(const RunSpec& spec);
/// Writes sweep.csv (axis value first) and report.txt.
int cmd_sweep(const RunSpec& spec);
/// Writes analysis.csv, one row per sweep value when sweep.axis is set.
int cmd_analyze(const RunSpec& spec);
/// Checks the configuration and prints a summary.
int cmd_validate(const RunSpec& spec);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace ponsim
