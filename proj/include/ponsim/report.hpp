#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ponsim/config.hpp"
#include "ponsim/markov.hpp"
#include "ponsim/simulator.hpp"

namespace ponsim {

/// Analytical predictions for one configuration.
struct AnalysisRow {
  std::optional<double> axis_value;
  TrafficModelParams params;
  double rho_ds = 0.0;
  double rho_us = 0.0;
  TxBudgetAnalysis tx;
  KindOccupancy rx_occupancy;
  KindOccupancy tx_occupancy;
  double expected_power_w = 0.0;
  double expected_saving = 0.0;
  double chain_residual = 0.0;
  bool truncation_warning = false;
  bool saturated = false;
};

/// Queueing delays, sleep budget and stationary chain occupancies of ONU 0.
AnalysisRow analyze_point(const SimConfig& cfg, int q_max);

/// Number formatting shared by every CSV: 6 significant digits, locale independent.
std::string csv_number(double v);

/// Header of the run/sweep CSV; with_axis prepends the axis_value column.
std::string metrics_csv_header(bool with_axis);
std::string metrics_csv_row(const SimMetrics& m, std::optional<double> axis_value = std::nullopt);
void write_metrics_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_axis);

std::string analysis_csv_header(bool with_axis);
std::string analysis_csv_row(const AnalysisRow& row);
void write_analysis_csv(std::ostream& out, const std::vector<AnalysisRow>& rows, bool with_axis);

/// Human-readable summary of a run or sweep.
void write_report(std::ostream& out, const RunConfig& cfg, const std::vector<SweepRow>& rows);

}  // namespace ponsim
