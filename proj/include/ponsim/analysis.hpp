#pragma once

#include <array>
#include <span>
#include <stdexcept>

#include "ponsim/traffic.hpp"

namespace ponsim {

/// Cumulative utilization through a priority class reached or exceeded one.
class SaturationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Poisson probability of alpha events in one cycle: e^{-rT}(rT)^alpha/alpha!.
/// Serves the downstream/upstream arrival and departure pmfs alike.
double cycle_pmf(int alpha, double rate, double t_cycle);

/// Which classes contribute residual service to the numerator.
enum class PkVariant {
  all_classes,  // any packet in service delays class i (non-preemptive priority)
  up_to_class,  // only classes 0..i, for comparison
};

/// Mean queueing delay of class i in a non-preemptive priority M/G/1 queue,
///   W_i = sum_k lambda_k E[X_k^2] / (2 (1 - rho_0 - ... - rho_{i-1}) (1 - rho_0 - ... - rho_i)),
/// with rho_k = lambda_k / mu.
double pk_waiting_time(int service_class, std::span<const double> lambda, std::span<const double> second_moment,
                       double mu, PkVariant variant = PkVariant::all_classes);

/// Queueing + mean service + propagation.
double total_delay(double waiting_time, double mu, double propagation);

struct SleepBudget {
  std::array<double, kNumClasses> per_class{};
  double tx_sleep = 0.0;
  int quantized_cycles = 0;  // 0 disables transmitter sleep

  bool sleep_enabled() const { return quantized_cycles > 0; }
};

/// Per-class sleep allowance Delay_i - T_i - T_cycle; the transmitter uses the smallest one,
/// quantized down to whole cycles.
SleepBudget sleep_budget(std::span<const double> thresholds, std::span<const double> delays, double t_cycle);

/// Poisson parameters of one ONU for the queueing and Markov analysis.
struct TrafficModelParams {
  double lambda_d = 0.0;                          // downstream packets/s
  std::array<double, kNumClasses> lambda_u{};     // upstream packets/s per class
  double mu_d = 0.0;                              // downstream service, packets/s
  double mu_u = 0.0;                              // upstream service, packets/s
  double t_cycle = 2.0e-3;
  std::array<double, kNumClasses> second_moment{};  // E[X_i^2] upstream, s^2
  double propagation = 0.0;

  double lambda_u_total() const { return lambda_u[0] + lambda_u[1] + lambda_u[2]; }
};

/// Rates implied by per-ONU loads, the class byte shares and the line rates.
TrafficModelParams model_params_from_loads(const TrafficConfig& traffic, double upstream_bps, double downstream_bps,
                                           double t_cycle, double propagation);

struct TxBudgetAnalysis {
  std::array<double, kNumClasses> waiting{};
  std::array<double, kNumClasses> delay{};
  SleepBudget budget;
  bool saturated = false;
};

/// W, T and the sleep budget for one ONU. Saturation disables sleep instead of throwing.
TxBudgetAnalysis analyze_tx_budget(const TrafficModelParams& params, const ClassTable& classes,
                                   PkVariant variant = PkVariant::all_classes);

}  // namespace ponsim
