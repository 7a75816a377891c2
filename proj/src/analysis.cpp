#include "ponsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace ponsim {

double cycle_pmf(int alpha, double rate, double t_cycle) {
  if (alpha < 0) throw std::invalid_argument("alpha must be >= 0");
  if (rate < 0.0) throw std::invalid_argument("rate must be >= 0");
  if (!(t_cycle > 0.0)) throw std::invalid_argument("cycle duration must be positive");
  const double m = rate * t_cycle;
  if (m == 0.0) return alpha == 0 ? 1.0 : 0.0;
  if (alpha <= 20) {
    double v = std::exp(-m);
    for (int k = 1; k <= alpha; ++k) v *= m / k;
    return v;
  }
  return std::exp(-m + alpha * std::log(m) - std::lgamma(alpha + 1.0));
}

double pk_waiting_time(int service_class, std::span<const double> lambda, std::span<const double> second_moment,
                       double mu, PkVariant variant) {
  if (lambda.size() != second_moment.size() || lambda.empty())
    throw std::invalid_argument("lambda and second moments must be non-empty and equally sized");
  if (service_class < 0 || static_cast<std::size_t>(service_class) >= lambda.size())
    throw std::invalid_argument("class index out of range");
  if (!(mu > 0.0)) throw std::invalid_argument("service rate must be positive");
  const auto i = static_cast<std::size_t>(service_class);

  double sigma_before = 0.0;
  for (std::size_t k = 0; k < i; ++k) sigma_before += lambda[k] / mu;
  const double sigma_through = sigma_before + lambda[i] / mu;
  if (sigma_through >= 1.0)
    throw SaturationError(fmt::format("cumulative utilization {:.4f} through class {} is >= 1", sigma_through, i));

  const std::size_t last = variant == PkVariant::all_classes ? lambda.size() : i + 1;
  double residual = 0.0;
  for (std::size_t k = 0; k < last; ++k) {
    if (lambda[k] < 0.0) throw std::invalid_argument("arrival rates must be >= 0");
    residual += lambda[k] * second_moment[k];
  }
  return residual / (2.0 * (1.0 - sigma_before) * (1.0 - sigma_through));
}

double total_delay(double waiting_time, double mu, double propagation) { return waiting_time + 1.0 / mu + propagation; }

SleepBudget sleep_budget(std::span<const double> thresholds, std::span<const double> delays, double t_cycle) {
  if (thresholds.size() != kNumClasses || delays.size() != kNumClasses)
    throw std::invalid_argument("sleep budget needs one threshold and one delay per class");
  if (!(t_cycle > 0.0)) throw std::invalid_argument("cycle duration must be positive");
  SleepBudget b;
  b.tx_sleep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (!(thresholds[i] > 0.0)) throw std::invalid_argument("delay thresholds must be positive");
    b.per_class[i] = thresholds[i] - delays[i] - t_cycle;
    b.tx_sleep = std::min(b.tx_sleep, b.per_class[i]);
  }
  if (b.tx_sleep >= t_cycle) {
    // The epsilon keeps exact multiples such as 88 ms / 2 ms from rounding down.
    b.quantized_cycles = std::max(1, static_cast<int>(std::floor(b.tx_sleep / t_cycle + 1e-9)));
  }
  return b;
}

TrafficModelParams model_params_from_loads(const TrafficConfig& traffic, double upstream_bps, double downstream_bps,
                                           double t_cycle, double propagation) {
  TrafficModelParams p;
  const double mean_size = mixed_mean_size(traffic.byte_shares);
  p.t_cycle = t_cycle;
  p.propagation = propagation;
  p.lambda_d = traffic.downstream_load_bps / (8.0 * mean_size);
  p.mu_d = downstream_bps / (8.0 * mean_size);
  p.mu_u = upstream_bps / (8.0 * mean_size);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto k = static_cast<std::size_t>(c);
    p.lambda_u[k] = traffic.upstream_load_bps * traffic.byte_shares[k] / (8.0 * class_mean_size(c));
    const double byte_time = 8.0 / upstream_bps;
    p.second_moment[k] = class_second_moment_size(c) * byte_time * byte_time;
  }
  return p;
}

TxBudgetAnalysis analyze_tx_budget(const TrafficModelParams& params, const ClassTable& classes, PkVariant variant) {
  TxBudgetAnalysis out;
  std::array<double, kNumClasses> thresholds{};
  for (std::size_t i = 0; i < kNumClasses; ++i) thresholds[i] = classes[i].delay_threshold_s;
  try {
    for (int i = 0; i < kNumClasses; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out.waiting[k] = pk_waiting_time(i, params.lambda_u, params.second_moment, params.mu_u, variant);
      out.delay[k] = total_delay(out.waiting[k], params.mu_u, params.propagation);
    }
  } catch (const SaturationError&) {
    out.saturated = true;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      out.waiting[k] = std::numeric_limits<double>::infinity();
      out.delay[k] = std::numeric_limits<double>::infinity();
    }
  }
  out.budget = sleep_budget(thresholds, out.delay, params.t_cycle);
  return out;
}

}  // namespace ponsim
