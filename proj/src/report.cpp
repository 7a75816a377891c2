#include "ponsim/report.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ponsim {

namespace {

constexpr const char* kClassNames[kNumClasses] = {"cbr", "vbr", "be"};

template <typename T>
void put(std::string& line, const T& v) {
  if (!line.empty()) line += ',';
  if constexpr (std::is_floating_point_v<T>) line += csv_number(v);
  else line += fmt::format("{}", v);
}

void put_header(std::string& line, const std::string& name) {
  if (!line.empty()) line += ',';
  line += name;
}

}  // namespace

AnalysisRow analyze_point(const SimConfig& cfg, int q_max) {
  cfg.validate();
  AnalysisRow row;
  row.params = model_params_from_loads(cfg.traffic, cfg.upstream_bps, cfg.downstream_bps, cfg.fsm.cycle_duration,
                                       cfg.propagation(0));
  row.rho_ds = row.params.lambda_d / row.params.mu_d;
  row.rho_us = row.params.lambda_u_total() / row.params.mu_u;
  row.tx = analyze_tx_budget(row.params, cfg.classes, cfg.pk_variant);
  row.saturated = row.tx.saturated || row.rho_ds >= 1.0;

  const auto rx_chain = build_rx_chain(row.params, cfg.fsm.rx_listen_cycles, cfg.fsm.rx_sleep_cycles, q_max);
  const auto tx_chain = build_tx_chain(row.params, cfg.fsm.tx_listen_cycles, row.tx.budget.quantized_cycles, q_max);
  const auto rx_pi = stationary(rx_chain);
  const auto tx_pi = stationary(tx_chain);
  row.rx_occupancy = occupancy_by_kind(rx_chain, rx_pi.pi);
  row.tx_occupancy = occupancy_by_kind(tx_chain, tx_pi.pi);
  row.chain_residual = std::max(rx_pi.residual, tx_pi.residual);
  row.truncation_warning = rx_chain.truncation_warning || tx_chain.truncation_warning;
  row.expected_power_w = expected_power(row.rx_occupancy, row.tx_occupancy, cfg.power);
  row.expected_saving = 1.0 - row.expected_power_w / cfg.power.at(StateKind::awake, StateKind::awake);
  return row;
}

std::string csv_number(double v) { return fmt::format("{:.6g}", v); }

std::string metrics_csv_header(bool with_axis) {
  std::string h;
  if (with_axis) put_header(h, "axis_value");
  for (const char* name : {"seed", "offered_ds_bps", "offered_us_bps", "utilization_ds", "utilization_us", "energy_j",
                           "baseline_j", "energy_saving", "delay_ds_mean_s", "delay_ds_p95_s"})
    put_header(h, name);
  for (const char* c : kClassNames) put_header(h, fmt::format("delay_us_{}_mean_s", c));
  put_header(h, "tx_sleep_mean_s");
  for (std::size_t i = 0; i < 9; ++i) put_header(h, "occ_" + PowerProfile::label(i));
  for (const char* name : {"pkts_generated", "pkts_delivered", "pkts_residual"}) put_header(h, name);
  // Extension columns follow the fixed block.
  for (const char* c : kClassNames) put_header(h, fmt::format("delay_us_{}_p95_s", c));
  for (const char* c : kClassNames) put_header(h, fmt::format("delay_us_{}_max_s", c));
  for (const char* c : kClassNames) put_header(h, fmt::format("us_{}_threshold_misses", c));
  for (const char* name : {"tx_sleep_episodes", "tx_sleep_sd_s", "tx_sleep_budget_cycles", "early_wakes", "residual_growth",
                           "mirror_divergences", "ts_divergences", "grant_violations", "conservation_violations"})
    put_header(h, name);
  return h;
}

std::string metrics_csv_row(const SimMetrics& m, std::optional<double> axis_value) {
  std::string r;
  if (axis_value) put(r, *axis_value);
  put(r, m.seed);
  put(r, m.offered_ds_bps);
  put(r, m.offered_us_bps);
  put(r, m.utilization_ds);
  put(r, m.utilization_us);
  put(r, m.energy_j);
  put(r, m.baseline_j);
  put(r, m.energy_saving);
  put(r, m.delay_ds_mean_s);
  put(r, m.delay_ds_p95_s);
  for (double d : m.delay_us_mean_s) put(r, d);
  put(r, m.tx_sleep_mean_s);
  for (double o : m.occupancy) put(r, o);
  put(r, m.pkts_generated);
  put(r, m.pkts_delivered);
  put(r, m.pkts_residual);
  for (double d : m.delay_us_p95_s) put(r, d);
  for (double d : m.delay_us_max_s) put(r, d);
  for (auto n : m.us_threshold_misses) put(r, n);
  put(r, m.tx_sleep_episodes);
  put(r, m.tx_sleep_sd_s);
  put(r, m.tx_sleep_budget_cycles);
  put(r, m.early_wakes);
  put(r, static_cast<int>(m.residual_growth));
  put(r, m.audits.mirror_divergences);
  put(r, m.audits.ts_divergences);
  put(r, m.audits.grant_violations);
  put(r, m.audits.conservation_violations);
  return r;
}

void write_metrics_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_axis) {
  out << metrics_csv_header(with_axis) << '\n';
  for (const auto& row : rows)
    out << metrics_csv_row(row.metrics, with_axis ? std::optional<double>(row.axis_value) : std::nullopt) << '\n';
}

std::string analysis_csv_header(bool with_axis) {
  std::string h;
  if (with_axis) put_header(h, "axis_value");
  for (const char* name : {"lambda_ds_pps", "lambda_us_pps", "rho_ds", "rho_us"}) put_header(h, name);
  for (const char* c : kClassNames) put_header(h, fmt::format("w_{}_s", c));
  for (const char* c : kClassNames) put_header(h, fmt::format("t_{}_s", c));
  for (const char* c : kClassNames) put_header(h, fmt::format("sleep_{}_s", c));
  for (const char* name : {"tx_sleep_s", "tx_sleep_cycles", "rx_awake", "rx_listen", "rx_sleep", "tx_awake",
                           "tx_listen", "tx_sleep", "expected_power_w", "expected_saving", "chain_residual",
                           "truncation_warning", "saturated"})
    put_header(h, name);
  return h;
}

std::string analysis_csv_row(const AnalysisRow& a) {
  std::string r;
  if (a.axis_value) put(r, *a.axis_value);
  put(r, a.params.lambda_d);
  put(r, a.params.lambda_u_total());
  put(r, a.rho_ds);
  put(r, a.rho_us);
  for (double w : a.tx.waiting) put(r, w);
  for (double t : a.tx.delay) put(r, t);
  for (double s : a.tx.budget.per_class) put(r, s);
  put(r, a.tx.budget.tx_sleep);
  put(r, a.tx.budget.quantized_cycles);
  put(r, a.rx_occupancy.awake);
  put(r, a.rx_occupancy.listen);
  put(r, a.rx_occupancy.sleep);
  put(r, a.tx_occupancy.awake);
  put(r, a.tx_occupancy.listen);
  put(r, a.tx_occupancy.sleep);
  put(r, a.expected_power_w);
  put(r, a.expected_saving);
  put(r, a.chain_residual);
  put(r, static_cast<int>(a.truncation_warning));
  put(r, static_cast<int>(a.saturated));
  return r;
}

void write_analysis_csv(std::ostream& out, const std::vector<AnalysisRow>& rows, bool with_axis) {
  out << analysis_csv_header(with_axis) << '\n';
  for (const auto& row : rows) out << analysis_csv_row(row) << '\n';
}

void write_report(std::ostream& out, const RunConfig& cfg, const std::vector<SweepRow>& rows) {
  const SimConfig& s = cfg.sim;
  fmt::print(out, "ponsim report\n\n");
  fmt::print(out, "network     {} ONUs, {:g} Gb/s down, {:g} Gb/s up, cycle {:g} ms\n", s.num_onus,
             s.downstream_bps / 1e9, s.upstream_bps / 1e9, s.fsm.cycle_duration * 1e3);
  fmt::print(out, "automata    rx listen {}, rx sleep {}, tx listen {}, deadline-aware wake {}\n",
             s.fsm.rx_listen_cycles, s.fsm.rx_sleep_cycles, s.fsm.tx_listen_cycles,
             s.deadline_aware_wake ? "on" : "off");
  fmt::print(out, "traffic     {} model, {:.6g} b/s down and {:.6g} b/s up per ONU\n",
             s.traffic.model == TrafficModel::poisson ? "poisson" : "self-similar", s.traffic.downstream_load_bps,
             s.traffic.upstream_load_bps);
  fmt::print(out, "horizon     {} warmup + {} measured cycles, seed {}\n", s.warmup_cycles, s.measured_cycles, s.seed);
  if (cfg.sweep.axis) fmt::print(out, "sweep       {} over {} points\n", to_string(*cfg.sweep.axis), rows.size());

  for (const auto& row : rows) {
    const SimMetrics& m = row.metrics;
    out << '\n';
    if (cfg.sweep.axis) fmt::print(out, "[{} = {:.6g}]\n", to_string(*cfg.sweep.axis), row.axis_value);
    fmt::print(out, "utilization      down {:.4f}  up {:.4f}\n", m.utilization_ds, m.utilization_us);
    fmt::print(out, "energy           {:.6g} J of {:.6g} J baseline, saving {:.2f}%\n", m.energy_j, m.baseline_j,
               100.0 * m.energy_saving);
    fmt::print(out, "downstream delay mean {:.6g} s  p95 {:.6g} s\n", m.delay_ds_mean_s, m.delay_ds_p95_s);
    for (std::size_t c = 0; c < kNumClasses; ++c)
      fmt::print(out, "upstream {:<3}     mean {:.6g} s  p95 {:.6g} s  max {:.6g} s  over threshold {}\n",
                 kClassNames[c], m.delay_us_mean_s[c], m.delay_us_p95_s[c], m.delay_us_max_s[c],
                 m.us_threshold_misses[c]);
    fmt::print(out, "tx sleep         {} episodes, mean {:.6g} s, budget {} cycles, {} early wakes\n",
               m.tx_sleep_episodes, m.tx_sleep_mean_s, m.tx_sleep_budget_cycles, m.early_wakes);
    fmt::print(out, "occupancy       ");
    for (std::size_t i = 0; i < 9; ++i) fmt::print(out, " {}={:.4f}", PowerProfile::label(i), m.occupancy[i]);
    out << '\n';
    fmt::print(out, "packets          generated {}  delivered {}  residual {}{}\n", m.pkts_generated,
               m.pkts_delivered, m.pkts_residual, m.residual_growth ? "  (backlog growing: offered load too high)" : "");
    fmt::print(out, "audits           mirror {}  T_s {}/{}  grants {}  conservation {}\n", m.audits.mirror_divergences,
               m.audits.ts_divergences, m.audits.ts_checks, m.audits.grant_violations,
               m.audits.conservation_violations);
  }
}

}  // namespace ponsim
