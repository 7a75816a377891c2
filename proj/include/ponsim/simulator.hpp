#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "ponsim/analysis.hpp"
#include "ponsim/scheduler.hpp"
#include "ponsim/sleep_fsm.hpp"
#include "ponsim/traffic.hpp"

namespace ponsim {

struct SimConfig {
  int num_onus = 32;
  double downstream_bps = 10.0e9;
  double upstream_bps = 2.5e9;
  FsmConfig fsm;
  ClassTable classes = default_class_table();
  PowerProfile power = PowerProfile::standard();
  TrafficConfig traffic;
  double propagation_s = 1.0e-4;            // one-way, used for every ONU unless overridden
  std::vector<double> propagation_per_onu;  // optional per-ONU override
  std::int64_t warmup_cycles = 1000;
  std::int64_t measured_cycles = 100000;
  std::uint64_t seed = 1;
  bool deadline_aware_wake = true;
  std::int64_t report_bytes = 0;  // REPORT overhead added to every grant
  std::int64_t fba_bytes = 0;     // 0 selects upstream capacity per cycle / num_onus
  PkVariant pk_variant = PkVariant::all_classes;

  void validate() const;

  double propagation(std::uint32_t onu) const {
    return propagation_per_onu.empty() ? propagation_s : propagation_per_onu[onu];
  }
  std::int64_t upstream_capacity_bytes() const;
  std::int64_t downstream_capacity_bytes() const;
  std::int64_t effective_fba_bytes() const;
  double utilization_ds() const { return num_onus * traffic.downstream_load_bps / downstream_bps; }
  double utilization_us() const { return num_onus * traffic.upstream_load_bps / upstream_bps; }
};

/// Log-binned delay histogram, 200 bins per decade between 1e-7 s and 1e3 s.
class DelayHistogram {
 public:
  void add(double seconds);
  std::uint64_t count() const { return count_; }
  double mean() const;
  double max() const { return max_; }
  /// Quantile estimate at the geometric centre of the bin holding it; NaN when empty.
  double quantile(double q) const;

 private:
  static constexpr int kBinsPerDecade = 200;
  static constexpr double kLowest = 1.0e-7;
  static constexpr int kBins = 10 * kBinsPerDecade;

  std::array<std::uint64_t, kBins + 2> bins_{};
  std::uint64_t count_ = 0;
  double sum_ = 0.0;
  double max_ = 0.0;
};

/// Self-checks carried out by the engine every cycle. All stay zero in a correct run.
struct AuditCounters {
  std::uint64_t mirror_divergences = 0;
  std::uint64_t ts_divergences = 0;
  std::uint64_t ts_checks = 0;
  std::uint64_t grant_violations = 0;
  std::uint64_t sleeping_deliveries = 0;
  std::uint64_t conservation_violations = 0;
};

struct SimMetrics {
  std::uint64_t seed = 0;
  double offered_ds_bps = 0.0;  // per ONU
  double offered_us_bps = 0.0;  // per ONU
  double utilization_ds = 0.0;
  double utilization_us = 0.0;
  double energy_j = 0.0;
  double baseline_j = 0.0;
  double energy_saving = 0.0;
  double delay_ds_mean_s = 0.0;
  double delay_ds_p95_s = 0.0;
  std::array<double, kNumClasses> delay_us_mean_s{};
  std::array<double, kNumClasses> delay_us_p95_s{};
  std::array<double, kNumClasses> delay_us_max_s{};
  std::array<std::uint64_t, kNumClasses> us_delivered{};
  std::array<std::uint64_t, kNumClasses> us_threshold_misses{};
  double tx_sleep_mean_s = 0.0;
  std::uint64_t tx_sleep_episodes = 0;
  double tx_sleep_sd_s = 0.0;  // sample standard deviation of the episode length
  std::uint64_t early_wakes = 0;
  int tx_sleep_budget_cycles = 0;  // ONU 0
  std::array<double, 9> occupancy{};  // indexed by PowerProfile::index
  std::uint64_t pkts_generated = 0;
  std::uint64_t pkts_delivered = 0;
  std::uint64_t pkts_residual = 0;
  bool residual_growth = false;
  AuditCounters audits;
};

/// 1 - total/baseline, clamped at zero with a warning.
double energy_saving(double total_j, double baseline_j);
double energy_saving(const SimMetrics& m);

/// Cycle-driven EPON engine. Each step() runs one scheduling cycle:
///  0. sleeping transmitters whose oldest packet would miss its deadline wake early;
///  1. the OLT grants upstream bandwidth from the previous cycle's reports;
///  2. ONUs transmit queued packets in strict priority within their grants;
///  3. the OLT releases traffic held for receivers that are up, then sends this cycle's
///     downstream arrivals at line rate in arrival order or holds them for sleeping receivers;
///  4. the cycle's upstream arrivals join the ONU queues;
///  5. energy and state occupancy are accrued;
///  6. awake transmitters report their queues;
///  7. ONU automata and the OLT mirror step and are compared;
///  8. packet conservation is audited.
class Engine {
 public:
  explicit Engine(const SimConfig& cfg);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void step();
  void run();

  std::int64_t cycle() const { return cycle_; }
  bool finished() const { return cycle_ >= cfg_.warmup_cycles + cfg_.measured_cycles; }
  const SimConfig& config() const { return cfg_; }

  const RxState& rx(std::uint32_t onu) const { return onus_[onu].rx; }
  const TxState& tx(std::uint32_t onu) const { return onus_[onu].tx; }
  const MirrorState& mirror(std::uint32_t onu) const { return mirror_[onu]; }
  const OltBook& book() const { return book_; }
  std::int64_t queued_bytes(std::uint32_t onu) const { return onus_[onu].queued_bytes; }
  int tx_sleep_budget(std::uint32_t onu) const { return onus_[onu].sleep_budget; }
  /// Grants issued by the OLT in the last completed cycle.
  const std::vector<CycleGrant>& last_grants() const { return grants_; }
  const AuditCounters& audits() const { return audits_; }
  /// Packets generated, delivered and still held, both directions, since cycle 0.
  std::uint64_t generated() const { return generated_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t in_system() const;

  SimMetrics metrics() const;

 private:
  struct Onu {
    RxState rx;
    TxState tx;
    std::array<std::deque<PacketRecord>, kNumClasses> queues;
    std::int64_t queued_bytes = 0;
    std::uint64_t queued_packets = 0;
    double ds_last_done = -1.0;  // completion of the last downstream packet sent to this ONU
    std::optional<std::int64_t> report;  // sent in the last cycle
    double own_previous_start = 0.0;
    int sleep_budget = 0;
    std::int64_t sleep_episode_cycles = 0;
    bool rx_just_woke = false;
    bool allocated_ds = false;
    std::uint64_t us_generated = 0, us_delivered = 0, ds_generated = 0, ds_delivered = 0;
    std::unique_ptr<TrafficSource> us_source;
    std::unique_ptr<TrafficSource> ds_source;
  };

  void early_wake(double cycle_start);
  std::vector<std::vector<CycleGrant>> allocate_upstream(double cycle_start);
  void transmit_upstream(const std::vector<std::vector<CycleGrant>>& olt_pieces,
                         const std::vector<TxState>& tx_at_cycle_start);
  void serve_downstream(double cycle_start);
  void send_downstream(Onu& onu, const PacketRecord& p, double ready);
  void generate_arrivals();
  void accrue();
  void send_reports();
  void step_automata(double cycle_start);
  void audit_conservation();
  void close_sleep_episode(Onu& onu);
  bool measuring() const { return cycle_ >= cfg_.warmup_cycles; }
  void record_upstream(const PacketRecord& p, double completion);
  void record_downstream(const PacketRecord& p, double completion);

  SimConfig cfg_;
  std::int64_t us_capacity_;
  OltBook book_;
  std::vector<Onu> onus_;
  std::vector<MirrorState> mirror_;
  std::vector<CycleGrant> grants_;
  std::vector<PacketRecord> ds_arrivals_;
  std::vector<std::size_t> ds_run_ends_;
  std::vector<std::uint32_t> ds_order_;
  double ds_link_free_ = 0.0;
  std::int64_t cycle_ = 0;
  double measure_start_ = 0.0;

  AuditCounters audits_;
  std::uint64_t generated_ = 0;
  std::uint64_t delivered_ = 0;
  std::array<std::uint64_t, 9> occupancy_cycles_{};
  double energy_j_ = 0.0;
  DelayHistogram ds_delay_;
  std::array<DelayHistogram, kNumClasses> us_delay_;
  std::array<std::uint64_t, kNumClasses> us_misses_{};
  std::uint64_t sleep_episodes_ = 0;
  std::int64_t sleep_episode_cycles_ = 0;
  double sleep_episode_sq_ = 0.0;
  std::uint64_t early_wakes_ = 0;
  std::uint64_t backlog_mid_ = 0;
};

SimMetrics run_simulation(const SimConfig& cfg);

enum class SweepAxis { ds_load, us_load, rx_listen, rx_sleep, tx_listen, delay_threshold };

std::string_view to_string(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

/// Copy of base with the axis set to value; delay_threshold sets all three class thresholds.
SimConfig apply_axis(const SimConfig& base, SweepAxis axis, double value);

struct SweepRow {
  double axis_value = 0.0;
  SimMetrics metrics;
};

enum class SweepSeeding {
  common,       // every point reuses base.seed, so points differ only in the swept parameter
  independent,  // point k runs with a seed derived from (base.seed, k)
};

/// One run per value, rows in input order. parallel > 1 runs points on that many worker threads.
std::vector<SweepRow> sweep(const SimConfig& base, SweepAxis axis, const std::vector<double>& values,
                            int parallel = 1, SweepSeeding seeding = SweepSeeding::common);

}  // namespace ponsim
