#include "ponsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ponsim {

void SimConfig::validate() const {
  if (num_onus < 1) throw std::invalid_argument("network.num_onus must be >= 1");
  if (!(downstream_bps > 0.0)) throw std::invalid_argument("network.downstream_bps must be positive");
  if (!(upstream_bps > 0.0)) throw std::invalid_argument("network.upstream_bps must be positive");
  fsm.validate();
  validate_class_table(classes);
  if (auto v = power.ladder_violation()) throw std::invalid_argument(*v);
  traffic.validate();
  if (propagation_s < 0.0) throw std::invalid_argument("network.propagation_s must be >= 0");
  if (!propagation_per_onu.empty()) {
    if (propagation_per_onu.size() != static_cast<std::size_t>(num_onus))
      throw std::invalid_argument("network.propagation_per_onu_s needs one value per ONU");
    for (double p : propagation_per_onu)
      if (p < 0.0) throw std::invalid_argument("network.propagation_per_onu_s values must be >= 0");
  }
  if (warmup_cycles < 0) throw std::invalid_argument("simulation.warmup_cycles must be >= 0");
  if (measured_cycles < 1) throw std::invalid_argument("simulation.measured_cycles must be >= 1");
  if (warmup_cycles >= warmup_cycles + measured_cycles)
    throw std::invalid_argument("simulation.warmup_cycles must end before the horizon");
  if (report_bytes < 0) throw std::invalid_argument("network.report_bytes must be >= 0");
  if (fba_bytes < 0) throw std::invalid_argument("network.fba_bytes must be >= 0");
  if (upstream_capacity_bytes() < 1) throw std::invalid_argument("network.upstream_bps too small for one byte per cycle");
  if (effective_fba_bytes() * num_onus > upstream_capacity_bytes())
    throw std::invalid_argument("network.fba_bytes times num_onus exceeds the upstream capacity per cycle");
}

std::int64_t SimConfig::upstream_capacity_bytes() const {
  return static_cast<std::int64_t>(std::floor(upstream_bps * fsm.cycle_duration / 8.0 + 1e-9));
}

std::int64_t SimConfig::downstream_capacity_bytes() const {
  return static_cast<std::int64_t>(std::floor(downstream_bps * fsm.cycle_duration / 8.0 + 1e-9));
}

std::int64_t SimConfig::effective_fba_bytes() const {
  return fba_bytes > 0 ? fba_bytes : upstream_capacity_bytes() / num_onus;
}

void DelayHistogram::add(double seconds) {
  ++count_;
  sum_ += seconds;
  max_ = std::max(max_, seconds);
  std::size_t bin = 0;
  if (seconds >= kLowest) {
    const double pos = std::log10(seconds / kLowest) * kBinsPerDecade;
    bin = 1 + static_cast<std::size_t>(std::min<double>(pos, kBins));
  }
  ++bins_[std::min<std::size_t>(bin, bins_.size() - 1)];
}

double DelayHistogram::mean() const {
  return count_ == 0 ? std::numeric_limits<double>::quiet_NaN() : sum_ / static_cast<double>(count_);
}

double DelayHistogram::quantile(double q) const {
  if (count_ == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto target = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(count_)));
  std::uint64_t acc = 0;
  for (std::size_t b = 0; b < bins_.size(); ++b) {
    acc += bins_[b];
    if (acc >= std::max<std::uint64_t>(target, 1)) {
      if (b == 0) return kLowest;
      if (b == bins_.size() - 1) return max_;
      return std::min(max_, kLowest * std::pow(10.0, (static_cast<double>(b) - 0.5) / kBinsPerDecade));
    }
  }
  return max_;
}

double energy_saving(double total_j, double baseline_j) {
  if (!(baseline_j > 0.0)) throw std::invalid_argument("baseline energy must be positive");
  const double s = 1.0 - total_j / baseline_j;
  if (s < 0.0) {
    spdlog::warn("energy above the always-awake baseline ({} J > {} J); saving clamped to 0", total_j, baseline_j);
    return 0.0;
  }
  return s;
}

double energy_saving(const SimMetrics& m) { return energy_saving(m.energy_j, m.baseline_j); }

namespace {

const SimConfig& validated(const SimConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

Engine::Engine(const SimConfig& cfg)
    : cfg_(validated(cfg)),
      us_capacity_(cfg.upstream_capacity_bytes()),
      book_(static_cast<std::size_t>(cfg.num_onus), cfg.effective_fba_bytes(), cfg.upstream_bps, cfg.downstream_bps,
            cfg.fsm.cycle_duration),
      onus_(static_cast<std::size_t>(cfg.num_onus)),
      mirror_(static_cast<std::size_t>(cfg.num_onus)) {
  cfg_.traffic.seed = cfg_.seed;
  measure_start_ = static_cast<double>(cfg_.warmup_cycles) * cfg_.fsm.cycle_duration;
  const double t_cycle = cfg_.fsm.cycle_duration;
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    Onu& onu = onus_[j];
    onu.us_source = make_source(cfg_.traffic, Direction::upstream, j, t_cycle);
    onu.ds_source = make_source(cfg_.traffic, Direction::downstream, j, t_cycle);
    onu.own_previous_start = book_.previous_start(j);
    const auto params =
        model_params_from_loads(cfg_.traffic, cfg_.upstream_bps, cfg_.downstream_bps, t_cycle, cfg_.propagation(j));
    onu.sleep_budget = analyze_tx_budget(params, cfg_.classes, cfg_.pk_variant).budget.quantized_cycles;
  }
}

Engine::~Engine() = default;

void Engine::run() {
  while (!finished()) step();
}

void Engine::step() {
  const double cycle_start = static_cast<double>(cycle_) * cfg_.fsm.cycle_duration;
  std::vector<TxState> tx_at_start(onus_.size());
  for (std::size_t j = 0; j < onus_.size(); ++j) tx_at_start[j] = onus_[j].tx;

  early_wake(cycle_start);
  const auto pieces = allocate_upstream(cycle_start);
  transmit_upstream(pieces, tx_at_start);
  serve_downstream(cycle_start);
  generate_arrivals();
  accrue();
  send_reports();
  step_automata(cycle_start);
  audit_conservation();

  if (cycle_ == cfg_.warmup_cycles + cfg_.measured_cycles / 2) backlog_mid_ = in_system();
  ++cycle_;
}

void Engine::close_sleep_episode(Onu& onu) {
  if (measuring()) {
    ++sleep_episodes_;
    sleep_episode_cycles_ += onu.sleep_episode_cycles;
    sleep_episode_sq_ += static_cast<double>(onu.sleep_episode_cycles) * static_cast<double>(onu.sleep_episode_cycles);
  }
  onu.sleep_episode_cycles = 0;
}

void Engine::early_wake(double cycle_start) {
  if (!cfg_.deadline_aware_wake) return;
  const double t_cycle = cfg_.fsm.cycle_duration;
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    Onu& onu = onus_[j];
    if (onu.tx.kind != StateKind::sleep) continue;
    // A woken transmitter reports now and is served from the next cycle on, at worst at the
    // fixed-allocation rate. Wake when deferring by one more cycle could miss a deadline.
    const double drain = static_cast<double>(std::max<std::int64_t>(1, book_.fba_bytes() - cfg_.report_bytes));
    std::int64_t ahead = 0;
    bool urgent = false;
    for (std::size_t c = 0; c < kNumClasses && !urgent; ++c) {
      for (const auto& p : onu.queues[c]) {
        ahead += p.size_bytes;
        const double cycles = std::ceil(static_cast<double>(ahead) / drain);
        const double done = cycle_start + (1.0 + cycles) * t_cycle + cfg_.propagation(j);
        if (p.arrival_time + cfg_.classes[c].delay_threshold_s - done < t_cycle) {
          urgent = true;
          break;
        }
      }
    }
    if (!urgent) continue;
    onu.tx = tx_wake_early(onu.tx);
    if (measuring()) ++early_wakes_;
    close_sleep_episode(onu);
  }
}

std::vector<std::vector<CycleGrant>> Engine::allocate_upstream(double cycle_start) {
  const double t_cycle = cfg_.fsm.cycle_duration;
  const UpstreamTiming timing{cycle_start, t_cycle, cfg_.upstream_bps};
  std::vector<CycleGrant> pinned;
  std::vector<ReportMsg> reports;
  std::int64_t pinned_bytes = 0;
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    const MirrorState& m = mirror_[j];
    const std::int64_t request = onus_[j].report.value_or(0) + cfg_.report_bytes;
    if (m.rx.kind == StateKind::sleep) {
      if (auto g = rx_sleep_allocate(j, request, book_, m.tx.kind != StateKind::sleep, t_cycle, cycle_)) {
        pinned_bytes += g->length_bytes;
        pinned.push_back(*g);
      }
    } else if (m.tx.kind == StateKind::sleep) {
      book_.set_previous_start(j, book_.previous_start(j) + t_cycle);
    } else {
      reports.push_back({j, request, cycle_});
    }
  }

  std::vector<CycleGrant> dba;
  const std::int64_t capacity = us_capacity_ - pinned_bytes;
  if (capacity > 0) {
    dba = dba_allocate(reports, capacity, timing, cycle_);
  } else {
    for (const auto& r : reports) dba.push_back({r.onu_id, cycle_start, 0, cycle_});
  }
  const auto laid = layout_around_pinned(dba, pinned, timing);

  std::vector<std::vector<CycleGrant>> pieces(onus_.size());
  for (const auto& g : pinned) pieces[g.onu_id].push_back(g);
  for (const auto& g : laid) pieces[g.onu_id].push_back(g);
  for (const auto& r : reports) book_.set_previous_start(r.onu_id, pieces[r.onu_id].front().start_time);

  grants_ = pinned;
  grants_.insert(grants_.end(), laid.begin(), laid.end());
  if (auto why = check_grant_feasibility(grants_, timing); !why.empty()) {
    ++audits_.grant_violations;
    spdlog::debug("cycle {}: infeasible grants: {}", cycle_, why);
  }
  return pieces;
}

void Engine::transmit_upstream(const std::vector<std::vector<CycleGrant>>& olt_pieces,
                               const std::vector<TxState>& tx_at_start) {
  const double t_cycle = cfg_.fsm.cycle_duration;
  const double byte_time = 8.0 / cfg_.upstream_bps;
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    Onu& onu = onus_[j];
    std::vector<CycleGrant> pieces;
    if (onu.rx.kind == StateKind::sleep) {
      // The receiver cannot hear a GATE, so the ONU derives its own slot.
      onu.own_previous_start += t_cycle;
      if (tx_at_start[j].kind != StateKind::sleep) {
        const std::int64_t length =
            std::min(onu.report.value_or(0) + cfg_.report_bytes, book_.fba_bytes());
        pieces.push_back({j, onu.own_previous_start, length, cycle_});
        ++audits_.ts_checks;
        const auto& olt = olt_pieces[j];
        if (olt.size() != 1 || olt.front().start_time != pieces.front().start_time ||
            olt.front().length_bytes != length)
          ++audits_.ts_divergences;
      } else if (!olt_pieces[j].empty()) {
        ++audits_.ts_divergences;
      }
    } else {
      pieces = olt_pieces[j];
      onu.own_previous_start = pieces.empty() ? onu.own_previous_start + t_cycle : pieces.front().start_time;
    }
    if (pieces.empty()) continue;

    std::int64_t granted = 0;
    for (const auto& p : pieces) granted += p.length_bytes;
    std::int64_t budget = std::max<std::int64_t>(0, granted - cfg_.report_bytes);
    std::int64_t offset = 0;
    std::size_t piece = 0;
    std::int64_t piece_begin = 0;  // cumulative bytes before the current piece
    bool blocked = false;
    for (std::size_t c = 0; c < kNumClasses && !blocked; ++c) {
      auto& q = onu.queues[c];
      while (!q.empty()) {
        PacketRecord p = q.front();
        if (p.size_bytes > budget) {
          blocked = true;
          break;
        }
        q.pop_front();
        budget -= p.size_bytes;
        offset += p.size_bytes;
        onu.queued_bytes -= p.size_bytes;
        --onu.queued_packets;
        while (piece + 1 < pieces.size() && offset > piece_begin + pieces[piece].length_bytes) {
          piece_begin += pieces[piece].length_bytes;
          ++piece;
        }
        const double done =
            pieces[piece].start_time + static_cast<double>(offset - piece_begin) * byte_time + cfg_.propagation(j);
        ++onu.us_delivered;
        record_upstream(p, done);
      }
    }
  }
}

void Engine::send_downstream(Onu& onu, const PacketRecord& p, double ready) {
  const double start = std::max(ready, ds_link_free_);
  ds_link_free_ = start + static_cast<double>(p.size_bytes) * 8.0 / cfg_.downstream_bps;
  const double done = ds_link_free_ + cfg_.propagation(p.onu_id);
  if (onu.rx.kind == StateKind::sleep) ++audits_.sleeping_deliveries;
  onu.allocated_ds = true;
  onu.ds_last_done = std::max(onu.ds_last_done, done);
  ++onu.ds_delivered;
  record_downstream(p, done);
}

void Engine::serve_downstream(double cycle_start) {
  constexpr std::int64_t unlimited = std::numeric_limits<std::int64_t>::max();
  // A receiver stays allocated while the last packet sent to it is still on the fibre.
  for (Onu& onu : onus_) onu.allocated_ds = onu.ds_last_done >= cycle_start;

  // Receivers that are up take what the OLT held for them first, oldest first.
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    Onu& onu = onus_[j];
    if (book_.buffer(j).empty()) continue;
    const double ready = cycle_start + (onu.rx_just_woke ? cfg_.fsm.wake_overhead : 0.0);
    for (const auto& p : buffer_or_deliver_downstream({}, mirror_[j].rx.kind, book_, j, unlimited))
      send_downstream(onu, p, ready);
  }

  // This cycle's arrivals go out at line rate in arrival order, or wait for a sleeping receiver.
  ds_arrivals_.clear();
  ds_run_ends_.clear();
  for (Onu& onu : onus_) {
    const std::size_t before = ds_arrivals_.size();
    onu.ds_source->generate(cycle_, ds_arrivals_);
    ds_run_ends_.push_back(ds_arrivals_.size());
    onu.ds_generated += ds_arrivals_.size() - before;
    generated_ += ds_arrivals_.size() - before;
  }
  merge_sorted_runs(ds_arrivals_, ds_run_ends_, ds_order_);
  for (std::uint32_t k : ds_order_) {
    const PacketRecord& p = ds_arrivals_[k];
    const double when = p.arrival_time;
    Onu& onu = onus_[p.onu_id];
    if (mirror_[p.onu_id].rx.kind == StateKind::sleep) {
      book_.push_buffer(p);
      continue;
    }
    send_downstream(onu, p, std::max(when, cycle_start + (onu.rx_just_woke ? cfg_.fsm.wake_overhead : 0.0)));
  }
}

void Engine::generate_arrivals() {
  std::vector<PacketRecord> scratch;
  for (Onu& onu : onus_) {
    scratch.clear();
    onu.us_source->generate(cycle_, scratch);
    for (const auto& p : scratch) {
      onu.queues[p.service_class].push_back(p);
      onu.queued_bytes += p.size_bytes;
      ++onu.queued_packets;
    }
    onu.us_generated += scratch.size();
    generated_ += scratch.size();
  }
}

void Engine::accrue() {
  for (Onu& onu : onus_) {
    if (onu.tx.kind == StateKind::sleep) ++onu.sleep_episode_cycles;
    if (!measuring()) continue;
    ++occupancy_cycles_[PowerProfile::index(onu.rx.kind, onu.tx.kind)];
    energy_j_ += power_of(onu.rx.kind, onu.tx.kind, cfg_.power) * cfg_.fsm.cycle_duration;
  }
}

void Engine::send_reports() {
  for (Onu& onu : onus_) {
    if (onu.tx.kind == StateKind::sleep)
      onu.report.reset();
    else
      onu.report = onu.queued_bytes;
  }
}

void Engine::step_automata(double cycle_start) {
  const FsmConfig& fsm = cfg_.fsm;
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    Onu& onu = onus_[j];
    const bool buffered = book_.buffered_bytes(j) > 0;

    const RxState rx_next = rx_step(onu.rx, onu.allocated_ds, buffered, fsm);
    TxState tx_next;
    if (onu.tx.kind == StateKind::sleep) {
      tx_next = tx_step(onu.tx, false, true, onu.sleep_budget, fsm);
    } else {
      const bool backlog = onu.queued_bytes > 0;
      tx_next = tx_step(onu.tx, backlog, !backlog, onu.sleep_budget, fsm);
    }

    OltObservation seen;
    seen.allocated_downstream = onu.allocated_ds;
    seen.buffered_downstream = buffered;
    seen.report_received = onu.report.has_value();
    seen.requested_bytes = onu.report.value_or(0);
    seen.sleep_budget = onu.sleep_budget;
    const MirrorState mirror_next = olt_mirror_step(seen, mirror_[j], fsm);

    // Receiver sleep starts on the fixed-slot grid so pinned grants never collide.
    if (onu.rx.kind == StateKind::listen && rx_next.kind == StateKind::sleep)
      onu.own_previous_start = book_.fixed_slot_start(j, cycle_start);
    if (mirror_[j].rx.kind == StateKind::listen && mirror_next.rx.kind == StateKind::sleep)
      book_.set_previous_start(j, book_.fixed_slot_start(j, cycle_start));

    if (onu.tx.kind == StateKind::sleep && tx_next.kind != StateKind::sleep) close_sleep_episode(onu);
    onu.rx_just_woke = onu.rx.kind == StateKind::sleep && rx_next.kind != StateKind::sleep;
    onu.rx = rx_next;
    onu.tx = tx_next;
    mirror_[j] = mirror_next;
    if (!(mirror_next.rx == rx_next && mirror_next.tx == tx_next)) {
      ++audits_.mirror_divergences;
      spdlog::debug("cycle {}: mirror of onu {} diverged", cycle_, j);
    }
  }
}

void Engine::audit_conservation() {
  for (std::uint32_t j = 0; j < onus_.size(); ++j) {
    const Onu& onu = onus_[j];
    const bool us_ok = onu.us_generated == onu.us_delivered + onu.queued_packets;
    const bool ds_ok = onu.ds_generated == onu.ds_delivered + book_.buffer(j).size();
    if (!us_ok || !ds_ok) ++audits_.conservation_violations;
  }
}

std::uint64_t Engine::in_system() const {
  std::uint64_t n = 0;
  for (std::uint32_t j = 0; j < onus_.size(); ++j)
    n += onus_[j].queued_packets + book_.buffer(j).size();
  return n;
}

void Engine::record_upstream(const PacketRecord& p, double completion) {
  ++delivered_;
  if (p.arrival_time < measure_start_) return;
  const double delay = completion - p.arrival_time;
  us_delay_[p.service_class].add(delay);
  if (delay > cfg_.classes[p.service_class].delay_threshold_s) ++us_misses_[p.service_class];
}

void Engine::record_downstream(const PacketRecord& p, double completion) {
  ++delivered_;
  if (p.arrival_time < measure_start_) return;
  ds_delay_.add(completion - p.arrival_time);
}

SimMetrics Engine::metrics() const {
  SimMetrics m;
  m.seed = cfg_.seed;
  m.offered_ds_bps = cfg_.traffic.downstream_load_bps;
  m.offered_us_bps = cfg_.traffic.upstream_load_bps;
  m.utilization_ds = cfg_.utilization_ds();
  m.utilization_us = cfg_.utilization_us();

  const std::int64_t measured = std::max<std::int64_t>(0, cycle_ - cfg_.warmup_cycles);
  m.energy_j = energy_j_;
  m.baseline_j = static_cast<double>(measured) * static_cast<double>(onus_.size()) * cfg_.fsm.cycle_duration *
                 cfg_.power.at(StateKind::awake, StateKind::awake);
  m.energy_saving = m.baseline_j > 0.0 ? energy_saving(m.energy_j, m.baseline_j) : 0.0;

  m.delay_ds_mean_s = ds_delay_.mean();
  m.delay_ds_p95_s = ds_delay_.quantile(0.95);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    m.delay_us_mean_s[c] = us_delay_[c].mean();
    m.delay_us_p95_s[c] = us_delay_[c].quantile(0.95);
    m.delay_us_max_s[c] = us_delay_[c].max();
    m.us_delivered[c] = us_delay_[c].count();
    m.us_threshold_misses[c] = us_misses_[c];
  }
  m.tx_sleep_episodes = sleep_episodes_;
  m.tx_sleep_mean_s = sleep_episodes_ == 0 ? 0.0
                                           : static_cast<double>(sleep_episode_cycles_) * cfg_.fsm.cycle_duration /
                                                 static_cast<double>(sleep_episodes_);
  if (sleep_episodes_ > 1) {
    const double n = static_cast<double>(sleep_episodes_);
    const double mean = static_cast<double>(sleep_episode_cycles_) / n;
    m.tx_sleep_sd_s = std::sqrt(std::max(0.0, (sleep_episode_sq_ - n * mean * mean) / (n - 1.0))) *
                      cfg_.fsm.cycle_duration;
  }
  m.early_wakes = early_wakes_;
  m.tx_sleep_budget_cycles = onus_.front().sleep_budget;

  std::uint64_t total = 0;
  for (auto c : occupancy_cycles_) total += c;
  for (std::size_t k = 0; k < 9; ++k)
    m.occupancy[k] = total == 0 ? 0.0 : static_cast<double>(occupancy_cycles_[k]) / static_cast<double>(total);

  m.pkts_generated = generated_;
  m.pkts_delivered = delivered_;
  m.pkts_residual = in_system();
  const double per_cycle_packets =
      static_cast<double>(generated_) / static_cast<double>(std::max<std::int64_t>(cycle_, 1));
  m.residual_growth = m.utilization_ds >= 1.0 || m.utilization_us >= 1.0 ||
                      static_cast<double>(m.pkts_residual) >
                          2.0 * static_cast<double>(backlog_mid_) + 10.0 * per_cycle_packets + 100.0;
  m.audits = audits_;
  return m;
}

SimMetrics run_simulation(const SimConfig& cfg) {
  Engine engine(cfg);
  engine.run();
  SimMetrics m = engine.metrics();
  if (m.residual_growth)
    spdlog::warn("offered load exceeds what the network drains: {} packets left in the system", m.pkts_residual);
  return m;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::ds_load:
      return "ds_load";
    case SweepAxis::us_load:
      return "us_load";
    case SweepAxis::rx_listen:
      return "rx_listen";
    case SweepAxis::rx_sleep:
      return "rx_sleep";
    case SweepAxis::tx_listen:
      return "tx_listen";
    case SweepAxis::delay_threshold:
      return "delay_threshold";
  }
  return "?";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::ds_load, SweepAxis::us_load, SweepAxis::rx_listen, SweepAxis::rx_sleep,
                 SweepAxis::tx_listen, SweepAxis::delay_threshold})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

namespace {

int as_cycles(double value, std::string_view axis) {
  if (!(value >= 1.0) || value != std::floor(value) || value > 1e6)
    throw std::invalid_argument(fmt::format("sweep value {} for {} must be a whole number of cycles >= 1", value, axis));
  return static_cast<int>(value);
}

}  // namespace

SimConfig apply_axis(const SimConfig& base, SweepAxis axis, double value) {
  SimConfig cfg = base;
  switch (axis) {
    case SweepAxis::ds_load:
      cfg.traffic.downstream_load_bps = value;
      break;
    case SweepAxis::us_load:
      cfg.traffic.upstream_load_bps = value;
      break;
    case SweepAxis::rx_listen:
      cfg.fsm.rx_listen_cycles = as_cycles(value, to_string(axis));
      break;
    case SweepAxis::rx_sleep:
      cfg.fsm.rx_sleep_cycles = as_cycles(value, to_string(axis));
      break;
    case SweepAxis::tx_listen:
      cfg.fsm.tx_listen_cycles = as_cycles(value, to_string(axis));
      break;
    case SweepAxis::delay_threshold:
      for (auto& c : cfg.classes) c.delay_threshold_s = value;
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepRow> sweep(const SimConfig& base, SweepAxis axis, const std::vector<double>& values, int parallel,
                            SweepSeeding seeding) {
  if (values.empty()) throw std::invalid_argument("sweep.values must not be empty");
  std::vector<SimConfig> points;
  points.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    points.push_back(apply_axis(base, axis, values[k]));
    if (seeding == SweepSeeding::independent) points.back().seed = derive_seed(base.seed, 0x5EEDu, k);
  }

  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size() && !failed; k = next++) {
      try {
        rows[k] = {values[k], run_simulation(points[k])};
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp<int>(parallel, 1, static_cast<int>(points.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace ponsim
