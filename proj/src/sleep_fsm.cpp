#include "ponsim/sleep_fsm.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace ponsim {

std::string_view to_string(StateKind kind) {
  switch (kind) {
    case StateKind::awake:
      return "awake";
    case StateKind::listen:
      return "listen";
    case StateKind::sleep:
      return "sleep";
  }
  return "?";
}

void FsmConfig::validate() const {
  if (rx_listen_cycles < 1) throw std::invalid_argument("fsm.rx_listen_cycles must be >= 1");
  if (rx_sleep_cycles < 1) throw std::invalid_argument("fsm.rx_sleep_cycles must be >= 1");
  if (tx_listen_cycles < 1) throw std::invalid_argument("fsm.tx_listen_cycles must be >= 1");
  if (!(cycle_duration > 0.0)) throw std::invalid_argument("fsm.cycle_duration must be positive");
  if (wake_overhead < 0.0 || wake_overhead >= cycle_duration)
    throw std::invalid_argument("fsm.wake_overhead must lie in [0, cycle_duration)");
}

void check_invariants(const RxState& s, const FsmConfig& cfg) {
  switch (s.kind) {
    case StateKind::awake:
      return;
    case StateKind::listen:
      if (s.counter < 1 || s.counter > cfg.rx_listen_cycles)
        throw FsmInvariantError(fmt::format("rx listen counter {} out of [1,{}]", s.counter, cfg.rx_listen_cycles));
      return;
    case StateKind::sleep:
      if (s.counter < 1 || s.counter > cfg.rx_sleep_cycles)
        throw FsmInvariantError(fmt::format("rx sleep counter {} out of [1,{}]", s.counter, cfg.rx_sleep_cycles));
      return;
  }
}

void check_invariants(const TxState& s, const FsmConfig& cfg) {
  switch (s.kind) {
    case StateKind::awake:
      return;
    case StateKind::listen:
      if (s.counter < 1 || s.counter > cfg.tx_listen_cycles)
        throw FsmInvariantError(fmt::format("tx listen counter {} out of [1,{}]", s.counter, cfg.tx_listen_cycles));
      return;
    case StateKind::sleep:
      if (s.sleep_budget_cycles < 1 || s.counter < 1 || s.counter > s.sleep_budget_cycles)
        throw FsmInvariantError(
            fmt::format("tx sleep counter {} out of [1,{}]", s.counter, s.sleep_budget_cycles));
      return;
  }
}

RxState rx_step(RxState state, bool allocated, bool buffered_at_wake, const FsmConfig& cfg) {
  check_invariants(state, cfg);
  switch (state.kind) {
    case StateKind::awake:
      return allocated ? RxState{StateKind::awake, 0} : RxState{StateKind::listen, 1};
    case StateKind::listen:
      if (allocated) return {StateKind::awake, 0};
      if (state.counter < cfg.rx_listen_cycles) return {StateKind::listen, state.counter + 1};
      return {StateKind::sleep, 1};
    case StateKind::sleep:
      if (state.counter < cfg.rx_sleep_cycles) return {StateKind::sleep, state.counter + 1};
      return buffered_at_wake ? RxState{StateKind::awake, 0} : RxState{StateKind::sleep, 1};
  }
  throw FsmInvariantError("unknown rx state kind");
}

TxState tx_step(TxState state, bool arrived, bool queue_empty_after_service, int sleep_budget,
                const FsmConfig& cfg) {
  check_invariants(state, cfg);
  switch (state.kind) {
    case StateKind::awake:
      if (queue_empty_after_service && !arrived) return {StateKind::listen, 1, 0};
      return {StateKind::awake, 0, 0};
    case StateKind::listen:
      // An arrival in the last listening cycle wins over listen expiry.
      if (arrived) return {StateKind::awake, 0, 0};
      if (state.counter < cfg.tx_listen_cycles) return {StateKind::listen, state.counter + 1, 0};
      if (sleep_budget < 1) return state;
      return {StateKind::sleep, 1, sleep_budget};
    case StateKind::sleep:
      if (state.counter < state.sleep_budget_cycles)
        return {StateKind::sleep, state.counter + 1, state.sleep_budget_cycles};
      return {StateKind::awake, 0, 0};
  }
  throw FsmInvariantError("unknown tx state kind");
}

TxState tx_wake_early(TxState state) {
  if (state.kind != StateKind::sleep) return state;
  return {StateKind::awake, 0, 0};
}

PowerProfile PowerProfile::standard() {
  PowerProfile p;
  using K = StateKind;
  p.set(K::awake, K::awake, 3.85);
  p.set(K::listen, K::awake, 2.8);
  p.set(K::sleep, K::awake, 2.5);
  p.set(K::awake, K::listen, 1.9);
  p.set(K::awake, K::sleep, 1.7);
  p.set(K::listen, K::listen, 1.55);
  p.set(K::listen, K::sleep, 1.0);
  p.set(K::sleep, K::listen, 0.95);
  p.set(K::sleep, K::sleep, 0.75);
  return p;
}

std::string PowerProfile::label(std::size_t joint_index) {
  static constexpr const char* rx[] = {"ra", "rl", "rs"};
  static constexpr const char* tx[] = {"ta", "tl", "ts"};
  return fmt::format("{}_{}", rx[joint_index / 3], tx[joint_index % 3]);
}

std::optional<std::string> PowerProfile::ladder_violation() const {
  for (std::size_t i = 0; i < 9; ++i) {
    if (!(watts_[i] > 0.0)) return fmt::format("power.{} must be positive", label(i));
  }
  const std::size_t top = index(StateKind::awake, StateKind::awake);
  const std::size_t bottom = index(StateKind::sleep, StateKind::sleep);
  for (std::size_t i = 0; i < 9; ++i) {
    if (i != top && !(watts_[i] < watts_[top]))
      return fmt::format("power.{} must be below power.{}", label(i), label(top));
    if (i != bottom && !(watts_[i] > watts_[bottom]))
      return fmt::format("power.{} must be above power.{}", label(i), label(bottom));
  }
  const StateKind kinds[] = {StateKind::awake, StateKind::listen, StateKind::sleep};
  for (StateKind fixed : kinds) {
    for (int k = 0; k < 2; ++k) {
      const StateKind hi = kinds[k];
      const StateKind lo = kinds[k + 1];
      if (!(at(fixed, lo) < at(fixed, hi)))
        return fmt::format("power.{} must be below power.{}", label(index(fixed, lo)), label(index(fixed, hi)));
      if (!(at(lo, fixed) < at(hi, fixed)))
        return fmt::format("power.{} must be below power.{}", label(index(lo, fixed)), label(index(hi, fixed)));
    }
  }
  return std::nullopt;
}

double power_of(StateKind rx, StateKind tx, const PowerProfile& profile) { return profile.at(rx, tx); }

MirrorState olt_mirror_step(const OltObservation& observed, MirrorState mirror, const FsmConfig& cfg) {
  mirror.rx = rx_step(mirror.rx, observed.allocated_downstream, observed.buffered_downstream, cfg);
  TxState tx = mirror.tx;
  // A report from a transmitter believed asleep means it woke on a deadline.
  if (tx.kind == StateKind::sleep && observed.report_received) tx = tx_wake_early(tx);
  const bool nonzero = observed.report_received && observed.requested_bytes > 0;
  if (tx.kind == StateKind::sleep) {
    mirror.tx = tx_step(tx, false, true, observed.sleep_budget, cfg);
  } else {
    mirror.tx = tx_step(tx, nonzero, !nonzero, observed.sleep_budget, cfg);
  }
  return mirror;
}

void olt_mirror_step(std::span<const OltObservation> observed, std::span<MirrorState> mirror, const FsmConfig& cfg) {
  if (observed.size() != mirror.size()) throw std::invalid_argument("observation/mirror size mismatch");
  for (std::size_t j = 0; j < observed.size(); ++j) mirror[j] = olt_mirror_step(observed[j], mirror[j], cfg);
}

}  // namespace ponsim
