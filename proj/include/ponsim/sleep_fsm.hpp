#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ponsim {

enum class StateKind : std::uint8_t { awake = 0, listen = 1, sleep = 2 };

std::string_view to_string(StateKind kind);

/// Receiver automaton state. counter is the 1-based cycle index inside Listen/Sleep, 0 when Awake.
struct RxState {
  StateKind kind = StateKind::awake;
  int counter = 0;

  friend bool operator==(const RxState&, const RxState&) = default;
};

/// Transmitter automaton state. sleep_budget_cycles is fixed on sleep entry.
struct TxState {
  StateKind kind = StateKind::awake;
  int counter = 0;
  int sleep_budget_cycles = 0;

  friend bool operator==(const TxState&, const TxState&) = default;
};

struct FsmConfig {
  int rx_listen_cycles = 2;
  int rx_sleep_cycles = 2;
  int tx_listen_cycles = 2;
  double cycle_duration = 2.0e-3;
  double wake_overhead = 0.0;

  void validate() const;
};

/// Raised when a state carries an out-of-range counter.
class FsmInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

void check_invariants(const RxState& s, const FsmConfig& cfg);
void check_invariants(const TxState& s, const FsmConfig& cfg);

/// One cycle-boundary step of the receiver.
///
/// Awake stays awake while downstream data keeps arriving and drops to Listen(1) after an empty
/// cycle. Listen counts empty cycles up to rx_listen_cycles, then the receiver sleeps for exactly
/// rx_sleep_cycles cycles. At the end of the last sleep cycle it wakes only if the OLT holds
/// traffic for it; otherwise it goes straight back to Sleep(1).
RxState rx_step(RxState state, bool downstream_allocated_this_cycle, bool olt_has_buffered_traffic_at_wake,
                const FsmConfig& cfg);

/// One cycle-boundary step of the transmitter.
///
/// sleep_budget is the quantized transmitter sleep length used when Listen expires; a budget of 0
/// disables sleeping, so the transmitter stays in its last listening cycle.
TxState tx_step(TxState state, bool user_traffic_arrived, bool queue_empty_after_service, int sleep_budget,
                const FsmConfig& cfg);

/// Deadline-driven wake-up of a sleeping transmitter at the start of a cycle.
TxState tx_wake_early(TxState state);

/// Watts for each joint (Rx kind, Tx kind).
class PowerProfile {
 public:
  PowerProfile() = default;
  explicit PowerProfile(const std::array<double, 9>& watts) : watts_(watts) {}

  /// Six base levels plus interpolated RL/TL, RL/TS and RS/TL.
  static PowerProfile standard();

  double at(StateKind rx, StateKind tx) const { return watts_[index(rx, tx)]; }
  void set(StateKind rx, StateKind tx, double watts) { watts_[index(rx, tx)] = watts; }
  const std::array<double, 9>& values() const { return watts_; }

  /// Description of the first violated ordering constraint, if any.
  std::optional<std::string> ladder_violation() const;

  static constexpr std::size_t index(StateKind rx, StateKind tx) {
    return static_cast<std::size_t>(rx) * 3 + static_cast<std::size_t>(tx);
  }
  /// Short label such as "ra_ta" for a joint index.
  static std::string label(std::size_t joint_index);

 private:
  std::array<double, 9> watts_{};
};

double power_of(StateKind rx, StateKind tx, const PowerProfile& profile);

/// What the OLT sees from one ONU in one cycle.
struct OltObservation {
  bool allocated_downstream = false;
  bool buffered_downstream = false;  // traffic held for the ONU at the end of the cycle
  bool report_received = false;
  std::int64_t requested_bytes = 0;
  int sleep_budget = 0;
};

struct MirrorState {
  RxState rx;
  TxState tx;

  friend bool operator==(const MirrorState&, const MirrorState&) = default;
};

/// OLT-side inference of one ONU's automata from observable events only.
MirrorState olt_mirror_step(const OltObservation& observed, MirrorState mirror, const FsmConfig& cfg);

/// Vector form over all ONUs.
void olt_mirror_step(std::span<const OltObservation> observed, std::span<MirrorState> mirror,
                     const FsmConfig& cfg);

}  // namespace ponsim
