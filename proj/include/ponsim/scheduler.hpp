#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ponsim/sleep_fsm.hpp"
#include "ponsim/traffic.hpp"

namespace ponsim {

struct ReportMsg {
  std::uint32_t onu_id = 0;
  std::int64_t requested_bytes = 0;
  std::int64_t cycle_index = 0;
};

struct CycleGrant {
  std::uint32_t onu_id = 0;
  double start_time = 0.0;
  std::int64_t length_bytes = 0;
  std::int64_t cycle_index = 0;
};

/// Upstream time base of one scheduling cycle.
struct UpstreamTiming {
  double cycle_start = 0.0;
  double cycle_duration = 0.0;
  double line_rate_bps = 0.0;

  double byte_time() const { return 8.0 / line_rate_bps; }
};

/// Splits capacity proportionally to requests when they do not all fit, using largest
/// remainders so the result sums exactly to capacity. Requests that fit are returned unchanged.
std::vector<std::int64_t> proportional_split(std::span<const std::int64_t> requests, std::int64_t capacity);

/// Request-proportional grants laid back to back from the cycle start in ascending onu_id.
std::vector<CycleGrant> dba_allocate(std::span<const ReportMsg> reports, std::int64_t capacity_bytes,
                                     const UpstreamTiming& timing, std::int64_t cycle_index = 0);

/// OLT-side per-ONU bookkeeping.
class OltBook {
 public:
  OltBook(std::size_t num_onus, std::int64_t fba_bytes, double upstream_bps, double downstream_bps,
          double cycle_duration);

  std::size_t num_onus() const { return previous_start_.size(); }
  std::int64_t fba_bytes() const { return fba_bytes_; }
  double upstream_bps() const { return upstream_bps_; }
  double downstream_bps() const { return downstream_bps_; }
  double cycle_duration() const { return cycle_duration_; }

  /// Airtime of one fixed-allocation slot.
  double fba_slot_time() const { return 8.0 * static_cast<double>(fba_bytes_) / upstream_bps_; }
  /// Start of ONU j's fixed slot in the cycle beginning at cycle_start.
  double fixed_slot_start(std::uint32_t onu, double cycle_start) const {
    return cycle_start + onu * fba_slot_time();
  }

  double previous_start(std::uint32_t onu) const { return previous_start_.at(onu); }
  void set_previous_start(std::uint32_t onu, double t) { previous_start_.at(onu) = t; }

  std::deque<PacketRecord>& buffer(std::uint32_t onu) { return buffers_.at(onu); }
  const std::deque<PacketRecord>& buffer(std::uint32_t onu) const { return buffers_.at(onu); }
  std::int64_t buffered_bytes(std::uint32_t onu) const { return buffered_bytes_.at(onu); }

  void push_buffer(const PacketRecord& p);
  PacketRecord pop_buffer(std::uint32_t onu);

 private:
  std::vector<double> previous_start_;
  std::vector<std::deque<PacketRecord>> buffers_;
  std::vector<std::int64_t> buffered_bytes_;
  std::int64_t fba_bytes_;
  double upstream_bps_;
  double downstream_bps_;
  double cycle_duration_;
};

/// Grant for an ONU whose receiver is asleep and so cannot hear a GATE.
///
/// With the transmitter awake the ONU gets min(BW_r, BW_FBA) at T_ps + T_cycle and T_ps moves to
/// that start. With the transmitter asleep nothing is granted and T_ps still advances one cycle.
std::optional<CycleGrant> rx_sleep_allocate(std::uint32_t onu, std::int64_t requested_bytes, OltBook& book,
                                            bool tx_awake, double cycle_duration, std::int64_t cycle_index = 0);

/// Appends packets for one ONU to the OLT buffer and, unless the receiver sleeps, releases the
/// FIFO head of the buffer up to capacity_bytes (whole packets only).
std::vector<PacketRecord> buffer_or_deliver_downstream(std::span<const PacketRecord> packets, StateKind rx_kind,
                                                       OltBook& book, std::uint32_t onu,
                                                       std::int64_t capacity_bytes);

/// One report per ONU whose transmitter is not asleep, carrying its queued upstream bytes.
std::vector<ReportMsg> collect_reports(std::span<const TxState> tx_states, std::span<const std::int64_t> queued_bytes,
                                       std::int64_t cycle_index);

/// Lays out DBA grant lengths back to back in list order around already pinned grants.
/// A grant that meets a pinned interval is split, so one ONU may receive several pieces.
std::vector<CycleGrant> layout_around_pinned(std::span<const CycleGrant> dba, std::span<const CycleGrant> pinned,
                                             const UpstreamTiming& timing);

/// Empty string when grants are pairwise disjoint and inside the cycle; otherwise a reason.
std::string check_grant_feasibility(std::span<const CycleGrant> grants, const UpstreamTiming& timing);

}  // namespace ponsim
