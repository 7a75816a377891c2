#include "ponsim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace ponsim {

namespace {
__extension__ using i128 = __int128;
}  // namespace

std::vector<std::int64_t> proportional_split(std::span<const std::int64_t> requests, std::int64_t capacity) {
  if (capacity < 0) throw std::invalid_argument("capacity must be >= 0");
  i128 total = 0;
  for (auto r : requests) {
    if (r < 0) throw std::invalid_argument("requests must be >= 0");
    total += r;
  }
  std::vector<std::int64_t> out(requests.begin(), requests.end());
  if (total <= capacity) return out;

  std::vector<std::int64_t> remainder(requests.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const i128 num = static_cast<i128>(capacity) * requests[i];
    out[i] = static_cast<std::int64_t>(num / total);
    remainder[i] = static_cast<std::int64_t>(num % total);
    assigned += out[i];
  }
  std::vector<std::size_t> order(requests.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < capacity && k < order.size(); ++k) {
    ++out[order[k]];
    ++assigned;
  }
  return out;
}

std::vector<CycleGrant> dba_allocate(std::span<const ReportMsg> reports, std::int64_t capacity_bytes,
                                     const UpstreamTiming& timing, std::int64_t cycle_index) {
  if (capacity_bytes <= 0) throw std::invalid_argument("upstream capacity per cycle must be positive");
  std::vector<ReportMsg> sorted(reports.begin(), reports.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ReportMsg& a, const ReportMsg& b) { return a.onu_id < b.onu_id; });
  std::vector<std::int64_t> requests;
  requests.reserve(sorted.size());
  for (const auto& r : sorted) requests.push_back(r.requested_bytes);
  const auto lengths = proportional_split(requests, capacity_bytes);

  std::vector<CycleGrant> grants;
  grants.reserve(sorted.size());
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    grants.push_back({sorted[i].onu_id, timing.cycle_start + static_cast<double>(offset) * timing.byte_time(),
                      lengths[i], cycle_index});
    offset += lengths[i];
  }
  return grants;
}

OltBook::OltBook(std::size_t num_onus, std::int64_t fba_bytes, double upstream_bps, double downstream_bps,
                 double cycle_duration)
    : previous_start_(num_onus, 0.0),
      buffers_(num_onus),
      buffered_bytes_(num_onus, 0),
      fba_bytes_(fba_bytes),
      upstream_bps_(upstream_bps),
      downstream_bps_(downstream_bps),
      cycle_duration_(cycle_duration) {
  if (fba_bytes < 0) throw std::invalid_argument("fba bytes must be >= 0");
  for (std::uint32_t j = 0; j < num_onus; ++j) previous_start_[j] = fixed_slot_start(j, -cycle_duration);
}

void OltBook::push_buffer(const PacketRecord& p) {
  buffers_.at(p.onu_id).push_back(p);
  buffered_bytes_[p.onu_id] += p.size_bytes;
}

PacketRecord OltBook::pop_buffer(std::uint32_t onu) {
  auto& q = buffers_.at(onu);
  PacketRecord p = q.front();
  q.pop_front();
  buffered_bytes_[onu] -= p.size_bytes;
  return p;
}

std::optional<CycleGrant> rx_sleep_allocate(std::uint32_t onu, std::int64_t requested_bytes, OltBook& book,
                                            bool tx_awake, double cycle_duration, std::int64_t cycle_index) {
  const double next = book.previous_start(onu) + cycle_duration;
  book.set_previous_start(onu, next);
  if (!tx_awake) return std::nullopt;
  return CycleGrant{onu, next, std::min(std::max<std::int64_t>(requested_bytes, 0), book.fba_bytes()), cycle_index};
}

std::vector<PacketRecord> buffer_or_deliver_downstream(std::span<const PacketRecord> packets, StateKind rx_kind,
                                                       OltBook& book, std::uint32_t onu,
                                                       std::int64_t capacity_bytes) {
  for (const auto& p : packets) {
    if (p.onu_id != onu) throw std::invalid_argument("downstream packet addressed to another ONU");
    book.push_buffer(p);
  }
  std::vector<PacketRecord> out;
  if (rx_kind == StateKind::sleep) return out;
  std::int64_t left = capacity_bytes;
  auto& q = book.buffer(onu);
  while (!q.empty() && q.front().size_bytes <= left) {
    left -= q.front().size_bytes;
    out.push_back(book.pop_buffer(onu));
  }
  return out;
}

std::vector<ReportMsg> collect_reports(std::span<const TxState> tx_states, std::span<const std::int64_t> queued_bytes,
                                       std::int64_t cycle_index) {
  if (tx_states.size() != queued_bytes.size()) throw std::invalid_argument("state/queue size mismatch");
  std::vector<ReportMsg> out;
  for (std::size_t j = 0; j < tx_states.size(); ++j) {
    if (tx_states[j].kind == StateKind::sleep) continue;
    out.push_back({static_cast<std::uint32_t>(j), queued_bytes[j], cycle_index});
  }
  return out;
}

std::vector<CycleGrant> layout_around_pinned(std::span<const CycleGrant> dba, std::span<const CycleGrant> pinned,
                                             const UpstreamTiming& timing) {
  const double bt = timing.byte_time();
  struct Busy {
    std::int64_t begin;
    std::int64_t end;
  };
  std::vector<Busy> busy;
  for (const auto& g : pinned) {
    if (g.length_bytes <= 0) continue;
    const auto begin = static_cast<std::int64_t>(std::llround((g.start_time - timing.cycle_start) / bt));
    busy.push_back({begin, begin + g.length_bytes});
  }
  std::sort(busy.begin(), busy.end(), [](const Busy& a, const Busy& b) { return a.begin < b.begin; });

  std::vector<CycleGrant> out;
  std::int64_t cursor = 0;
  std::size_t next_busy = 0;
  auto skip_busy = [&] {
    while (next_busy < busy.size() && busy[next_busy].end <= cursor) ++next_busy;
    while (next_busy < busy.size() && busy[next_busy].begin <= cursor) {
      cursor = std::max(cursor, busy[next_busy].end);
      ++next_busy;
    }
  };
  for (const auto& g : dba) {
    std::int64_t left = g.length_bytes;
    skip_busy();
    if (left == 0) {
      out.push_back({g.onu_id, timing.cycle_start + static_cast<double>(cursor) * bt, 0, g.cycle_index});
      continue;
    }
    while (left > 0) {
      skip_busy();
      const std::int64_t gap_end = next_busy < busy.size() ? busy[next_busy].begin : INT64_MAX;
      const std::int64_t piece = std::min(left, gap_end - cursor);
      out.push_back({g.onu_id, timing.cycle_start + static_cast<double>(cursor) * bt, piece, g.cycle_index});
      cursor += piece;
      left -= piece;
    }
  }
  return out;
}

std::string check_grant_feasibility(std::span<const CycleGrant> grants, const UpstreamTiming& timing) {
  const double eps = 1e-9;  // well below one byte time
  const double end_of_cycle = timing.cycle_start + timing.cycle_duration;
  std::vector<std::pair<double, double>> spans;
  for (const auto& g : grants) {
    if (g.length_bytes < 0) return fmt::format("onu {} has a negative grant", g.onu_id);
    const double end = g.start_time + static_cast<double>(g.length_bytes) * timing.byte_time();
    if (g.start_time < timing.cycle_start - eps || end > end_of_cycle + eps)
      return fmt::format("onu {} grant [{}, {}] leaves the cycle", g.onu_id, g.start_time, end);
    if (g.length_bytes > 0) spans.emplace_back(g.start_time, end);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second - eps)
      return fmt::format("grants overlap at t={}", spans[i].first);
  }
  return {};
}

}  // namespace ponsim
