#include "ponsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ponsim {

ClassTable default_class_table() {
  return {{{0, 0.1, 0.2}, {1, 1.0, 0.4}, {2, 50.0, 0.4}}};
}

void validate_class_table(const ClassTable& classes) {
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    const auto& c = classes[static_cast<std::size_t>(i)];
    if (c.index != i) throw std::invalid_argument("class index out of order at position " + std::to_string(i));
    if (!(c.delay_threshold_s > 0.0))
      throw std::invalid_argument("classes[" + std::to_string(i) + "].delay_threshold must be positive");
    if (c.share_of_load < 0.0 || c.share_of_load > 1.0)
      throw std::invalid_argument("classes[" + std::to_string(i) + "].share must lie in [0,1]");
    sum += c.share_of_load;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("class shares must sum to 1");
  if (classes[0].delay_threshold_s > classes[1].delay_threshold_s ||
      classes[1].delay_threshold_s > classes[2].delay_threshold_s)
    throw std::invalid_argument("delay thresholds must be non-decreasing with class index");
}

bool packet_size_valid(const PacketRecord& p) {
  if (p.service_class == 0) return p.size_bytes == kCbrPacketBytes;
  if (p.service_class >= kNumClasses) return false;
  return p.size_bytes >= kMinPacketBytes && p.size_bytes <= kMaxPacketBytes;
}

void TrafficConfig::validate() const {
  if (upstream_load_bps < 0.0) throw std::invalid_argument("traffic.upstream_load_bps must be >= 0");
  if (downstream_load_bps < 0.0) throw std::invalid_argument("traffic.downstream_load_bps must be >= 0");
  if (num_sources < 1) throw std::invalid_argument("traffic.num_sources must be >= 1");
  if (!(hurst > 0.5 && hurst < 1.0)) throw std::invalid_argument("traffic.hurst must lie in (0.5, 1)");
  if (model == TrafficModel::self_similar) {
    if (!(peak_rate_bps > 0.0)) throw std::invalid_argument("traffic.peak_rate_bps must be positive");
    if (!(mean_on_s > 0.0)) throw std::invalid_argument("traffic.mean_on_s must be positive");
    const double per_source = std::max(upstream_load_bps, downstream_load_bps) / num_sources;
    if (per_source >= peak_rate_bps)
      throw std::invalid_argument("traffic.peak_rate_bps must exceed the per-source mean load");
  }
  double sum = 0.0;
  for (double s : byte_shares) {
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("traffic.byte_shares entries must lie in [0,1]");
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("traffic.byte_shares must sum to 1");
}

double pareto_shape_for_hurst(double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0)) throw std::invalid_argument("hurst must lie in (0.5, 1)");
  return 3.0 - 2.0 * hurst;
}

double class_mean_size(int service_class) {
  if (service_class == 0) return kCbrPacketBytes;
  return 0.5 * (kMinPacketBytes + kMaxPacketBytes);
}

double class_second_moment_size(int service_class) {
  if (service_class == 0) return double(kCbrPacketBytes) * kCbrPacketBytes;
  const double n = kMaxPacketBytes - kMinPacketBytes + 1;
  const double mean = class_mean_size(service_class);
  return (n * n - 1.0) / 12.0 + mean * mean;
}

std::array<double, kNumClasses> class_packet_probabilities(const std::array<double, kNumClasses>& byte_shares) {
  std::array<double, kNumClasses> p{};
  double total = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    p[static_cast<std::size_t>(i)] = byte_shares[static_cast<std::size_t>(i)] / class_mean_size(i);
    total += p[static_cast<std::size_t>(i)];
  }
  for (double& x : p) x /= total;
  return p;
}

double mixed_mean_size(const std::array<double, kNumClasses>& byte_shares) {
  const auto p = class_packet_probabilities(byte_shares);
  double m = 0.0;
  for (int i = 0; i < kNumClasses; ++i) m += p[static_cast<std::size_t>(i)] * class_mean_size(i);
  return m;
}

ClassAndSize draw_class_and_size(const TrafficConfig& config, Rng& rng) {
  const auto p = class_packet_probabilities(config.byte_shares);
  const double u = uniform01(rng);
  std::uint8_t cls = 2;
  if (u < p[0]) {
    cls = 0;
  } else if (u < p[0] + p[1]) {
    cls = 1;
  }
  if (cls == 0) return {0, kCbrPacketBytes};
  std::uniform_int_distribution<int> size(kMinPacketBytes, kMaxPacketBytes);
  return {cls, static_cast<std::uint16_t>(size(rng))};
}

std::vector<double> gen_poisson_arrivals(double rate_pps, double cycle_duration, Rng& rng) {
  if (rate_pps < 0.0) throw std::invalid_argument("poisson rate must be >= 0");
  if (!(cycle_duration > 0.0)) throw std::invalid_argument("cycle duration must be positive");
  std::vector<double> offsets;
  if (rate_pps == 0.0) return offsets;
  std::poisson_distribution<long> count(rate_pps * cycle_duration);
  const long n = count(rng);
  offsets.reserve(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) offsets.push_back(uniform01(rng) * cycle_duration);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

PoissonSource::PoissonSource(const TrafficConfig& config, double load_bps, Direction dir, std::uint32_t onu_id,
                             double cycle_duration, Rng rng)
    : config_(config),
      dir_(dir),
      onu_id_(onu_id),
      cycle_duration_(cycle_duration),
      rate_pps_(load_bps / (8.0 * mixed_mean_size(config.byte_shares))),
      rng_(rng) {}

void PoissonSource::generate(std::int64_t cycle_index, std::vector<PacketRecord>& out) {
  const double t0 = static_cast<double>(cycle_index) * cycle_duration_;
  for (double off : gen_poisson_arrivals(rate_pps_, cycle_duration_, rng_)) {
    const auto cs = draw_class_and_size(config_, rng_);
    out.push_back(PacketRecord{dir_, onu_id_, cs.service_class, cs.size_bytes, t0 + off, std::nullopt});
  }
}

SelfSimilarSource::SelfSimilarSource(const TrafficConfig& config, double load_bps, Direction dir,
                                     std::uint32_t onu_id, double cycle_duration, Rng rng)
    : config_(config),
      dir_(dir),
      onu_id_(onu_id),
      cycle_duration_(cycle_duration),
      shape_(pareto_shape_for_hurst(config.hurst)),
      mean_on_(config.mean_on_s),
      mean_off_(0.0),
      active_(load_bps > 0.0),
      rng_(rng) {
  if (!active_) return;
  const double per_source = load_bps / config.num_sources;
  const double duty = per_source / config.peak_rate_bps;
  if (!(duty < 1.0)) throw std::invalid_argument("per-source load must be below the peak rate");
  // The last packet of an ON period finishes after the period ends; the OFF period starts only
  // then, so the mean overshoot E[tau^2] / (2 E[tau]) counts as ON time.
  const auto probs = class_packet_probabilities(config.byte_shares);
  double size_mean = 0.0;
  double size_sq = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    size_mean += probs[static_cast<std::size_t>(c)] * class_mean_size(c);
    size_sq += probs[static_cast<std::size_t>(c)] * class_second_moment_size(c);
  }
  const double overshoot = 8.0 * size_sq / (2.0 * size_mean * config.peak_rate_bps);
  mean_off_ = (mean_on_ + overshoot) * (1.0 - duty) / duty;
  // Start every source in its stationary regime so no warm-up transient is needed.
  sources_.resize(static_cast<std::size_t>(config.num_sources));
  for (auto& s : sources_) {
    s.on = uniform01(rng_) < duty;
    s.period_end = draw_residual(s.on ? mean_on_ : mean_off_);
    s.next_packet = 0.0;
  }
}

double SelfSimilarSource::draw_period(double mean) {
  const double xm = mean * (shape_ - 1.0) / shape_;
  const double u = 1.0 - uniform01(rng_);  // (0, 1]
  return xm / std::pow(u, 1.0 / shape_);
}

// Forward-recurrence time of a Pareto renewal process.
double SelfSimilarSource::draw_residual(double mean) {
  const double xm = mean * (shape_ - 1.0) / shape_;
  const double u = uniform01(rng_);
  if (u < (shape_ - 1.0) / shape_) return u * mean;
  return xm * std::pow(shape_ * (1.0 - u), -1.0 / (shape_ - 1.0));
}

void merge_sorted_runs(std::span<const PacketRecord> packets, std::span<const std::size_t> run_ends,
                       std::vector<std::uint32_t>& order) {
  order.clear();
  order.reserve(packets.size());
  using Head = std::pair<double, std::uint32_t>;  // (arrival, position)
  std::vector<Head> heap;
  std::vector<std::size_t> run_of(packets.size());
  std::size_t begin = 0;
  for (std::size_t r = 0; r < run_ends.size(); ++r) {
    for (std::size_t k = begin; k < run_ends[r]; ++k) run_of[k] = r;
    if (run_ends[r] > begin) heap.emplace_back(packets[begin].arrival_time, static_cast<std::uint32_t>(begin));
    begin = run_ends[r];
  }
  const auto later = [](const Head& a, const Head& b) { return a > b; };
  std::make_heap(heap.begin(), heap.end(), later);
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), later);
    const std::uint32_t k = heap.back().second;
    heap.pop_back();
    order.push_back(k);
    if (k + 1 < run_ends[run_of[k]]) {
      heap.emplace_back(packets[k + 1].arrival_time, k + 1);
      std::push_heap(heap.begin(), heap.end(), later);
    }
  }
}

void SelfSimilarSource::generate(std::int64_t cycle_index, std::vector<PacketRecord>& out) {
  if (!active_) return;
  const double t1 = static_cast<double>(cycle_index + 1) * cycle_duration_;
  scratch_.clear();
  run_ends_.clear();
  for (auto& s : sources_) {
    for (;;) {
      if (s.on) {
        while (s.next_packet < s.period_end && s.next_packet < t1) {
          const auto cs = draw_class_and_size(config_, rng_);
          scratch_.push_back(PacketRecord{dir_, onu_id_, cs.service_class, cs.size_bytes, s.next_packet, std::nullopt});
          s.next_packet += 8.0 * cs.size_bytes / config_.peak_rate_bps;
        }
        if (s.next_packet < t1) {
          s.on = false;
          s.period_end = s.next_packet + draw_period(mean_off_);
          continue;
        }
        break;
      }
      if (s.period_end < t1) {
        s.on = true;
        s.next_packet = std::max(s.next_packet, s.period_end);
        s.period_end += draw_period(mean_on_);
        continue;
      }
      break;
    }
    run_ends_.push_back(scratch_.size());
  }
  merge_sorted_runs(scratch_, run_ends_, order_);
  for (std::uint32_t k : order_) out.push_back(scratch_[k]);
}

namespace {
class SilentSource final : public TrafficSource {
 public:
  void generate(std::int64_t, std::vector<PacketRecord>&) override {}
};
}  // namespace

std::unique_ptr<TrafficSource> make_source(const TrafficConfig& config, Direction dir, std::uint32_t onu_id,
                                           double cycle_duration) {
  const double load = dir == Direction::upstream ? config.upstream_load_bps : config.downstream_load_bps;
  if (load <= 0.0) return std::make_unique<SilentSource>();
  Rng rng = make_stream(config.seed, onu_id, dir == Direction::upstream ? 0 : 1);
  if (config.model == TrafficModel::poisson)
    return std::make_unique<PoissonSource>(config, load, dir, onu_id, cycle_duration, rng);
  return std::make_unique<SelfSimilarSource>(config, load, dir, onu_id, cycle_duration, rng);
}

}  // namespace ponsim
