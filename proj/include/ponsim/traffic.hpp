#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ponsim/rng.hpp"

namespace ponsim {

inline constexpr int kNumClasses = 3;

enum class Direction : std::uint8_t { upstream, downstream };

/// Service classes in descending priority: 0 = CBR, 1 = VBR, 2 = BE.
struct ServiceClass {
  int index = 0;
  double delay_threshold_s = 0.0;
  double share_of_load = 0.0;
};

using ClassTable = std::array<ServiceClass, kNumClasses>;

/// 20% CBR by bytes, the rest split evenly; thresholds 100 ms / 1 s / 50 s.
ClassTable default_class_table();

/// Throws std::invalid_argument when shares do not sum to one or thresholds are not ordered.
void validate_class_table(const ClassTable& classes);

inline constexpr std::uint16_t kCbrPacketBytes = 70;
inline constexpr std::uint16_t kMinPacketBytes = 64;
inline constexpr std::uint16_t kMaxPacketBytes = 1518;

struct PacketRecord {
  Direction direction = Direction::upstream;
  std::uint32_t onu_id = 0;
  std::uint8_t service_class = 0;
  std::uint16_t size_bytes = 0;
  double arrival_time = 0.0;
  std::optional<double> departure_time;
};

/// True when size matches the class (70 B for CBR, 64..1518 B otherwise).
bool packet_size_valid(const PacketRecord& p);

enum class TrafficModel : std::uint8_t { poisson, self_similar };

struct TrafficConfig {
  TrafficModel model = TrafficModel::self_similar;
  double upstream_load_bps = 0.0;    // per ONU
  double downstream_load_bps = 0.0;  // per ONU
  double hurst = 0.8;
  int num_sources = 32;
  // ON/OFF source shape: packets leave back to back at peak_rate_bps while ON.
  double peak_rate_bps = 5.0e7;
  double mean_on_s = 1.0e-3;
  std::array<double, kNumClasses> byte_shares{0.2, 0.4, 0.4};
  std::uint64_t seed = 1;

  void validate() const;
};

/// Pareto shape of the ON/OFF periods for a target Hurst parameter.
double pareto_shape_for_hurst(double hurst);

/// Mean packet size of a class in bytes.
double class_mean_size(int service_class);
/// E[size^2] of a class in bytes^2.
double class_second_moment_size(int service_class);

/// Per-packet class probabilities that realize the byte shares.
std::array<double, kNumClasses> class_packet_probabilities(const std::array<double, kNumClasses>& byte_shares);

/// Mean packet size (bytes) of the mixed stream.
double mixed_mean_size(const std::array<double, kNumClasses>& byte_shares);

struct ClassAndSize {
  std::uint8_t service_class = 0;
  std::uint16_t size_bytes = 0;
};

ClassAndSize draw_class_and_size(const TrafficConfig& config, Rng& rng);

/// Sorted arrival offsets in [0, cycle_duration) of a Poisson stream.
std::vector<double> gen_poisson_arrivals(double rate_pps, double cycle_duration, Rng& rng);

/// Positions of packets held as consecutive runs, each sorted by arrival time, in global arrival
/// order. run_ends holds the end offset of every run; ties keep the earlier position first.
void merge_sorted_runs(std::span<const PacketRecord> packets, std::span<const std::size_t> run_ends,
                       std::vector<std::uint32_t>& order);

/// Per-(ONU, direction) packet stream generating one cycle at a time.
class TrafficSource {
 public:
  virtual ~TrafficSource() = default;
  /// Appends the packets arriving in [cycle_index*T, (cycle_index+1)*T), sorted by time.
  /// Calls must use consecutive cycle indices.
  virtual void generate(std::int64_t cycle_index, std::vector<PacketRecord>& out) = 0;
};

class PoissonSource final : public TrafficSource {
 public:
  PoissonSource(const TrafficConfig& config, double load_bps, Direction dir, std::uint32_t onu_id,
                double cycle_duration, Rng rng);
  void generate(std::int64_t cycle_index, std::vector<PacketRecord>& out) override;

  double packet_rate() const { return rate_pps_; }

 private:
  TrafficConfig config_;
  Direction dir_;
  std::uint32_t onu_id_;
  double cycle_duration_;
  double rate_pps_;
  Rng rng_;
};

/// Superposition of Pareto ON/OFF sources; shape 3 - 2H for both periods.
class SelfSimilarSource final : public TrafficSource {
 public:
  SelfSimilarSource(const TrafficConfig& config, double load_bps, Direction dir, std::uint32_t onu_id,
                    double cycle_duration, Rng rng);
  void generate(std::int64_t cycle_index, std::vector<PacketRecord>& out) override;

  double shape() const { return shape_; }
  double mean_off_s() const { return mean_off_; }

 private:
  struct OnOff {
    bool on = false;
    double period_end = 0.0;  // end of the current ON or OFF period
    double next_packet = 0.0;  // next emission time while ON
  };

  double draw_period(double mean);
  double draw_residual(double mean);

  TrafficConfig config_;
  Direction dir_;
  std::uint32_t onu_id_;
  double cycle_duration_;
  double shape_;
  double mean_on_;
  double mean_off_;
  bool active_;
  Rng rng_;
  std::vector<OnOff> sources_;
  std::vector<PacketRecord> scratch_;
  std::vector<std::size_t> run_ends_;
  std::vector<std::uint32_t> order_;
};

/// Builds the configured source type. Load 0 yields a source that never emits.
std::unique_ptr<TrafficSource> make_source(const TrafficConfig& config, Direction dir, std::uint32_t onu_id,
                                           double cycle_duration);

}  // namespace ponsim
