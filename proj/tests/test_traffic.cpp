#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles/variance_time.hpp"
#include "ponsim/traffic.hpp"

using namespace ponsim;

TEST_CASE("default class table") {
  const auto t = default_class_table();
  CHECK(t[0].delay_threshold_s == doctest::Approx(0.1));
  CHECK(t[1].delay_threshold_s == doctest::Approx(1.0));
  CHECK(t[2].delay_threshold_s == doctest::Approx(50.0));
  CHECK(t[0].share_of_load + t[1].share_of_load + t[2].share_of_load == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_NOTHROW(validate_class_table(t));

  auto bad = t;
  bad[1].delay_threshold_s = 0.05;
  CHECK_THROWS_AS(validate_class_table(bad), std::invalid_argument);
  bad = t;
  bad[0].share_of_load = 0.3;
  CHECK_THROWS_AS(validate_class_table(bad), std::invalid_argument);
}

TEST_CASE("traffic config validation") {
  TrafficConfig c;
  CHECK_NOTHROW(c.validate());
  c.hurst = 1.2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.hurst = 0.8;
  c.upstream_load_bps = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.upstream_load_bps = 0.0;
  c.num_sources = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("poisson arrivals: degenerate inputs") {
  Rng rng(1);
  CHECK(gen_poisson_arrivals(0.0, 2e-3, rng).empty());
  CHECK_THROWS_AS(gen_poisson_arrivals(-1.0, 2e-3, rng), std::invalid_argument);
  CHECK_THROWS_AS(gen_poisson_arrivals(1.0, 0.0, rng), std::invalid_argument);
}

TEST_CASE("poisson arrivals: count law and offsets") {
  Rng rng(12345);
  constexpr int kCycles = 100000;
  constexpr int kBins = 7;  // counts 0..5, then >= 6
  std::array<double, kBins> observed{};
  double total = 0.0;
  bool sorted_in_range = true;
  for (int t = 0; t < kCycles; ++t) {
    const auto offs = gen_poisson_arrivals(500.0, 2e-3, rng);
    total += static_cast<double>(offs.size());
    observed[std::min<std::size_t>(offs.size(), kBins - 1)] += 1.0;
    sorted_in_range = sorted_in_range && std::is_sorted(offs.begin(), offs.end());
    for (double o : offs) sorted_in_range = sorted_in_range && o >= 0.0 && o < 2e-3;
  }
  CHECK(sorted_in_range);
  CHECK(total / kCycles == doctest::Approx(1.0).epsilon(0.02));
  CHECK(observed[0] / kCycles == doctest::Approx(std::exp(-1.0)).epsilon(0.01 / std::exp(-1.0)));

  // Chi-square against Poisson(1), computed here from the factorial series.
  std::array<double, kBins> expected{};
  double pk = std::exp(-1.0), acc = 0.0;
  for (int k = 0; k < kBins - 1; ++k) {
    expected[static_cast<std::size_t>(k)] = pk * kCycles;
    acc += pk;
    pk /= (k + 1);
  }
  expected[kBins - 1] = (1.0 - acc) * kCycles;
  double stat = 0.0;
  for (std::size_t k = 0; k < kBins; ++k) stat += std::pow(observed[k] - expected[k], 2) / expected[k];
  const boost::math::chi_squared dist(kBins - 1);
  const double p = boost::math::cdf(boost::math::complement(dist, stat));
  CHECK(p > 0.01);
}

TEST_CASE("class and size draws") {
  TrafficConfig c;
  Rng rng(7);
  double bytes[3] = {0, 0, 0};
  double vbr_be_sum = 0.0;
  std::uint64_t vbr_be_count = 0;
  for (int i = 0; i < 1000000; ++i) {
    const auto d = draw_class_and_size(c, rng);
    bytes[d.service_class] += d.size_bytes;
    if (d.service_class == 0) {
      REQUIRE(d.size_bytes == 70);
    } else {
      REQUIRE(d.size_bytes >= 64);
      REQUIRE(d.size_bytes <= 1518);
      vbr_be_sum += d.size_bytes;
      ++vbr_be_count;
    }
  }
  const double all = bytes[0] + bytes[1] + bytes[2];
  CHECK(std::abs(bytes[0] / all - 0.20) <= 0.01);
  CHECK(std::abs(bytes[1] / all - 0.40) <= 0.01);
  CHECK(std::abs(vbr_be_sum / vbr_be_count - 791.0) <= 3.0);
}

TEST_CASE("size moments and packet mix") {
  CHECK(class_mean_size(0) == 70.0);
  CHECK(class_mean_size(1) == doctest::Approx(791.0));
  CHECK(class_second_moment_size(0) == doctest::Approx(4900.0));
  // Discrete uniform on [64, 1518]: variance ((n^2 - 1) / 12) with n = 1455.
  CHECK(class_second_moment_size(2) == doctest::Approx(791.0 * 791.0 + (1455.0 * 1455.0 - 1.0) / 12.0));
  const auto p = class_packet_probabilities({0.2, 0.4, 0.4});
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
  CHECK(p[0] * 70.0 / (p[0] * 70.0 + (p[1] + p[2]) * 791.0) == doctest::Approx(0.2));
}

TEST_CASE("pareto shape from hurst") {
  CHECK(pareto_shape_for_hurst(0.8) == doctest::Approx(1.4));
  CHECK_THROWS_AS(pareto_shape_for_hurst(1.0), std::invalid_argument);
  CHECK_THROWS_AS(pareto_shape_for_hurst(0.5), std::invalid_argument);
}

TEST_CASE("zero load never emits") {
  for (auto model : {TrafficModel::poisson, TrafficModel::self_similar}) {
    TrafficConfig c;
    c.model = model;
    auto src = make_source(c, Direction::upstream, 3, 2e-3);
    std::vector<PacketRecord> out;
    for (int t = 0; t < 1000; ++t) src->generate(t, out);
    CHECK(out.empty());
  }
}

TEST_CASE("streams are reproducible and well formed") {
  for (auto model : {TrafficModel::poisson, TrafficModel::self_similar}) {
    TrafficConfig c;
    c.model = model;
    c.downstream_load_bps = 2e8;
    c.seed = 99;
    auto a = make_source(c, Direction::downstream, 5, 2e-3);
    auto b = make_source(c, Direction::downstream, 5, 2e-3);
    auto other = make_source(c, Direction::downstream, 6, 2e-3);
    std::vector<PacketRecord> pa, pb, po;
    for (int t = 0; t < 2000; ++t) {
      a->generate(t, pa);
      b->generate(t, pb);
      other->generate(t, po);
    }
    REQUIRE(pa.size() == pb.size());
    bool same = true;
    for (std::size_t i = 0; i < pa.size(); ++i)
      same = same && pa[i].arrival_time == pb[i].arrival_time && pa[i].size_bytes == pb[i].size_bytes &&
             pa[i].service_class == pb[i].service_class;
    CHECK(same);
    CHECK(pa.size() != po.size());
    bool valid = true;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      valid = valid && packet_size_valid(pa[i]) && pa[i].onu_id == 5 && pa[i].direction == Direction::downstream;
      if (i > 0) valid = valid && pa[i - 1].arrival_time <= pa[i].arrival_time;
    }
    CHECK(valid);
  }
}

TEST_CASE("packets land in their own cycle") {
  TrafficConfig c;
  c.upstream_load_bps = 1e8;
  auto src = make_source(c, Direction::upstream, 0, 2e-3);
  std::vector<PacketRecord> out;
  bool inside = true;
  for (int t = 0; t < 5000; ++t) {
    out.clear();
    src->generate(t, out);
    for (const auto& p : out) inside = inside && p.arrival_time >= t * 2e-3 && p.arrival_time < (t + 1) * 2e-3;
  }
  CHECK(inside);
}

TEST_CASE("merge of sorted runs matches a stable sort") {
  Rng rng(5);
  std::vector<PacketRecord> packets;
  std::vector<std::size_t> ends;
  for (int run = 0; run < 9; ++run) {
    auto offs = gen_poisson_arrivals(3000.0, 2e-3, rng);
    for (double o : offs) packets.push_back({Direction::upstream, 0, 0, 70, std::floor(o * 1e4) / 1e4, {}});
    ends.push_back(packets.size());
  }
  std::vector<std::uint32_t> order;
  merge_sorted_runs(packets, ends, order);
  std::vector<std::uint32_t> expect(packets.size());
  std::iota(expect.begin(), expect.end(), 0u);
  std::stable_sort(expect.begin(), expect.end(),
                   [&](auto a, auto b) { return packets[a].arrival_time < packets[b].arrival_time; });
  CHECK(order == expect);
}

TEST_CASE("self-similar source: long-run rate and variance-time slope") {
  // Single-series slope estimates scatter by about 0.1, so the band applies to the mean over seeds.
  constexpr int kCycles = 1000000;
  constexpr int kSeeds = 6;
  double slope_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    TrafficConfig c;
    c.upstream_load_bps = 50e6;
    c.seed = seed;
    auto src = make_source(c, Direction::upstream, 0, 2e-3);
    std::vector<double> bytes(kCycles);
    std::vector<PacketRecord> out;
    for (int t = 0; t < kCycles; ++t) {
      out.clear();
      src->generate(t, out);
      double b = 0.0;
      for (const auto& p : out) b += p.size_bytes;
      bytes[static_cast<std::size_t>(t)] = b;
    }
    const double rate = std::accumulate(bytes.begin(), bytes.end(), 0.0) * 8.0 / (kCycles * 2e-3);
    CHECK(rate >= 47.5e6);
    CHECK(rate <= 52.5e6);
    const double slope = oracle::variance_time_slope(bytes, 10, 3000, 15);
    MESSAGE("seed " << seed << " variance-time slope " << slope);
    // Short-range dependent traffic would give -1.
    CHECK(slope > -0.7);
    CHECK(slope < -0.1);
    slope_sum += slope;
  }
  const double mean = slope_sum / kSeeds;
  CHECK(mean >= -0.5);
  CHECK(mean <= -0.3);
}
