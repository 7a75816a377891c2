#include <doctest.h>

#include <numeric>
#include <random>

#include "ponsim/scheduler.hpp"

using namespace ponsim;

namespace {

UpstreamTiming timing(double start = 0.0) { return {start, 2e-3, 2.5e9}; }

std::vector<ReportMsg> reports(std::initializer_list<std::int64_t> bytes) {
  std::vector<ReportMsg> out;
  std::uint32_t id = 0;
  for (auto b : bytes) out.push_back({id++, b, 0});
  return out;
}

PacketRecord ds_packet(std::uint32_t onu, double t, std::uint16_t size = 100) {
  return {Direction::downstream, onu, 1, size, t, {}};
}

}  // namespace

TEST_CASE("dba: requests that fit are granted in full") {
  const auto g = dba_allocate(reports({1000, 2000}), 10000, timing());
  REQUIRE(g.size() == 2);
  CHECK(g[0].length_bytes == 1000);
  CHECK(g[1].length_bytes == 2000);
  CHECK(g[0].start_time == 0.0);
  CHECK(g[1].start_time == doctest::Approx(1000 * 8 / 2.5e9));
}

TEST_CASE("dba: proportional split when oversubscribed") {
  auto g = dba_allocate(reports({6000, 6000}), 6000, timing());
  CHECK(g[0].length_bytes == 3000);
  CHECK(g[1].length_bytes == 3000);
  g = dba_allocate(reports({5000, 2500}), 6000, timing());
  CHECK(g[0].length_bytes == 4000);
  CHECK(g[1].length_bytes == 2000);
  CHECK_THROWS_AS(dba_allocate(reports({1}), 0, timing()), std::invalid_argument);
}

TEST_CASE("dba: grants follow onu order") {
  std::vector<ReportMsg> r{{4, 10, 0}, {1, 20, 0}, {2, 30, 0}};
  const auto g = dba_allocate(r, 1000, timing());
  CHECK(g[0].onu_id == 1);
  CHECK(g[1].onu_id == 2);
  CHECK(g[2].onu_id == 4);
}

TEST_CASE("largest remainder split sums to capacity") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> req(0, 100000);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::int64_t> r(1 + trial % 33);
    for (auto& x : r) x = req(rng);
    const std::int64_t cap = 1 + req(rng);
    const auto s = proportional_split(r, cap);
    const std::int64_t total = std::accumulate(r.begin(), r.end(), std::int64_t{0});
    const std::int64_t granted = std::accumulate(s.begin(), s.end(), std::int64_t{0});
    if (total <= cap) {
      CHECK(s == r);
    } else {
      CHECK(granted == cap);
      for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(s[i] <= r[i]);
        const double exact = static_cast<double>(cap) * r[i] / total;
        CHECK(std::abs(s[i] - exact) < 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("grant feasibility on random dba cycles") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> req(0, 60000);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ReportMsg> r;
    for (std::uint32_t j = 0; j < 32; ++j) r.push_back({j, req(rng), 0});
    const auto t = timing(trial * 2e-3);
    const auto g = dba_allocate(r, 625000, t);
    CHECK(check_grant_feasibility(g, t).empty());
  }
}

TEST_CASE("feasibility detects overlap and overrun") {
  const auto t = timing();
  std::vector<CycleGrant> g{{0, 0.0, 1000, 0}, {1, 1e-6, 1000, 0}};
  CHECK_FALSE(check_grant_feasibility(g, t).empty());
  g = {{0, 1.99e-3, 100000, 0}};
  CHECK_FALSE(check_grant_feasibility(g, t).empty());
}

TEST_CASE("sleeping receiver allocation") {
  OltBook book(4, 4000, 2.5e9, 10e9, 2e-3);
  book.set_previous_start(1, 0.010);
  auto g = rx_sleep_allocate(1, 5000, book, true, 2e-3);
  REQUIRE(g.has_value());
  CHECK(g->length_bytes == 4000);
  CHECK(g->start_time == doctest::Approx(0.012));
  CHECK(book.previous_start(1) == doctest::Approx(0.012));

  g = rx_sleep_allocate(1, 0, book, true, 2e-3);
  REQUIRE(g.has_value());
  CHECK(g->length_bytes == 0);
  CHECK(book.previous_start(1) == doctest::Approx(0.014));

  book.set_previous_start(2, 0.010);
  for (int i = 0; i < 3; ++i) CHECK_FALSE(rx_sleep_allocate(2, 700, book, false, 2e-3).has_value());
  CHECK(book.previous_start(2) == doctest::Approx(0.016));
}

TEST_CASE("fixed slots tile the cycle") {
  OltBook book(32, 625000 / 32, 2.5e9, 10e9, 2e-3);
  CHECK(book.fixed_slot_start(0, 0.004) == 0.004);
  CHECK(book.fixed_slot_start(31, 0.0) + book.fba_slot_time() <= 2e-3 + 1e-12);
  CHECK(book.previous_start(3) == doctest::Approx(-2e-3 + 3 * book.fba_slot_time()));
}

TEST_CASE("downstream buffering") {
  OltBook book(2, 1000, 2.5e9, 10e9, 2e-3);
  std::vector<PacketRecord> three{ds_packet(0, 0.1), ds_packet(0, 0.2), ds_packet(0, 0.3)};
  auto out = buffer_or_deliver_downstream(three, StateKind::sleep, book, 0, 1 << 20);
  CHECK(out.empty());
  CHECK(book.buffer(0).size() == 3);
  CHECK(book.buffered_bytes(0) == 300);

  OltBook fresh(2, 1000, 2.5e9, 10e9, 2e-3);
  std::vector<PacketRecord> two{ds_packet(1, 0.1), ds_packet(1, 0.2)};
  out = buffer_or_deliver_downstream(two, StateKind::awake, fresh, 1, 1 << 20);
  CHECK(out.size() == 2);
  CHECK(fresh.buffer(1).empty());

  // Five held while asleep, one new on wake: the held ones leave first.
  OltBook woke(1, 1000, 2.5e9, 10e9, 2e-3);
  std::vector<PacketRecord> held;
  for (int i = 0; i < 5; ++i) held.push_back(ds_packet(0, 0.01 * i));
  buffer_or_deliver_downstream(held, StateKind::sleep, woke, 0, 1 << 20);
  std::vector<PacketRecord> fresh_one{ds_packet(0, 0.5)};
  out = buffer_or_deliver_downstream(fresh_one, StateKind::awake, woke, 0, 1 << 20);
  REQUIRE(out.size() == 6);
  for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].arrival_time < out[i].arrival_time);
  CHECK(out.back().arrival_time == 0.5);

  // Capacity leaves the overflow buffered.
  OltBook capped(1, 1000, 2.5e9, 10e9, 2e-3);
  out = buffer_or_deliver_downstream(held, StateKind::listen, capped, 0, 250);
  CHECK(out.size() == 2);
  CHECK(capped.buffer(0).size() == 3);

  CHECK_THROWS_AS(buffer_or_deliver_downstream(two, StateKind::awake, capped, 0, 1), std::invalid_argument);
}

TEST_CASE("reports") {
  std::vector<TxState> tx{{StateKind::awake, 0, 0}, {StateKind::sleep, 1, 4}, {StateKind::listen, 1, 0}};
  std::vector<std::int64_t> q{210, 500, 0};
  const auto r = collect_reports(tx, q, 9);
  REQUIRE(r.size() == 2);
  CHECK(r[0].onu_id == 0);
  CHECK(r[0].requested_bytes == 210);
  CHECK(r[1].onu_id == 2);
  CHECK(r[1].requested_bytes == 0);
  CHECK(r[1].cycle_index == 9);
}

TEST_CASE("dynamic grants flow around pinned slots") {
  const auto t = timing();
  const double bt = t.byte_time();
  std::vector<CycleGrant> pinned{{5, 100 * bt, 50, 0}};
  std::vector<CycleGrant> dba{{0, 0.0, 80, 0}, {1, 0.0, 100, 0}};
  const auto out = layout_around_pinned(dba, pinned, t);
  REQUIRE(out.size() == 3);
  CHECK(out[0].onu_id == 0);
  CHECK(out[0].length_bytes == 80);
  CHECK(out[1].onu_id == 1);
  CHECK(out[1].length_bytes == 20);
  CHECK(out[2].onu_id == 1);
  CHECK(out[2].length_bytes == 80);
  CHECK(out[2].start_time == doctest::Approx(150 * bt));
  std::vector<CycleGrant> all = out;
  all.insert(all.end(), pinned.begin(), pinned.end());
  CHECK(check_grant_feasibility(all, t).empty());
}
