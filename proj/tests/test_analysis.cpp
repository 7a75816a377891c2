#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/priority_des.hpp"
#include "ponsim/analysis.hpp"

using namespace ponsim;

TEST_CASE("cycle pmf values") {
  CHECK(cycle_pmf(0, 0.0, 2e-3) == 1.0);
  CHECK(cycle_pmf(3, 0.0, 2e-3) == 0.0);
  CHECK(cycle_pmf(0, 500.0, 2e-3) == doctest::Approx(0.36787944117144233).epsilon(1e-14));
  CHECK(cycle_pmf(2, 500.0, 2e-3) == doctest::Approx(0.36787944117144233 / 2).epsilon(1e-14));
  CHECK_THROWS_AS(cycle_pmf(-1, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cycle_pmf(1, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cycle_pmf(1, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("cycle pmf normalizes") {
  double s = 0.0;
  for (int a = 0; a <= 200; ++a) s += cycle_pmf(a, 2500.0, 2e-3);
  CHECK(std::abs(s - 1.0) <= 1e-12);
  for (double mean : {0.01, 1.0, 17.0, 60.0, 100.0}) {
    double total = 0.0;
    for (int a = 0; a <= 400; ++a) total += cycle_pmf(a, mean, 1.0);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  // Log-space branch agrees with the product branch near the switch point.
  const double direct = std::exp(-30.0) * std::pow(30.0, 21) / std::tgamma(22.0);
  CHECK(cycle_pmf(21, 30.0, 1.0) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("P-K: closed-form cases") {
  const std::vector<double> one_l{0.5}, one_m{2.0};
  CHECK(pk_waiting_time(0, one_l, one_m, 1.0) == doctest::Approx(1.0));
  const std::vector<double> zero_l{0.0, 0.0, 0.0}, m3{1.0, 1.0, 1.0};
  for (int i = 0; i < 3; ++i) CHECK(pk_waiting_time(i, zero_l, m3, 1.0) == 0.0);
  const std::vector<double> two_l{0.3, 0.3}, two_m{2.0, 2.0};
  CHECK(pk_waiting_time(0, two_l, two_m, 1.0) == doctest::Approx(1.2 / 1.4));
  CHECK(pk_waiting_time(1, two_l, two_m, 1.0) == doctest::Approx(1.2 / (2 * 0.7 * 0.4)));
  CHECK(pk_waiting_time(0, two_l, two_m, 1.0, PkVariant::up_to_class) == doctest::Approx(0.6 / 1.4));
  const std::vector<double> hot{0.6, 0.5};
  CHECK_THROWS_AS(pk_waiting_time(1, hot, two_m, 1.0), SaturationError);
  CHECK_NOTHROW(pk_waiting_time(0, hot, two_m, 1.0));
}

TEST_CASE("P-K: M/M/1 against simulation") {
  const auto sim = oracle::priority_des(
      {0.5}, [](std::size_t, std::mt19937_64& rng) { return std::exponential_distribution<double>(1.0)(rng); },
      1000000, 20000, 101);
  CHECK(sim.mean_wait[0] == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("P-K: two priority classes against simulation") {
  const std::vector<double> l{0.3, 0.3}, m{2.0, 2.0};
  const auto sim = oracle::priority_des(
      l, [](std::size_t, std::mt19937_64& rng) { return std::exponential_distribution<double>(1.0)(rng); }, 1000000,
      20000, 202);
  CHECK(sim.mean_wait[0] == doctest::Approx(pk_waiting_time(0, l, m, 1.0)).epsilon(0.05));
  CHECK(sim.mean_wait[1] == doctest::Approx(pk_waiting_time(1, l, m, 1.0)).epsilon(0.05));
}

TEST_CASE("P-K: monotone in every rate and in class index") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  const std::vector<double> m{1.0, 3.0, 2.0};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> l{u(rng), u(rng), u(rng)};
    for (int i = 0; i < 3; ++i) {
      const double w = pk_waiting_time(i, l, m, 1.0);
      if (i > 0) CHECK(w >= pk_waiting_time(i - 1, l, m, 1.0));
      for (std::size_t k = 0; k < 3; ++k) {
        auto more = l;
        more[k] += 0.01;
        CHECK(pk_waiting_time(i, more, m, 1.0) >= w);
      }
    }
  }
}

TEST_CASE("total delay") {
  CHECK(total_delay(1.0, 1.0, 0.0) == 2.0);
  CHECK(total_delay(0.0, 1e6, 100e-6) == doctest::Approx(101e-6));
  CHECK(total_delay(0.857, 1.0, 0.1e-3) == doctest::Approx(1.8571));
}

TEST_CASE("sleep budget") {
  const std::array<double, 3> thr{0.1, 1.0, 50.0};
  const std::array<double, 3> t{0.01, 0.01, 0.01};
  const auto b = sleep_budget(thr, t, 2e-3);
  CHECK(b.per_class[0] == doctest::Approx(0.088));
  CHECK(b.per_class[1] == doctest::Approx(0.988));
  CHECK(b.per_class[2] == doctest::Approx(49.988));
  CHECK(b.tx_sleep == doctest::Approx(0.088));
  CHECK(b.quantized_cycles == 44);

  const std::array<double, 3> late{0.099, 0.01, 0.01};
  CHECK_FALSE(sleep_budget(thr, late, 2e-3).sleep_enabled());

  const std::array<double, 3> equal{0.5, 0.5, 0.5};
  const std::array<double, 3> tiny{1e-7, 1e-7, 1e-7};
  const auto e = sleep_budget(equal, tiny, 2e-3);
  CHECK(e.tx_sleep == doctest::Approx(0.5 - 2e-3).epsilon(1e-6));
  CHECK(e.quantized_cycles * 2e-3 <= 0.5);
}

TEST_CASE("sleep budget never exceeds the smallest threshold") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, 3> thr{0.01 + u(rng), 0.0, 0.0};
    thr[1] = thr[0] + u(rng);
    thr[2] = thr[1] + 10 * u(rng);
    const std::array<double, 3> t{0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)};
    const auto b = sleep_budget(thr, t, 2e-3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(b.tx_sleep <= thr[i] - t[i] - 2e-3 + 1e-15);
    CHECK(b.quantized_cycles * 2e-3 <= thr[0] + 1e-12);
  }
}

TEST_CASE("tx budget from loads") {
  TrafficConfig tc;
  tc.upstream_load_bps = 0.0;
  auto p = model_params_from_loads(tc, 2.5e9, 10e9, 2e-3, 1e-4);
  const auto zero = analyze_tx_budget(p, default_class_table());
  CHECK(zero.waiting[0] == 0.0);
  CHECK(zero.budget.tx_sleep == doctest::Approx(0.1 - 1.0 / p.mu_u - 1e-4 - 2e-3));
  CHECK(zero.budget.tx_sleep < 0.1);

  tc.upstream_load_bps = 3e9;
  p = model_params_from_loads(tc, 2.5e9, 10e9, 2e-3, 1e-4);
  const auto hot = analyze_tx_budget(p, default_class_table());
  CHECK(hot.saturated);
  CHECK_FALSE(hot.budget.sleep_enabled());
}
