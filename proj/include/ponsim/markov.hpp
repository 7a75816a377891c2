#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ponsim/analysis.hpp"
#include "ponsim/sleep_fsm.hpp"

namespace ponsim {

struct ChainState {
  StateKind kind = StateKind::awake;
  int index = 0;  // queue length for Awake, cycle counter for Listen/Sleep

  std::string label() const;
};

/// Truncated Awake/Listen/Sleep chain with a dense row-stochastic matrix.
struct MarkovChain {
  std::vector<ChainState> states;
  std::vector<double> matrix;  // row-major, size() x size()
  bool truncation_warning = false;
  double truncated_mass = 0.0;  // arrival probability beyond q_max in the widest window

  std::size_t size() const { return states.size(); }
  double at(std::size_t from, std::size_t to) const { return matrix[from * size() + to]; }
  double& at(std::size_t from, std::size_t to) { return matrix[from * size() + to]; }
};

/// Chain over A(0..q_max), L(1..listen), S(1..sleep) driven by per-cycle Poisson arrivals and
/// departures. Within a cycle arrivals come first, departures are capped by what is queued, and
/// queue lengths above q_max fold into A(q_max). From L(k) a cycle with m >= 1 arrivals leads to
/// A(m); from S(sleep) the arrivals of the whole sleep window decide between A(m) and S(1).
/// sleep = 0 builds a chain without sleep states that idles in L(listen).
MarkovChain build_sleep_chain(double arrivals_per_cycle, double departures_per_cycle, int listen, int sleep,
                              int q_max);

MarkovChain build_rx_chain(const TrafficModelParams& params, int rx_listen, int rx_sleep, int q_max);
MarkovChain build_tx_chain(const TrafficModelParams& params, int tx_listen, int sleep_cycles, int q_max);

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct StationaryResult {
  std::vector<double> pi;
  double residual = 0.0;  // max_j |(pi P)_j - pi_j|
  bool reducible = false;  // more than one closed class; pi averages their stationary laws
  std::size_t iterations = 0;
};

inline constexpr std::size_t kDenseSolveLimit = 2000;

/// Stationary law: GTH elimination per closed class up to kDenseSolveLimit states, power
/// iteration on the lazy chain above that.
StationaryResult stationary(const MarkovChain& chain);
StationaryResult stationary(std::span<const double> matrix, std::size_t n);

double stationary_residual(std::span<const double> matrix, std::size_t n, std::span<const double> pi);

struct KindOccupancy {
  double awake = 0.0;
  double listen = 0.0;
  double sleep = 0.0;

  double of(StateKind k) const { return k == StateKind::awake ? awake : k == StateKind::listen ? listen : sleep; }
};

KindOccupancy occupancy_by_kind(const MarkovChain& chain, std::span<const double> pi);

/// Mean power assuming independent receiver and transmitter chains.
double expected_power(const KindOccupancy& rx, const KindOccupancy& tx, const PowerProfile& profile);

}  // namespace ponsim
