#include "ponsim/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace ponsim {

std::string ChainState::label() const {
  const char* prefix = kind == StateKind::awake ? "A" : kind == StateKind::listen ? "L" : "S";
  return fmt::format("{}({})", prefix, index);
}

namespace {

// pmf[0..k_max] of Poisson(mean) with the mass above k_max lumped into the last entry.
std::vector<double> lumped_poisson(double mean, int k_max) {
  std::vector<double> pmf(static_cast<std::size_t>(k_max) + 1, 0.0);
  double acc = 0.0;
  for (int k = 0; k < k_max; ++k) {
    pmf[static_cast<std::size_t>(k)] = cycle_pmf(k, mean, 1.0);
    acc += pmf[static_cast<std::size_t>(k)];
  }
  pmf.back() = std::max(0.0, 1.0 - acc);
  return pmf;
}

double poisson_tail_above(double mean, int q) {
  double acc = 0.0;
  for (int k = 0; k <= q; ++k) acc += cycle_pmf(k, mean, 1.0);
  return std::max(0.0, 1.0 - acc);
}

int support_bound(double mean, int q_max) {
  const int spread = static_cast<int>(std::ceil(mean + 12.0 * std::sqrt(mean + 1.0) + 30.0));
  return std::max(q_max + 1, spread);
}

}  // namespace

MarkovChain build_sleep_chain(double arrivals_per_cycle, double departures_per_cycle, int listen, int sleep,
                              int q_max) {
  if (arrivals_per_cycle < 0.0 || departures_per_cycle < 0.0)
    throw std::invalid_argument("chain rates must be >= 0");
  if (listen < 1) throw std::invalid_argument("listen cycles must be >= 1");
  if (sleep < 0) throw std::invalid_argument("sleep cycles must be >= 0");
  if (q_max < 1) throw std::invalid_argument("q_max must be >= 1");

  MarkovChain chain;
  for (int r = 0; r <= q_max; ++r) chain.states.push_back({StateKind::awake, r});
  for (int k = 1; k <= listen; ++k) chain.states.push_back({StateKind::listen, k});
  for (int k = 1; k <= sleep; ++k) chain.states.push_back({StateKind::sleep, k});
  const std::size_t n = chain.states.size();
  chain.matrix.assign(n * n, 0.0);

  const auto awake_idx = [&](long r) { return static_cast<std::size_t>(std::min<long>(r, q_max)); };
  const auto listen_idx = [&](int k) { return static_cast<std::size_t>(q_max + k); };
  const auto sleep_idx = [&](int k) { return static_cast<std::size_t>(q_max + listen + k); };

  const int k_max = support_bound(arrivals_per_cycle, q_max);
  const auto arrivals = lumped_poisson(arrivals_per_cycle, k_max);
  const int n_dep = q_max + k_max + 1;
  std::vector<double> dep(static_cast<std::size_t>(n_dep) + 1, 0.0);
  std::vector<double> dep_survival(static_cast<std::size_t>(n_dep) + 1, 0.0);  // P(D >= n)
  {
    double cdf = 0.0;
    for (int k = 0; k <= n_dep; ++k) {
      dep_survival[static_cast<std::size_t>(k)] = std::max(0.0, 1.0 - cdf);
      dep[static_cast<std::size_t>(k)] = cycle_pmf(k, departures_per_cycle, 1.0);
      cdf += dep[static_cast<std::size_t>(k)];
    }
  }

  for (int r = 0; r <= q_max; ++r) {
    const std::size_t from = awake_idx(r);
    for (int a = 0; a <= k_max; ++a) {
      const double pa = arrivals[static_cast<std::size_t>(a)];
      if (pa == 0.0) continue;
      if (r == 0 && a == 0) {
        chain.at(from, listen_idx(1)) += pa;
        continue;
      }
      const int queued = r + a;
      chain.at(from, awake_idx(0)) += pa * dep_survival[static_cast<std::size_t>(queued)];
      for (int d = 0; d < queued; ++d) {
        const double pd = dep[static_cast<std::size_t>(d)];
        if (pd == 0.0) continue;
        chain.at(from, awake_idx(queued - d)) += pa * pd;
      }
    }
  }

  for (int k = 1; k <= listen; ++k) {
    const std::size_t from = listen_idx(k);
    std::size_t idle_to = listen_idx(std::min(k + 1, listen));
    if (k == listen && sleep > 0) idle_to = sleep_idx(1);
    chain.at(from, idle_to) += arrivals[0];
    for (int m = 1; m <= k_max; ++m) chain.at(from, awake_idx(m)) += arrivals[static_cast<std::size_t>(m)];
  }

  double window_tail = 0.0;
  if (sleep > 0) {
    for (int k = 1; k < sleep; ++k) chain.at(sleep_idx(k), sleep_idx(k + 1)) = 1.0;
    const double window_mean = arrivals_per_cycle * sleep;
    const int w_max = support_bound(window_mean, q_max);
    const auto window = lumped_poisson(window_mean, w_max);
    const std::size_t from = sleep_idx(sleep);
    chain.at(from, sleep_idx(1)) += window[0];
    for (int m = 1; m <= w_max; ++m) chain.at(from, awake_idx(m)) += window[static_cast<std::size_t>(m)];
    window_tail = poisson_tail_above(window_mean, q_max);
  }

  chain.truncated_mass = std::max(poisson_tail_above(arrivals_per_cycle, q_max), window_tail);
  chain.truncation_warning = chain.truncated_mass > 1e-6;

  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += chain.at(i, j);
    for (std::size_t j = 0; j < n; ++j) chain.at(i, j) /= s;
  }
  return chain;
}

MarkovChain build_rx_chain(const TrafficModelParams& params, int rx_listen, int rx_sleep, int q_max) {
  if (rx_sleep < 1) throw std::invalid_argument("rx sleep cycles must be >= 1");
  return build_sleep_chain(params.lambda_d * params.t_cycle, params.mu_d * params.t_cycle, rx_listen, rx_sleep,
                           q_max);
}

MarkovChain build_tx_chain(const TrafficModelParams& params, int tx_listen, int sleep_cycles, int q_max) {
  return build_sleep_chain(params.lambda_u_total() * params.t_cycle, params.mu_u * params.t_cycle, tx_listen,
                           sleep_cycles, q_max);
}

double stationary_residual(std::span<const double> matrix, std::size_t n, std::span<const double> pi) {
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += pi[i] * matrix[i * n + j];
    worst = std::max(worst, std::abs(v - pi[j]));
  }
  return worst;
}

namespace {

// Strongly connected components (Kosaraju, iterative). Returns component id per state.
std::vector<int> components(std::span<const double> m, std::size_t n, int& count) {
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m[i * n + j] > 0.0) {
        fwd[i].push_back(j);
        rev[j].push_back(i);
      }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
    seen[s] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < fwd[v].size()) {
        const std::size_t w = fwd[v][next++];
        if (!seen[w]) {
          seen[w] = 1;
          stack.emplace_back(w, 0);
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }
  std::vector<int> comp(n, -1);
  count = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] >= 0) continue;
    std::vector<std::size_t> stack{*it};
    comp[*it] = count;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : rev[v])
        if (comp[w] < 0) {
          comp[w] = count;
          stack.push_back(w);
        }
    }
    ++count;
  }
  return comp;
}

// Grassmann-Taksar-Heyman elimination for an irreducible stochastic matrix.
std::vector<double> gth(std::vector<double> a, std::size_t n) {
  for (std::size_t k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += a[k * n + j];
    if (!(s > 0.0)) throw NumericalError("GTH pivot vanished; class is not irreducible", 1.0);
    for (std::size_t i = 0; i < k; ++i) a[i * n + k] /= s;
    for (std::size_t i = 0; i < k; ++i) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) a[i * n + j] += aik * a[k * n + j];
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < j; ++i) v += pi[i] * a[i * n + j];
    pi[j] = v;
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& x : pi) x /= total;
  return pi;
}

StationaryResult power_iteration(std::span<const double> m, std::size_t n) {
  constexpr std::size_t kMaxIterations = 1'000'000;
  StationaryResult r;
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  for (std::size_t it = 1; it <= kMaxIterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = pi[i];
      if (w == 0.0) continue;
      const double* row = &m[i * n];
      for (std::size_t j = 0; j < n; ++j) next[j] += w * row[j];
    }
    // Lazy chain (P + I)/2 shares pi and removes periodicity.
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] = 0.5 * (next[j] + pi[j]);
      change = std::max(change, std::abs(next[j] - pi[j]));
    }
    pi.swap(next);
    if (change < 1e-15 || (it % 64 == 0 && stationary_residual(m, n, pi) < 1e-12)) {
      r.iterations = it;
      break;
    }
    if (it == kMaxIterations) {
      const double res = stationary_residual(m, n, pi);
      throw NumericalError(fmt::format("power iteration did not converge, residual {:.3e}", res), res);
    }
  }
  r.pi = std::move(pi);
  r.residual = stationary_residual(m, n, r.pi);
  return r;
}

}  // namespace

StationaryResult stationary(std::span<const double> matrix, std::size_t n) {
  if (n == 0 || matrix.size() != n * n) throw std::invalid_argument("matrix must be n x n with n > 0");
  if (n > kDenseSolveLimit) return power_iteration(matrix, n);

  int count = 0;
  const auto comp = components(matrix, n, count);
  std::vector<char> closed(static_cast<std::size_t>(count), 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (matrix[i * n + j] > 0.0 && comp[i] != comp[j]) closed[static_cast<std::size_t>(comp[i])] = 0;

  StationaryResult r;
  r.pi.assign(n, 0.0);
  const int closed_count = static_cast<int>(std::count(closed.begin(), closed.end(), 1));
  r.reducible = closed_count > 1;
  for (int c = 0; c < count; ++c) {
    if (!closed[static_cast<std::size_t>(c)]) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (comp[i] == c) members.push_back(i);
    const std::size_t k = members.size();
    std::vector<double> sub(k * k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) sub[a * k + b] = matrix[members[a] * n + members[b]];
    const auto local = k == 1 ? std::vector<double>{1.0} : gth(std::move(sub), k);
    for (std::size_t a = 0; a < k; ++a) r.pi[members[a]] = local[a] / closed_count;
  }
  r.residual = stationary_residual(matrix, n, r.pi);
  return r;
}

StationaryResult stationary(const MarkovChain& chain) { return stationary(chain.matrix, chain.size()); }

KindOccupancy occupancy_by_kind(const MarkovChain& chain, std::span<const double> pi) {
  KindOccupancy o;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    switch (chain.states[i].kind) {
      case StateKind::awake:
        o.awake += pi[i];
        break;
      case StateKind::listen:
        o.listen += pi[i];
        break;
      case StateKind::sleep:
        o.sleep += pi[i];
        break;
    }
  }
  return o;
}

double expected_power(const KindOccupancy& rx, const KindOccupancy& tx, const PowerProfile& profile) {
  const StateKind kinds[] = {StateKind::awake, StateKind::listen, StateKind::sleep};
  double w = 0.0;
  for (StateKind r : kinds)
    for (StateKind t : kinds) w += rx.of(r) * tx.of(t) * profile.at(r, t);
  return w;
}

}  // namespace ponsim
