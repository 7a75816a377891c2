#pragma once

// Variance-time estimate of long-range dependence: slope of log Var(block mean) against
// log block size. For a self-similar series the slope approaches 2H - 2.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double block_mean_variance(const std::vector<double>& x, std::size_t m) {
  const std::size_t k = x.size() / m;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t b = 0; b < k; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += x[b * m + i];
    const double mean = s / static_cast<double>(m);
    sum += mean;
    sum_sq += mean * mean;
  }
  const double mu = sum / static_cast<double>(k);
  return sum_sq / static_cast<double>(k) - mu * mu;
}

// Least-squares slope over block sizes spaced evenly in log from m_lo to m_hi.
inline double variance_time_slope(const std::vector<double>& x, std::size_t m_lo, std::size_t m_hi, int points) {
  std::vector<double> lx, ly;
  std::size_t last = 0;
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    const auto m = static_cast<std::size_t>(std::exp(std::log(double(m_lo)) + f * std::log(double(m_hi) / m_lo)));
    if (m == last) continue;
    last = m;
    lx.push_back(std::log10(static_cast<double>(m)));
    ly.push_back(std::log10(block_mean_variance(x, m)));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
