#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rrw/error.hpp"

namespace rrw {

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population (1/n) variance.
inline double variance_pop(std::span<const double> v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline double covariance_pop(std::span<const double> x, std::span<const double> y) {
  double mx = mean_of(x), my = mean_of(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size());
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  double vx = variance_pop(x), vy = variance_pop(y);
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return covariance_pop(x, y) / std::sqrt(vx * vy);
}

// Linear-interpolation percentile on a sorted range, q in [0,100].
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::insufficient_data, "percentile of empty range");
  if (sorted.size() == 1) return sorted[0];
  double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
  double lo = std::floor(rank);
  std::size_t i = static_cast<std::size_t>(lo);
  if (i + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  double frac = rank - lo;
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, q);
}

// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }

// Two-sided p-value for a standard normal statistic.
inline double normal_two_sided_p(double z) {
  double p = std::erfc(std::abs(z) / 1.4142135623730950488);
  return std::min(1.0, p);
}

}  // namespace rrw
