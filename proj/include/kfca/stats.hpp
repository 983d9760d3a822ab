#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace kfca {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(count); 0 for a single sample
  std::size_t count = 0;
};

inline MeanEstimate estimate_mean(std::span<const double> xs) {
  MeanEstimate e;
  e.count = xs.size();
  if (xs.empty()) return {std::nan(""), std::nan(""), 0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return e;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace kfca
