#pragma once

// Small fitting helpers for convergence-order measurement.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace sparsecombine {

/// Least-squares slope of y against x.
inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares_slope: need >= 2 pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: degenerate abscissae");
  return sxy / sxx;
}

/// Slope of log2|e_n| against n. Zero entries are rejected.
inline double log2_slope(std::span<const double> levels, std::span<const double> errors) {
  std::vector<double> y(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(std::abs(errors[i]) > 0.0)) throw std::domain_error("log2_slope: zero or non-finite error");
    y[i] = std::log2(std::abs(errors[i]));
  }
  return least_squares_slope(levels, y);
}

/// Observed order of convergence: -(slope of log2 error vs level).
inline double observed_order(std::span<const double> levels, std::span<const double> errors) {
  return -log2_slope(levels, errors);
}

struct ProportionalFit {
  double c = 0.0;
  double max_relative_residual = 0.0;  // max_i |y_i - c x_i| / |y_i|
};

/// Least-squares fit y ~ c x through the origin.
inline ProportionalFit fit_proportional(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_proportional: size mismatch");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  ProportionalFit fit;
  fit.c = sxy / sxx;
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.max_relative_residual = std::max(fit.max_relative_residual, std::abs(y[i] - fit.c * x[i]) / std::abs(y[i]));
  return fit;
}

}  // namespace sparsecombine
