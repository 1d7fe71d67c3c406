#pragma once

#include <cmath>
#include <stdexcept>

namespace evtmargin {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile. Newton refinement of the classic
/// Abramowitz-Stegun 26.2.22 starting value; accurate to a few ulp over
/// the probabilities used here.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: probability must be in (0, 1)");
  const bool lower = p < 0.5;
  const double q = lower ? p : 1.0 - p;

  const double t = std::sqrt(-2.0 * std::log(q));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
  if (lower) x = -x;

  static const double inv_sqrt_2pi = 0.3989422804014327;
  for (int i = 0; i < 8; ++i) {
    const double err = normal_cdf(x) - p;
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    if (pdf <= 0.0) break;
    const double dx = err / pdf;
    x -= dx;
    if (std::abs(dx) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  return x;
}

}  // namespace evtmargin
