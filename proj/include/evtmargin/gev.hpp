#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "evtmargin/detail/simplex.hpp"

namespace evtmargin::gev {

/// Generalized extreme value parameters under the standard shape convention
///
///   G(x) = exp[ -(1 + tau * (x - mu) / sigma)^(-1/tau) ]
///
/// so tau > 0 is the heavy (Frechet-type) tail, tau = 0 the Gumbel limit and
/// tau < 0 the bounded Weibull-type tail. Left-tail fits are performed on
/// negated block minima, so their parameters describe loss magnitudes.
struct Params {
  double tau = 0;
  double sigma = 1;
  double mu = 0;
  double se_tau = std::numeric_limits<double>::quiet_NaN();
  double se_sigma = std::numeric_limits<double>::quiet_NaN();
  double se_mu = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_fit = 0;
  double loglik = std::numeric_limits<double>::quiet_NaN();
};

/// Below this |tau| the Gumbel limit expressions are used.
inline constexpr double tau_epsilon = 1e-6;

namespace detail {

inline void check_params(const Params& p) {
  if (!(p.sigma > 0.0)) throw std::invalid_argument("gev: sigma must be positive");
}

// log of t(x) = (1 + tau*z)^(-1/tau), the CDF exponent; NaN signals a point
// outside the support.
inline double log_t(const Params& p, double x) {
  const double z = (x - p.mu) / p.sigma;
  if (std::abs(p.tau) < tau_epsilon) return -z;
  const double a = p.tau * z;
  if (a <= -1.0) return std::numeric_limits<double>::quiet_NaN();
  return -std::log1p(a) / p.tau;
}

}  // namespace detail

/// CDF, total over all reals: below the lower support endpoint (tau > 0)
/// it is 0, above the upper endpoint (tau < 0) it is 1.
inline double cdf(const Params& p, double x) {
  detail::check_params(p);
  const double lt = detail::log_t(p, x);
  if (std::isnan(lt)) return p.tau > 0 ? 0.0 : 1.0;
  return std::exp(-std::exp(lt));
}

/// 1 - cdf, evaluated without cancellation for small exceedance
/// probabilities.
inline double survival(const Params& p, double x) {
  detail::check_params(p);
  const double lt = detail::log_t(p, x);
  if (std::isnan(lt)) return p.tau > 0 ? 1.0 : 0.0;
  return -std::expm1(-std::exp(lt));
}

/// CDF of the block minimum, P(Min <= x), where `p` was fitted on the
/// negated minima: 1 - cdf(p, -x).
inline double cdf_min(const Params& p, double x) { return survival(p, -x); }

/// Quantile: mu + (sigma/tau) * ((-ln q)^(-tau) - 1), Gumbel limit
/// mu - sigma * ln(-ln q).
inline double quantile(const Params& p, double q) {
  detail::check_params(p);
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("gev quantile: probability must be in (0, 1)");
  const double log_w = std::log(-std::log(q));
  if (std::abs(p.tau) < tau_epsilon) return p.mu - p.sigma * log_w;
  return p.mu + p.sigma * std::expm1(-p.tau * log_w) / p.tau;
}

/// log density; -inf outside the support.
inline double log_pdf(const Params& p, double x) {
  detail::check_params(p);
  const double lt = detail::log_t(p, x);
  if (std::isnan(lt)) return -std::numeric_limits<double>::infinity();
  return -std::log(p.sigma) + (1.0 + p.tau) * lt - std::exp(lt);
}

inline double pdf(const Params& p, double x) {
  const double lp = log_pdf(p, x);
  return std::isinf(lp) ? 0.0 : std::exp(lp);
}

/// Sum of log densities; -inf when any point violates the support.
inline double loglik(const Params& p, std::span<const double> data) {
  if (data.empty()) throw std::invalid_argument("gev loglik: empty data");
  double sum = 0;
  for (double x : data) {
    const double lp = log_pdf(p, x);
    if (std::isinf(lp)) return -std::numeric_limits<double>::infinity();
    sum += lp;
  }
  return sum;
}

/// Inverse-CDF sampling with a seeded mt19937_64; reproducible across
/// platforms (the uniform is built from raw engine output, not a
/// distribution object).
inline std::vector<double> sample(const Params& p, std::size_t count, std::uint64_t seed) {
  detail::check_params(p);
  if (count < 1) throw std::invalid_argument("gev sample: count must be >= 1");
  std::mt19937_64 gen(seed);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;  // in (0, 1)
    out.push_back(quantile(p, u));
  }
  return out;
}

namespace detail {

inline constexpr std::size_t fit_max_iterations = 10'000;
inline constexpr double fit_param_tol = 1e-10;
inline constexpr std::size_t fit_min_points = 20;

// Negative log likelihood with a graded penalty outside the feasible region
// so the simplex can retreat instead of crashing.
inline double penalized_nll(std::span<const double> theta, std::span<const double> data) {
  const double tau = theta[0], sigma = theta[1], mu = theta[2];
  constexpr double penalty_base = 1e10;
  if (!(sigma > 0.0)) return penalty_base * (2.0 - sigma);
  double violation = 0;
  if (std::abs(tau) >= tau_epsilon) {
    for (double x : data) {
      const double a = tau * (x - mu) / sigma;
      if (a <= -1.0) violation += 1.0 - (1.0 + a);
    }
  }
  if (violation > 0) return penalty_base * (1.0 + violation);
  Params p;
  p.tau = tau;
  p.sigma = sigma;
  p.mu = mu;
  return -loglik(p, data);
}

// Observed information at the optimum via central finite differences of the
// negative log likelihood; inverted in closed form (3x3). Returns false when
// the Hessian is not positive definite or the stencil leaves the support.
inline bool standard_errors(const Params& opt, std::span<const double> data,
                            std::array<double, 3>& se) {
  const std::array<double, 3> theta = {opt.tau, opt.sigma, opt.mu};
  std::array<double, 3> h{};
  for (std::size_t i = 0; i < 3; ++i) h[i] = std::max(1e-5, 1e-4 * std::abs(theta[i]));

  const auto nll = [&](double tau, double sigma, double mu) {
    if (!(sigma > 0.0)) return std::numeric_limits<double>::infinity();
    Params p;
    p.tau = tau;
    p.sigma = sigma;
    p.mu = mu;
    return -loglik(p, data);
  };
  const auto at = [&](double d0, double d1, double d2) {
    return nll(theta[0] + d0, theta[1] + d1, theta[2] + d2);
  };

  const double f0 = at(0, 0, 0);
  double H[3][3];
  for (std::size_t i = 0; i < 3; ++i) {
    std::array<double, 3> dp{}, dm{};
    dp[i] = h[i];
    dm[i] = -h[i];
    H[i][i] = (at(dp[0], dp[1], dp[2]) - 2.0 * f0 + at(dm[0], dm[1], dm[2])) / (h[i] * h[i]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      std::array<double, 3> d{};
      d[i] = h[i];
      d[j] = h[j];
      const double fpp = at(d[0], d[1], d[2]);
      d[i] = h[i];
      d[j] = -h[j];
      const double fpm = at(d[0], d[1], d[2]);
      d[i] = -h[i];
      d[j] = h[j];
      const double fmp = at(d[0], d[1], d[2]);
      d[i] = -h[i];
      d[j] = -h[j];
      const double fmm = at(d[0], d[1], d[2]);
      H[i][j] = H[j][i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  for (auto& row : H)
    for (double v : row)
      if (!std::isfinite(v)) return false;

  // Sylvester criterion, then the inverse diagonal from cofactors.
  const double det2 = H[0][0] * H[1][1] - H[0][1] * H[0][1];
  const double det3 = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[1][2]) -
                      H[0][1] * (H[0][1] * H[2][2] - H[1][2] * H[0][2]) +
                      H[0][2] * (H[0][1] * H[1][2] - H[1][1] * H[0][2]);
  if (!(H[0][0] > 0) || !(det2 > 0) || !(det3 > 0)) return false;

  const double inv00 = (H[1][1] * H[2][2] - H[1][2] * H[1][2]) / det3;
  const double inv11 = (H[0][0] * H[2][2] - H[0][2] * H[0][2]) / det3;
  const double inv22 = (H[0][0] * H[1][1] - H[0][1] * H[0][1]) / det3;
  if (!(inv00 > 0) || !(inv11 > 0) || !(inv22 > 0)) return false;
  se = {std::sqrt(inv00), std::sqrt(inv11), std::sqrt(inv22)};
  return true;
}

}  // namespace detail

/// Maximum-likelihood fit via Nelder-Mead from a Gumbel moment start
/// (sigma0 = sd*sqrt(6)/pi, mu0 = mean - 0.5772*sigma0, tau0 = 0.1).
/// Standard errors come from the inverse observed information; when the
/// numerical Hessian is not positive definite the point estimate is kept and
/// the errors are reported as NaN. Deterministic for a fixed input.
inline Params fit(std::span<const double> data) {
  if (data.size() < detail::fit_min_points)
    throw std::invalid_argument("gev fit: need at least " +
                                std::to_string(detail::fit_min_points) + " extremes, got " +
                                std::to_string(data.size()));

  double mean = 0;
  for (double x : data) mean += x;
  mean /= static_cast<double>(data.size());
  double ss = 0;
  double lo = data[0], hi = data[0];
  for (double x : data) {
    ss += (x - mean) * (x - mean);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (lo == hi) throw std::invalid_argument("gev fit: degenerate sample (constant data)");
  const double sd = std::sqrt(ss / (static_cast<double>(data.size()) - 1.0));

  const double sigma0 = sd * std::sqrt(6.0) / 3.14159265358979323846;
  const std::array<double, 3> start = {0.1, sigma0, mean - 0.5772 * sigma0};
  const std::array<double, 3> step = {0.05, 0.1 * sigma0, 0.1 * sigma0};

  const auto objective = [&](std::span<const double> theta) {
    return detail::penalized_nll(theta, data);
  };
  const auto res = evtmargin::detail::nelder_mead(objective, start, step, detail::fit_param_tol,
                                                  detail::fit_max_iterations);
  if (!res.converged)
    throw std::runtime_error("gev fit: no convergence within " +
                             std::to_string(detail::fit_max_iterations) + " iterations");

  Params p;
  p.tau = res.point[0];
  p.sigma = res.point[1];
  p.mu = res.point[2];
  p.n_fit = data.size();
  p.loglik = -res.value;

  std::array<double, 3> se{};
  if (detail::standard_errors(p, data, se)) {
    p.se_tau = se[0];
    p.se_sigma = se[1];
    p.se_mu = se[2];
  }
  return p;
}

}  // namespace evtmargin::gev
