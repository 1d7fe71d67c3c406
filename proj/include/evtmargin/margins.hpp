#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtmargin/gev.hpp"
#include "evtmargin/normal.hpp"
#include "evtmargin/types.hpp"

namespace evtmargin::margins {

/// Table panel order: short, long, common.
enum class Position { Short, Long, Common };

inline constexpr std::array<Position, 3> all_positions = {Position::Short, Position::Long,
                                                          Position::Common};

constexpr std::string_view to_string(Position p) {
  switch (p) {
    case Position::Short: return "short";
    case Position::Long: return "long";
    case Position::Common: return "common";
  }
  return "?";
}

constexpr char panel_letter(Position p) {
  switch (p) {
    case Position::Short: return 'A';
    case Position::Long: return 'B';
    case Position::Common: return 'C';
  }
  return '?';
}

/// Tail whose fitted parameters drive a position's margin. Long losses live
/// in the left tail (fitted on negated minima), short losses in the right.
constexpr Tail tail_for(Position p) {
  switch (p) {
    case Position::Short: return Tail::Right;
    case Position::Long: return Tail::Left;
    case Position::Common: return Tail::Common;
  }
  return Tail::Common;
}

struct MarginSpec {
  double probability = 0.01;  // margin-call tolerance, strictly inside (0, 1)
  Position position = Position::Common;
  FuturesKind futures_kind = FuturesKind::Perpetual;
  Frequency frequency = Frequency::Day1;
};

struct MarginResult {
  double gev_margin = 0;      // percent of notional (x100 scale of the fit)
  double normal_margin = 0;   // NaN for the common position
  gev::Params params_used;
  MarginSpec spec;
};

/// Margin level whose exceedance probability under the fitted extreme
/// distribution equals p, i.e. the (1-p)-quantile:
///
///   MD = mu + (sigma/tau) * ((-ln(1-p))^(-tau) - 1)
///
/// One formula serves long, short and common positions because left-tail
/// parameters are fitted on negated minima (the reflection absorbs the sign
/// of the long-loss quantile). Strictly decreasing in p.
inline double optimal_margin(const gev::Params& params, double p) {
  gev::detail::check_params(params);
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("optimal_margin: probability must be in (0, 1)");
  const double log_w = std::log(-std::log1p(-p));  // ln(-ln(1-p))
  if (std::abs(params.tau) < gev::tau_epsilon) return params.mu - params.sigma * log_w;
  return params.mu + params.sigma * std::expm1(-params.tau * log_w) / params.tau;
}

/// P(extreme > md) under the fitted distribution; the inverse of
/// optimal_margin on (0, 1).
inline double margin_call_probability(const gev::Params& params, double md) {
  return gev::survival(params, md);
}

/// Normal-distribution baseline from raw per-observation moments:
/// short: mean + sd * z(1-p), long: sd * z(1-p) - mean.
inline double normal_margin(double mean, double sd, double p, Side position) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal_margin: sd must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_margin: probability must be in (0, 1)");
  const double z = normal_quantile(1.0 - p);
  return position == Side::Short ? mean + sd * z : sd * z - mean;
}

/// 100 / margin, the leverage at which the margin is exactly the deposit
/// (e.g. a 33% margin supports 3X leverage).
inline double leverage_equivalent(double margin_pct) {
  if (!(margin_pct > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 / margin_pct;
}

struct TailKey {
  FuturesKind kind;
  Frequency frequency;
  Tail tail;
  friend auto operator<=>(const TailKey&, const TailKey&) = default;
};

struct Moments {
  double mean = 0;
  double sd = 0;
};

/// One margin cell: the GEV margin for the spec's tolerance plus the normal
/// baseline when `moments` are given (long/short only; the common position
/// has no published baseline and reports NaN).
inline MarginResult compute_margin(const gev::Params& params, const MarginSpec& spec,
                                   const std::optional<Moments>& moments = std::nullopt) {
  if (!(spec.probability > 0.0 && spec.probability < 1.0))
    throw std::invalid_argument("compute_margin: probability must be in (0, 1)");
  MarginResult result;
  result.spec = spec;
  result.params_used = params;
  result.gev_margin = optimal_margin(params, spec.probability);
  result.normal_margin = std::numeric_limits<double>::quiet_NaN();
  if (spec.position != Position::Common && moments)
    result.normal_margin =
        normal_margin(moments->mean, moments->sd, spec.probability,
                      spec.position == Position::Short ? Side::Short : Side::Long);
  return result;
}

using MomentKey = std::pair<FuturesKind, Frequency>;

struct MarginRow {
  Position position;
  FuturesKind kind;
  Frequency frequency;
  double probability;
  double gev_margin;
  double normal_margin;  // NaN for the common position (no normal baseline)
  double gev_leverage;
};

struct MarginTable {
  std::vector<MarginRow> rows;
};

/// Full cross product position x kind x frequency x probability, ordered by
/// panel (short, long, common), kind, frequency, then the given probability
/// order. Requires a fit for every requested cell and moments for the
/// short/long normal baselines.
inline MarginTable margin_table(const std::map<TailKey, gev::Params>& fits,
                                const std::map<MomentKey, Moments>& moments,
                                std::span<const FuturesKind> kinds,
                                std::span<const Frequency> frequencies,
                                std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("margin_table: no probabilities given");
  if (kinds.empty() || frequencies.empty())
    throw std::invalid_argument("margin_table: no cells requested");

  MarginTable table;
  for (Position pos : all_positions) {
    for (FuturesKind kind : kinds) {
      for (Frequency freq : frequencies) {
        const TailKey key{kind, freq, tail_for(pos)};
        const auto fit_it = fits.find(key);
        if (fit_it == fits.end())
          throw std::invalid_argument(std::string("margin_table: missing fit for ") +
                                      std::string(to_string(kind)) + "/" +
                                      std::string(to_string(freq)) + "/" +
                                      std::string(to_string(key.tail)));
        std::optional<Moments> cell_moments;
        if (pos != Position::Common) {
          const auto mom_it = moments.find({kind, freq});
          if (mom_it == moments.end())
            throw std::invalid_argument(std::string("margin_table: missing moments for ") +
                                        std::string(to_string(kind)) + "/" +
                                        std::string(to_string(freq)));
          cell_moments = mom_it->second;
        }
        for (double p : probabilities) {
          const MarginResult cell =
              compute_margin(fit_it->second, {p, pos, kind, freq}, cell_moments);
          MarginRow row{};
          row.position = pos;
          row.kind = kind;
          row.frequency = freq;
          row.probability = p;
          row.gev_margin = cell.gev_margin;
          row.normal_margin = cell.normal_margin;
          row.gev_leverage = leverage_equivalent(cell.gev_margin);
          table.rows.push_back(row);
        }
      }
    }
  }
  return table;
}

struct ExceedanceEstimate {
  double frequency = 0;  // fraction of sampled extremes above md
  double se = 0;         // binomial standard error sqrt(f(1-f)/n)
};

/// Empirical exceedance frequency of `md` over `n` sampled block extremes.
/// Seeded and reproducible.
inline ExceedanceEstimate monte_carlo_exceedance(const gev::Params& params, double md,
                                                 std::size_t n, std::uint64_t seed) {
  gev::detail::check_params(params);
  if (n < 10'000) throw std::invalid_argument("monte_carlo_exceedance: need n >= 10000");
  std::mt19937_64 gen(seed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    if (gev::quantile(params, u) > md) ++hits;
  }
  ExceedanceEstimate est;
  est.frequency = static_cast<double>(hits) / static_cast<double>(n);
  est.se = std::sqrt(est.frequency * (1.0 - est.frequency) / static_cast<double>(n));
  return est;
}

}  // namespace evtmargin::margins
