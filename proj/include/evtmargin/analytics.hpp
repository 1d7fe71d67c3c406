#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtmargin/timeseries.hpp"
#include "evtmargin/types.hpp"

namespace evtmargin::analytics {

/// One daily OHLCV record with forced-liquidation volumes. Volumes, open
/// interest and liquidations are USD notional (one inverse contract = 1 USD).
struct LiquidationDay {
  std::string date;  // YYYY-MM-DD
  double open = 0, high = 0, low = 0, close = 0;
  double volume = 0;
  double open_interest = 0;
  double long_liq = 0, short_liq = 0;
};

inline void validate_day(const LiquidationDay& d) {
  const auto fail = [&](const std::string& what) {
    throw std::invalid_argument("liquidation day " + d.date + ": " + what);
  };
  if (!(d.open > 0 && d.high > 0 && d.low > 0 && d.close > 0)) fail("non-positive price");
  if (d.low > std::min(d.open, d.close) || d.high < std::max(d.open, d.close))
    fail("OHLC ordering violated (need low <= open,close <= high)");
  if (!(d.open_interest > 0)) fail("open interest must be positive");
  if (d.long_liq < 0 || d.short_liq < 0 || d.volume < 0) fail("negative volume");
}

/// Realized pay-off of an inverse position in XBT for notional `pi` USD:
/// long pays pi/f_enter - pi/f_exit, short the negation. The 1/F payoff is
/// why equal-size down moves cost a long more than up moves cost a short.
inline double payoff(Side position, double pi, double f_enter, double f_exit) {
  if (!(f_enter > 0 && f_exit > 0)) throw std::invalid_argument("payoff: non-positive price");
  if (!(pi > 0)) throw std::invalid_argument("payoff: notional must be positive");
  const double long_payoff = pi / f_enter - pi / f_exit;
  return position == Side::Long ? long_payoff : -long_payoff;
}

/// Price at which the trading loss exactly exhausts a 1/L margin deposit:
/// long: F*L/(L+1); short: F*L/(L-1). A short at leverage <= 1 is fully
/// collateralized and has no finite trigger.
inline double trigger_price(Side position, double f_enter, double leverage) {
  if (!(f_enter > 0)) throw std::invalid_argument("trigger_price: non-positive price");
  if (position == Side::Long) {
    if (!(leverage > 0)) throw std::invalid_argument("trigger_price: leverage must be positive");
    return f_enter * leverage / (leverage + 1.0);
  }
  if (!(leverage > 1))
    throw std::invalid_argument("trigger_price: no finite liquidation price for short at leverage <= 1");
  return f_enter * leverage / (leverage - 1.0);
}

struct LeverageEstimate {
  double lev_long = 0;
  double lev_short = 0;
  bool long_at_cap = false;
  bool short_at_cap = false;
};

/// Leverage at which the day's extreme return would exactly trigger
/// liquidation of a position opened at the open price:
/// lev_long = -(1 + r_min)/r_min, lev_short = (1 + r_max)/r_max
/// with r_min = (low-open)/open, r_max = (high-open)/open. Values are capped
/// (flat side => at cap, flagged).
inline LeverageEstimate implied_leverage(const LiquidationDay& day, double cap = 100.0) {
  validate_day(day);
  if (!(cap > 1)) throw std::invalid_argument("implied_leverage: cap must be > 1");
  const double r_min = (day.low - day.open) / day.open;
  const double r_max = (day.high - day.open) / day.open;
  LeverageEstimate est;
  if (r_min == 0.0) {
    est.lev_long = cap;
    est.long_at_cap = true;
  } else {
    est.lev_long = -(1.0 + r_min) / r_min;
    if (est.lev_long >= cap) {
      est.lev_long = cap;
      est.long_at_cap = true;
    }
  }
  if (r_max == 0.0) {
    est.lev_short = cap;
    est.short_at_cap = true;
  } else {
    est.lev_short = (1.0 + r_max) / r_max;
    if (est.lev_short >= cap) {
      est.lev_short = cap;
      est.short_at_cap = true;
    }
  }
  return est;
}

/// Trading volume over open interest.
inline double speculation_index(const LiquidationDay& day) {
  if (!(day.open_interest > 0))
    throw std::invalid_argument("speculation_index: zero open interest");
  return day.volume / day.open_interest;
}

/// (long_liq/OI, short_liq/OI), fractional; values above 1 are permitted
/// (intraday churn can liquidate more than the end-of-day open interest).
inline std::pair<double, double> liquidation_percentages(const LiquidationDay& day) {
  if (!(day.open_interest > 0))
    throw std::invalid_argument("liquidation_percentages: zero open interest");
  return {day.long_liq / day.open_interest, day.short_liq / day.open_interest};
}

struct DayMetrics {
  double r_max = 0, r_min = 0;
  double si = 0;
  double p_long = 0, p_short = 0;  // fractional
  double lev_long = 0, lev_short = 0;
  bool long_at_cap = false, short_at_cap = false;
};

inline DayMetrics day_metrics(const LiquidationDay& day, double cap = 100.0) {
  validate_day(day);
  DayMetrics m;
  m.r_min = (day.low - day.open) / day.open;
  m.r_max = (day.high - day.open) / day.open;
  m.si = speculation_index(day);
  const auto [pl, ps] = liquidation_percentages(day);
  m.p_long = pl;
  m.p_short = ps;
  const auto lev = implied_leverage(day, cap);
  m.lev_long = lev.lev_long;
  m.lev_short = lev.lev_short;
  m.long_at_cap = lev.long_at_cap;
  m.short_at_cap = lev.short_at_cap;
  return m;
}

struct MetricStats {
  double min = 0, median = 0, mean = 0, max = 0;
};

/// Summary across days, with the units used in tabulated reports:
/// liquidation volumes in millions, liquidation ratios in percent.
struct AnalyticsSummary {
  MetricStats r_min, r_max;
  MetricStats long_liq_m, short_liq_m;
  MetricStats si;
  MetricStats p_long_pct, p_short_pct;
  MetricStats lev_long, lev_short;
  std::size_t nobs = 0;
  std::size_t n_long_at_cap = 0, n_short_at_cap = 0;
};

namespace detail {

inline MetricStats metric_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  MetricStats s;
  s.min = v.front();
  s.max = v.back();
  const std::size_t n = v.size();
  s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(n);
  return s;
}

}  // namespace detail

inline AnalyticsSummary analytics_summary(std::span<const LiquidationDay> days,
                                          double cap = 100.0) {
  if (days.empty()) throw std::invalid_argument("analytics_summary: no days given");
  std::vector<double> r_min, r_max, long_m, short_m, si, p_long, p_short, lev_l, lev_s;
  AnalyticsSummary out;
  for (const auto& day : days) {
    const DayMetrics m = day_metrics(day, cap);
    r_min.push_back(m.r_min);
    r_max.push_back(m.r_max);
    long_m.push_back(day.long_liq / 1e6);
    short_m.push_back(day.short_liq / 1e6);
    si.push_back(m.si);
    p_long.push_back(m.p_long * 100.0);
    p_short.push_back(m.p_short * 100.0);
    lev_l.push_back(m.lev_long);
    lev_s.push_back(m.lev_short);
    out.n_long_at_cap += m.long_at_cap ? 1 : 0;
    out.n_short_at_cap += m.short_at_cap ? 1 : 0;
  }
  out.nobs = days.size();
  out.r_min = detail::metric_stats(std::move(r_min));
  out.r_max = detail::metric_stats(std::move(r_max));
  out.long_liq_m = detail::metric_stats(std::move(long_m));
  out.short_liq_m = detail::metric_stats(std::move(short_m));
  out.si = detail::metric_stats(std::move(si));
  out.p_long_pct = detail::metric_stats(std::move(p_long));
  out.p_short_pct = detail::metric_stats(std::move(p_short));
  out.lev_long = detail::metric_stats(std::move(lev_l));
  out.lev_short = detail::metric_stats(std::move(lev_s));
  return out;
}

/// Loads a `date,open,high,low,close,volume,open_interest,long_liq,short_liq`
/// CSV, one row per day, YYYY-MM-DD dates, all numeric fields decimal USD.
inline std::vector<LiquidationDay> load_liquidation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open liquidation file '" + path.string() + "'");
  std::vector<LiquidationDay> days;
  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = evtmargin::detail::strip_cr(raw);
    if (line.empty()) continue;
    if (first_content) {
      first_content = false;
      if (line.rfind("date", 0) == 0 || line.rfind("Date", 0) == 0) continue;
    }
    const auto f = evtmargin::detail::split(line, ',');
    if (f.size() != 9)
      throw std::invalid_argument("malformed row at line " + std::to_string(line_no) +
                                  ": expected 9 columns, got " + std::to_string(f.size()));
    LiquidationDay d;
    d.date = std::string(f[0]);
    if (d.date.size() != 10 || d.date[4] != '-' || d.date[7] != '-' ||
        evtmargin::detail::parse_fixed_int(d.date, 0, 4) < 0 ||
        evtmargin::detail::parse_fixed_int(d.date, 5, 2) < 0 ||
        evtmargin::detail::parse_fixed_int(d.date, 8, 2) < 0)
      throw std::invalid_argument("malformed row at line " + std::to_string(line_no) +
                                  ": date must be YYYY-MM-DD");
    try {
      d.open = evtmargin::detail::parse_double_strict(f[1]);
      d.high = evtmargin::detail::parse_double_strict(f[2]);
      d.low = evtmargin::detail::parse_double_strict(f[3]);
      d.close = evtmargin::detail::parse_double_strict(f[4]);
      d.volume = evtmargin::detail::parse_double_strict(f[5]);
      d.open_interest = evtmargin::detail::parse_double_strict(f[6]);
      d.long_liq = evtmargin::detail::parse_double_strict(f[7]);
      d.short_liq = evtmargin::detail::parse_double_strict(f[8]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("malformed row at line " + std::to_string(line_no) + ": " +
                                  e.what());
    }
    try {
      validate_day(d);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("invalid row at line " + std::to_string(line_no) + ": " +
                                  e.what());
    }
    days.push_back(std::move(d));
  }
  return days;
}

}  // namespace evtmargin::analytics
