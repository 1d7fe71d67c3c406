#pragma once

// Synthetic fixture generation: seeded geometric-random-walk price files and
// OHLCV liquidation files in the formats the pipeline ingests. Fully
// deterministic for a given seed.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "evtmargin/pipeline.hpp"
#include "evtmargin/types.hpp"
#include "support/test_rng.hpp"

namespace testsupport {

inline std::string civil_date(std::int64_t days_since_epoch) {
  // inverse of days_from_civil
  std::int64_t z = days_since_epoch + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t year = m <= 2 ? y + 1 : y;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", static_cast<long long>(year), m, d);
  return buf;
}

/// Writes `n_points` geometric-random-walk prices at `freq`, starting at
/// 2017-01-01T00:00:00Z. Gaussian steps with occasional 4x jumps give the
/// changes a mildly heavy tail so GEV fits behave like market data.
inline void write_price_fixture(const std::filesystem::path& path, std::size_t n_points,
                                std::uint64_t seed,
                                evtmargin::Frequency freq = evtmargin::Frequency::Min5) {
  TestRng rng(seed);
  std::ofstream out(path, std::ios::binary);
  out << "timestamp,price\n";
  const std::int64_t start_ms =
      evtmargin::detail::parse_timestamp("2017-01-01T00:00:00Z");
  const std::int64_t step_ms = evtmargin::interval_ms(freq);
  double price = 10'000.0;
  for (std::size_t i = 0; i < n_points; ++i) {
    out << (start_ms + static_cast<std::int64_t>(i) * step_ms) << ','
        << evtmargin::detail::format_double(price) << '\n';
    double z = rng.normal();
    if (rng.uniform() < 0.02) z *= 4.0;  // jump component
    price *= std::exp(0.003 * z);
  }
}

/// Writes `n_days` synthetic OHLCV rows with liquidation volumes and open
/// interest, starting at 2020-01-29.
inline void write_ohlcv_fixture(const std::filesystem::path& path, std::size_t n_days,
                                std::uint64_t seed) {
  TestRng rng(seed);
  std::ofstream out(path, std::ios::binary);
  out << "date,open,high,low,close,volume,open_interest,long_liq,short_liq\n";
  const std::int64_t start_day = evtmargin::detail::days_from_civil(2020, 1, 29);
  double open = 9'400.0;
  for (std::size_t i = 0; i < n_days; ++i) {
    const double daily_vol = 0.035 * (rng.uniform() < 0.05 ? 3.0 : 1.0);
    const double close = open * std::exp(daily_vol * rng.normal());
    const double hi_base = std::max(open, close);
    const double lo_base = std::min(open, close);
    const double high = hi_base * (1.0 + std::abs(rng.normal()) * daily_vol * 0.6);
    const double low = lo_base * (1.0 - std::abs(rng.normal()) * daily_vol * 0.6);
    const double open_interest = 6.0e8 * std::exp(0.3 * rng.normal());
    const double si = std::exp(1.1 + 0.5 * rng.normal());  // trading volume / OI around 3
    const double volume = open_interest * si;
    const double r_min = (low - open) / open;
    const double r_max = (high - open) / open;
    // wider intraday range => more forced liquidation
    const double long_liq = open_interest * std::min(2.0, -r_min * rng.uniform(0.2, 1.8));
    const double short_liq = open_interest * std::min(2.0, r_max * rng.uniform(0.1, 1.2));
    out << civil_date(start_day + static_cast<std::int64_t>(i)) << ','
        << evtmargin::detail::format_double(open) << ','
        << evtmargin::detail::format_double(high) << ','
        << evtmargin::detail::format_double(low) << ','
        << evtmargin::detail::format_double(close) << ','
        << evtmargin::detail::format_double(volume) << ','
        << evtmargin::detail::format_double(open_interest) << ','
        << evtmargin::detail::format_double(long_liq) << ','
        << evtmargin::detail::format_double(short_liq) << '\n';
    open = close;
  }
}

/// Fresh directory under the build tree for one test's outputs.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "evtmargin_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
