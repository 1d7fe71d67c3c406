#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtmargin/types.hpp"

namespace evtmargin {

struct PricePoint {
  std::int64_t timestamp_ms;  // UTC epoch milliseconds
  double price;               // USD per contract unit, > 0
};

/// Ordered, gap-free quote prices at one sampling frequency.
class PriceSeries {
 public:
  PriceSeries(Frequency frequency, std::vector<PricePoint> points, std::size_t filled_gaps = 0)
      : frequency_(frequency), points_(std::move(points)), filled_gaps_(filled_gaps) {
    const std::int64_t step = interval_ms(frequency_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!(points_[i].price > 0.0))
        throw std::invalid_argument("price series: non-positive price at index " +
                                    std::to_string(i));
      if (i > 0 && points_[i].timestamp_ms - points_[i - 1].timestamp_ms != step)
        throw std::invalid_argument("price series: timestamps not spaced by one " +
                                    std::string(to_string(frequency_)) + " interval at index " +
                                    std::to_string(i));
    }
  }

  Frequency frequency() const { return frequency_; }
  const std::vector<PricePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::size_t filled_gaps() const { return filled_gaps_; }

 private:
  Frequency frequency_;
  std::vector<PricePoint> points_;
  std::size_t filled_gaps_;
};

/// Percentage price changes under one definition, scale applied to the raw
/// fractional change (scale 100 means values are in percent).
class ChangeSeries {
 public:
  ChangeSeries(FuturesKind definition, double scale, std::vector<double> values)
      : definition_(definition), scale_(scale), values_(std::move(values)) {
    if (!(scale_ > 0.0)) throw std::invalid_argument("change series: scale must be positive");
    for (double v : values_) {
      // Standard changes are bounded below by -scale (price cannot go below
      // zero); perpetual changes are bounded above by scale.
      if (definition_ == FuturesKind::Standard && !(v > -scale_))
        throw std::invalid_argument("change series: standard change below -scale");
      if (definition_ == FuturesKind::Perpetual && !(v < scale_))
        throw std::invalid_argument("change series: perpetual change at or above scale");
    }
  }

  FuturesKind definition() const { return definition_; }
  double scale() const { return scale_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  FuturesKind definition_;
  double scale_;
  std::vector<double> values_;
};

struct SummaryStats {
  double min = 0, p25 = 0, median = 0, mean = 0, p75 = 0, max = 0;
  double skewness = 0;  // third standardized central moment; NaN when sd == 0
  double kurtosis = 0;  // raw fourth standardized moment (normal => 3); NaN when sd == 0
  double sd = 0;        // sample standard deviation (n-1)
  std::size_t nobs = 0;
};

enum class GapPolicy { Reject, ForwardFill };

namespace detail {

// days since 1970-01-01 for a civil date (proleptic Gregorian)
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline int parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len) {
  int v = 0;
  if (pos + len > s.size()) return -1;
  for (std::size_t i = pos; i < pos + len; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return -1;
    v = v * 10 + (c - '0');
  }
  return v;
}

/// Parses a UTC timestamp: either integer epoch milliseconds or ISO-8601
/// "YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z]". Throws std::invalid_argument.
inline std::int64_t parse_timestamp(std::string_view s) {
  if (all_digits(s) || (s.size() > 1 && s[0] == '-' && all_digits(s.substr(1)))) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
    throw std::invalid_argument("unparseable epoch timestamp '" + std::string(s) + "'");
  }
  const auto fail = [&]() -> std::int64_t {
    throw std::invalid_argument("unparseable ISO-8601 UTC timestamp '" + std::string(s) + "'");
  };
  if (s.size() < 16) return fail();
  const int year = parse_fixed_int(s, 0, 4);
  const int month = parse_fixed_int(s, 5, 2);
  const int day = parse_fixed_int(s, 8, 2);
  if (year < 0 || month < 1 || month > 12 || day < 1 || s[4] != '-' || s[7] != '-') return fail();
  static constexpr int mdays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  if (day > mdays[month - 1] + (month == 2 && leap ? 1 : 0)) return fail();
  if (s[10] != 'T' && s[10] != ' ') return fail();
  const int hour = parse_fixed_int(s, 11, 2);
  const int minute = parse_fixed_int(s, 14, 2);
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || s[13] != ':') return fail();
  std::size_t pos = 16;
  int second = 0, milli = 0;
  if (pos < s.size() && s[pos] == ':') {
    second = parse_fixed_int(s, pos + 1, 2);
    if (second < 0 || second > 59) return fail();
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      std::size_t fs = pos + 1;
      std::size_t fe = fs;
      while (fe < s.size() && s[fe] >= '0' && s[fe] <= '9') ++fe;
      if (fe == fs) return fail();
      // keep millisecond precision, truncate the rest
      int scale = 100;
      for (std::size_t i = fs; i < fe && i < fs + 3; ++i, scale /= 10) milli += (s[i] - '0') * scale;
      pos = fe;
    }
  }
  if (pos < s.size()) {
    if (s[pos] != 'Z' || pos + 1 != s.size()) return fail();
  }
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  return ((days * 24 + hour) * 60 + minute) * 60'000 + second * 1000 + milli;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline double parse_double_strict(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("unparseable number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// linear interpolation between order statistics (R type 7)
inline double linear_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Loads a `timestamp,price` CSV (ISO-8601 UTC or epoch-millisecond
/// timestamps), sorts rows by time, validates prices and spacing.
/// Gaps are rejected unless `gap_policy` is ForwardFill, in which case the
/// last seen price is carried forward and the fill count is recorded on the
/// returned series.
inline PriceSeries load_price_csv(const std::filesystem::path& path, Frequency frequency,
                                  GapPolicy gap_policy = GapPolicy::Reject) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open price file '" + path.string() + "'");

  struct Row {
    std::int64_t ts;
    double price;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::strip_cr(raw);
    if (line.empty()) continue;
    if (first_content) {
      first_content = false;
      if (line.rfind("timestamp", 0) == 0 || line.rfind("Timestamp", 0) == 0) continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2)
      throw std::invalid_argument("malformed row at line " + std::to_string(line_no) +
                                  ": expected 2 columns, got " + std::to_string(fields.size()));
    Row row{};
    row.line = line_no;
    try {
      row.ts = detail::parse_timestamp(fields[0]);
      row.price = detail::parse_double_strict(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("malformed row at line " + std::to_string(line_no) + ": " +
                                  e.what());
    }
    if (!(row.price > 0.0))
      throw std::invalid_argument("non-positive price at line " + std::to_string(line_no));
    rows.push_back(row);
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ts < b.ts; });

  const std::int64_t step = interval_ms(frequency);
  std::vector<PricePoint> points;
  points.reserve(rows.size());
  std::size_t filled = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      const std::int64_t diff = rows[i].ts - rows[i - 1].ts;
      if (diff == 0)
        throw std::invalid_argument("duplicate timestamp at line " + std::to_string(rows[i].line));
      if (diff % step != 0)
        throw std::invalid_argument("timestamp at line " + std::to_string(rows[i].line) +
                                    " is not aligned to the " +
                                    std::string(to_string(frequency)) + " grid");
      const std::int64_t missing = diff / step - 1;
      if (missing > 0) {
        if (gap_policy == GapPolicy::Reject)
          throw std::invalid_argument("gap of " + std::to_string(missing) +
                                      " missing interval(s) before line " +
                                      std::to_string(rows[i].line) +
                                      " (use forward-fill to permit)");
        for (std::int64_t k = 1; k <= missing; ++k) {
          points.push_back({rows[i - 1].ts + k * step, rows[i - 1].price});
          ++filled;
        }
      }
    }
    points.push_back({rows[i].ts, rows[i].price});
  }
  return PriceSeries(frequency, std::move(points), filled);
}

/// Downsamples by keeping every k-th point, anchored at the first timestamp,
/// where k = target / source. Target must be an integer multiple of the
/// source frequency.
inline PriceSeries resample(const PriceSeries& series, Frequency target) {
  const std::int64_t src = minutes(series.frequency());
  const std::int64_t dst = minutes(target);
  if (dst % src != 0)
    throw std::invalid_argument("resample: " + std::string(to_string(target)) +
                                " is not an integer multiple of " +
                                std::string(to_string(series.frequency())));
  if (series.empty()) throw std::invalid_argument("resample: empty series");
  const auto k = static_cast<std::size_t>(dst / src);
  std::vector<PricePoint> kept;
  kept.reserve(series.size() / k + 1);
  for (std::size_t i = 0; i < series.size(); i += k) kept.push_back(series.points()[i]);
  return PriceSeries(target, std::move(kept), series.filled_gaps());
}

/// Consecutive price changes. Standard: scale*(F_t/F_{t-1} - 1).
/// Perpetual: scale*(1 - F_{t-1}/F_t), the numeraire-free definition whose
/// left tail matches the loss of a long inverse position.
inline ChangeSeries changes(const PriceSeries& series, FuturesKind definition,
                            double scale = 100.0) {
  if (series.size() < 2) throw std::invalid_argument("changes: series too short (need >= 2)");
  if (!(scale > 0.0)) throw std::invalid_argument("changes: scale must be positive");
  std::vector<double> values;
  values.reserve(series.size() - 1);
  const auto& pts = series.points();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double prev = pts[i - 1].price, cur = pts[i].price;
    values.push_back(definition == FuturesKind::Standard ? scale * (cur / prev - 1.0)
                                                         : scale * (1.0 - prev / cur));
  }
  return ChangeSeries(definition, scale, std::move(values));
}

/// Distributional summary. Quantiles use linear interpolation between order
/// statistics; kurtosis is raw (normal => 3); sd uses the n-1 estimator.
/// A constant series yields sd = 0 with NaN skewness/kurtosis.
inline SummaryStats summarize(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("summarize: need at least 2 values");
  const auto n = static_cast<double>(values.size());

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  double mean = 0;
  for (double v : sorted) mean += v;
  mean /= n;

  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : sorted) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double ss = m2;  // sum of squared deviations
  m2 /= n;
  m3 /= n;
  m4 /= n;

  SummaryStats s;
  s.nobs = values.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.p25 = detail::linear_quantile(sorted, 0.25);
  s.median = detail::linear_quantile(sorted, 0.50);
  s.p75 = detail::linear_quantile(sorted, 0.75);
  s.mean = mean;
  s.sd = std::sqrt(ss / (n - 1.0));
  if (m2 > 0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  } else {
    s.sd = 0.0;
    s.skewness = std::numeric_limits<double>::quiet_NaN();
    s.kurtosis = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

inline SummaryStats summarize(const ChangeSeries& changes) {
  return summarize(std::span<const double>(changes.values()));
}

}  // namespace evtmargin
