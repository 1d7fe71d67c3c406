#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evtmargin {

/// Supported monitoring/sampling frequencies for futures price series.
enum class Frequency { Min5, Min30, Hour1, Hour8, Day1 };

inline constexpr std::array<Frequency, 5> all_frequencies = {
    Frequency::Min5, Frequency::Min30, Frequency::Hour1, Frequency::Hour8, Frequency::Day1};

constexpr std::int64_t minutes(Frequency f) {
  switch (f) {
    case Frequency::Min5: return 5;
    case Frequency::Min30: return 30;
    case Frequency::Hour1: return 60;
    case Frequency::Hour8: return 480;
    case Frequency::Day1: return 1440;
  }
  return 0;  // unreachable
}

constexpr std::int64_t interval_ms(Frequency f) { return minutes(f) * 60'000; }

constexpr std::string_view to_string(Frequency f) {
  switch (f) {
    case Frequency::Min5: return "5min";
    case Frequency::Min30: return "30min";
    case Frequency::Hour1: return "1h";
    case Frequency::Hour8: return "8h";
    case Frequency::Day1: return "1d";
  }
  return "?";
}

inline Frequency parse_frequency(std::string_view s) {
  for (Frequency f : all_frequencies)
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unsupported frequency '" + std::string(s) +
                              "' (expected 5min, 30min, 1h, 8h or 1d)");
}

/// Contract flavour. It doubles as the price-change definition: standard
/// futures use F_t/F_{t-1} - 1, inverse perpetuals use 1 - F_{t-1}/F_t.
enum class FuturesKind { Standard, Perpetual };

inline constexpr std::array<FuturesKind, 2> all_futures_kinds = {FuturesKind::Standard,
                                                                 FuturesKind::Perpetual};

constexpr std::string_view to_string(FuturesKind k) {
  return k == FuturesKind::Standard ? "standard" : "perpetual";
}

inline FuturesKind parse_futures_kind(std::string_view s) {
  for (FuturesKind k : all_futures_kinds)
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unsupported futures kind '" + std::string(s) +
                              "' (expected standard or perpetual)");
}

/// Position side for payoff and liquidation arithmetic.
enum class Side { Long, Short };

constexpr std::string_view to_string(Side s) { return s == Side::Long ? "long" : "short"; }

/// Which extreme set a distribution was fitted on. Left-tail parameters
/// describe negated block minima, i.e. loss magnitudes of a long position.
enum class Tail { Right, Left, Common };

inline constexpr std::array<Tail, 3> all_tails = {Tail::Right, Tail::Left, Tail::Common};

constexpr std::string_view to_string(Tail t) {
  switch (t) {
    case Tail::Right: return "right";
    case Tail::Left: return "left";
    case Tail::Common: return "common";
  }
  return "?";
}

inline Tail parse_tail(std::string_view s) {
  for (Tail t : all_tails)
    if (s == to_string(t)) return t;
  throw std::invalid_argument("unsupported tail '" + std::string(s) + "'");
}

}  // namespace evtmargin
