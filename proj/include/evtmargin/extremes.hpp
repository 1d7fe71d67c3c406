#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "evtmargin/timeseries.hpp"
#include "evtmargin/types.hpp"

namespace evtmargin {

/// Per-block extremes of a change series plus the pooled common set
/// {-min_1, ..., -min_m, max_1, ..., max_m} used for common-tail fitting.
struct BlockExtremes {
  std::size_t block_size = 0;
  std::vector<double> maxima;
  std::vector<double> minima;
  std::vector<double> common;
};

/// Splits `values` into consecutive non-overlapping blocks of `block_size`
/// observations (trailing remainder discarded) and extracts the extremes.
inline BlockExtremes block_extremes(std::span<const double> values, std::size_t block_size) {
  if (block_size < 2) throw std::invalid_argument("block_extremes: block size must be >= 2");
  if (values.size() < block_size)
    throw std::invalid_argument("block_extremes: series shorter than one block");

  const std::size_t n_blocks = values.size() / block_size;
  BlockExtremes out;
  out.block_size = block_size;
  out.maxima.reserve(n_blocks);
  out.minima.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto block = values.subspan(b * block_size, block_size);
    const auto [lo, hi] = std::minmax_element(block.begin(), block.end());
    out.minima.push_back(*lo);
    out.maxima.push_back(*hi);
  }
  out.common.reserve(2 * n_blocks);
  for (double m : out.minima) out.common.push_back(-m);
  out.common.insert(out.common.end(), out.maxima.begin(), out.maxima.end());
  return out;
}

inline BlockExtremes block_extremes(const ChangeSeries& changes, std::size_t block_size) {
  return block_extremes(std::span<const double>(changes.values()), block_size);
}

/// Default block length per monitoring frequency: blocks span 8h of 5min
/// observations, 24h of 30min, 48h of 1h, 5 days of 8h and 10 days of 1d.
inline std::size_t default_block_size(Frequency f) {
  switch (f) {
    case Frequency::Min5: return 96;
    case Frequency::Min30: return 48;
    case Frequency::Hour1: return 48;
    case Frequency::Hour8: return 15;
    case Frequency::Day1: return 10;
  }
  throw std::invalid_argument("default_block_size: unsupported frequency");
}

}  // namespace evtmargin
