#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtmargin/detail/hash.hpp"
#include "evtmargin/timeseries.hpp"
#include "evtmargin/types.hpp"

namespace evtmargin {

/// Raised for configuration and input-validation problems, before any
/// computation starts (CLI exit code 1).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Declarative run configuration. One file drives a whole reproducible run;
/// only --seed and --output-dir may be overridden on the command line.
struct RunConfig {
  std::filesystem::path price_file;
  Frequency price_frequency = Frequency::Min5;  // native sampling of price_file
  std::optional<std::filesystem::path> ohlcv_file;
  std::vector<Frequency> frequencies;                // monitoring frequencies to analyze
  std::map<Frequency, std::size_t> block_sizes;      // per-frequency overrides
  std::vector<double> probabilities{0.1, 0.05, 0.01, 0.001};
  double scale = 100.0;
  std::vector<FuturesKind> futures_kinds{FuturesKind::Standard, FuturesKind::Perpetual};
  double leverage_cap = 100.0;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  GapPolicy gap_policy = GapPolicy::Reject;
  std::size_t mc_samples = 1'000'000;  // used by verify
  bool dump_blocks = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (std::string_view item : split(value, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

/// Normalizes and checks invariants; throws ValidationError. Probabilities
/// are sorted descending and deduplicated.
inline void validate_config(RunConfig& cfg) {
  if (cfg.price_file.empty()) throw ValidationError("config: price_file is required");
  if (cfg.frequencies.empty()) throw ValidationError("config: frequencies must be non-empty");
  if (cfg.futures_kinds.empty()) throw ValidationError("config: futures_kinds must be non-empty");
  if (cfg.probabilities.empty()) throw ValidationError("config: probabilities must be non-empty");
  for (double p : cfg.probabilities)
    if (!(p > 0.0 && p < 1.0))
      throw ValidationError("config: probability " + std::to_string(p) + " outside (0, 1)");
  std::sort(cfg.probabilities.begin(), cfg.probabilities.end(), std::greater<double>());
  cfg.probabilities.erase(std::unique(cfg.probabilities.begin(), cfg.probabilities.end()),
                          cfg.probabilities.end());
  if (!(cfg.scale > 0)) throw ValidationError("config: scale must be positive");
  if (!(cfg.leverage_cap > 1)) throw ValidationError("config: leverage_cap must be > 1");
  if (cfg.mc_samples < 10'000) throw ValidationError("config: mc_samples must be >= 10000");
  if (cfg.output_dir.empty()) throw ValidationError("config: output_dir is required");
  for (Frequency f : cfg.frequencies)
    if (minutes(f) % minutes(cfg.price_frequency) != 0)
      throw ValidationError(std::string("config: frequency ") + std::string(to_string(f)) +
                            " is not a multiple of price_frequency " +
                            std::string(to_string(cfg.price_frequency)));
  for (const auto& [f, n] : cfg.block_sizes)
    if (n < 2)
      throw ValidationError(std::string("config: block size for ") + std::string(to_string(f)) +
                            " must be >= 2");
}

/// Parses `key = value` lines ('#' comments, blank lines ignored). Unknown
/// keys are rejected. Lists are comma separated. Per-frequency block sizes
/// use keys block_size_<freq>, e.g. block_size_5min.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  RunConfig cfg;
  bool have_frequencies = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::strip_cr(raw);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "price_file") {
        cfg.price_file = value;
      } else if (key == "price_frequency") {
        cfg.price_frequency = parse_frequency(value);
      } else if (key == "ohlcv_file") {
        cfg.ohlcv_file = value;
      } else if (key == "frequencies") {
        cfg.frequencies.clear();
        for (const auto& item : detail::split_list(value))
          cfg.frequencies.push_back(parse_frequency(item));
        have_frequencies = true;
      } else if (key == "futures_kinds") {
        cfg.futures_kinds.clear();
        for (const auto& item : detail::split_list(value))
          cfg.futures_kinds.push_back(parse_futures_kind(item));
      } else if (key == "probabilities") {
        cfg.probabilities.clear();
        for (const auto& item : detail::split_list(value))
          cfg.probabilities.push_back(detail::parse_double_strict(item));
      } else if (key == "scale") {
        cfg.scale = detail::parse_double_strict(value);
      } else if (key == "leverage_cap") {
        cfg.leverage_cap = detail::parse_double_strict(value);
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "gap_policy") {
        if (value == "reject")
          cfg.gap_policy = GapPolicy::Reject;
        else if (value == "forward_fill")
          cfg.gap_policy = GapPolicy::ForwardFill;
        else
          throw std::invalid_argument("expected reject or forward_fill");
      } else if (key == "mc_samples") {
        cfg.mc_samples = static_cast<std::size_t>(std::stoull(value));
      } else if (key == "dump_blocks") {
        if (value == "true" || value == "1")
          cfg.dump_blocks = true;
        else if (value == "false" || value == "0")
          cfg.dump_blocks = false;
        else
          throw std::invalid_argument("expected true or false");
      } else if (key.rfind("block_size_", 0) == 0) {
        const Frequency f = parse_frequency(key.substr(11));
        cfg.block_sizes[f] = static_cast<std::size_t>(std::stoull(value));
      } else {
        throw std::invalid_argument("unknown key");
      }
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError("config line " + std::to_string(line_no) + " ('" + key +
                            "'): " + e.what());
    }
  }
  if (!have_frequencies) cfg.frequencies.assign(all_frequencies.begin(), all_frequencies.end());
  return cfg;
}

/// Canonical fingerprint of the effective configuration; identical configs
/// hash identically regardless of formatting or key order in the file.
inline std::string config_hash(const RunConfig& cfg) {
  std::ostringstream os;
  os << "price_file=" << cfg.price_file.string() << '\n'
     << "price_frequency=" << to_string(cfg.price_frequency) << '\n'
     << "ohlcv_file=" << (cfg.ohlcv_file ? cfg.ohlcv_file->string() : "") << '\n';
  os << "frequencies=";
  for (Frequency f : cfg.frequencies) os << to_string(f) << ',';
  os << '\n' << "block_sizes=";
  for (const auto& [f, n] : cfg.block_sizes) os << to_string(f) << ':' << n << ',';
  os << '\n' << "probabilities=";
  for (double p : cfg.probabilities) os << p << ',';
  os << '\n' << "scale=" << cfg.scale << '\n';
  os << "futures_kinds=";
  for (FuturesKind k : cfg.futures_kinds) os << to_string(k) << ',';
  os << '\n'
     << "leverage_cap=" << cfg.leverage_cap << '\n'
     << "seed=" << cfg.seed << '\n'
     << "output_dir=" << cfg.output_dir.string() << '\n'
     << "gap_policy=" << (cfg.gap_policy == GapPolicy::Reject ? "reject" : "forward_fill") << '\n'
     << "mc_samples=" << cfg.mc_samples << '\n'
     << "dump_blocks=" << (cfg.dump_blocks ? "true" : "false") << '\n';
  return detail::to_hex(detail::fnv1a64(os.str()));
}

}  // namespace evtmargin
