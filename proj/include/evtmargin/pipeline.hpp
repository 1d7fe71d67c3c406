#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evtmargin/analytics.hpp"
#include "evtmargin/config.hpp"
#include "evtmargin/detail/hash.hpp"
#include "evtmargin/extremes.hpp"
#include "evtmargin/gev.hpp"
#include "evtmargin/margins.hpp"
#include "evtmargin/timeseries.hpp"
#include "evtmargin/types.hpp"
#include "evtmargin/version.hpp"

namespace evtmargin {

struct CellError {
  FuturesKind kind;
  Frequency frequency;
  Tail tail;
  std::string message;
};

namespace detail {

// shortest round-trip decimal representation; deterministic across runs
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Derives the per-cell RNG stream from the single run seed, so adding cells
/// never perturbs existing ones.
inline std::uint64_t cell_seed(std::uint64_t seed, std::string_view cell_key) {
  return fnv1a64(cell_key, fnv1a64(std::to_string(seed) + "/"));
}

class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file '" + (dir_ / name).string() + "'");
    out << content;
    files_.emplace_back(name, to_hex(fnv1a64(content)));
  }

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace detail

/// Everything derived from the price file for the configured frequencies.
struct PriceArtifacts {
  std::map<margins::MomentKey, SummaryStats> summaries;  // raw fractional units
  std::map<margins::MomentKey, margins::Moments> moments;  // x scale, feeds the normal baseline
  std::map<margins::MomentKey, BlockExtremes> blocks;      // x scale
  std::map<margins::TailKey, gev::Params> fits;
  std::map<margins::TailKey, std::vector<double>> tail_data;  // data each fit used
  std::vector<CellError> failures;
  std::size_t filled_gaps = 0;
};

/// Loads, resamples and summarizes the price file; optionally fits all
/// (kind, frequency, tail) cells. Fit errors are recorded per cell, not
/// thrown, so a partial run can still be reported.
inline PriceArtifacts analyze_prices(const RunConfig& cfg, bool with_fits) {
  if (!std::filesystem::exists(cfg.price_file))
    throw ValidationError("price file '" + cfg.price_file.string() + "' does not exist");
  const PriceSeries base = load_price_csv(cfg.price_file, cfg.price_frequency, cfg.gap_policy);

  PriceArtifacts art;
  art.filled_gaps = base.filled_gaps();
  for (Frequency freq : cfg.frequencies) {
    const PriceSeries series = freq == base.frequency() ? base : resample(base, freq);
    std::size_t block_size = default_block_size(freq);
    if (const auto it = cfg.block_sizes.find(freq); it != cfg.block_sizes.end())
      block_size = it->second;

    for (FuturesKind kind : cfg.futures_kinds) {
      const ChangeSeries raw = changes(series, kind, 1.0);
      const SummaryStats stats = summarize(raw);
      art.summaries[{kind, freq}] = stats;
      art.moments[{kind, freq}] = {stats.mean * cfg.scale, stats.sd * cfg.scale};
      if (!with_fits) continue;

      std::vector<double> scaled(raw.values());
      for (double& v : scaled) v *= cfg.scale;
      try {
        BlockExtremes be = block_extremes(scaled, block_size);
        std::vector<double> negated_minima;
        negated_minima.reserve(be.minima.size());
        for (double m : be.minima) negated_minima.push_back(-m);

        const auto fit_tail = [&](Tail tail, std::vector<double> data) {
          const margins::TailKey key{kind, freq, tail};
          try {
            art.fits[key] = gev::fit(data);
            art.tail_data[key] = std::move(data);
          } catch (const std::exception& e) {
            art.failures.push_back({kind, freq, tail, e.what()});
          }
        };
        fit_tail(Tail::Right, be.maxima);
        fit_tail(Tail::Left, std::move(negated_minima));
        fit_tail(Tail::Common, be.common);
        art.blocks[{kind, freq}] = std::move(be);
      } catch (const std::exception& e) {
        for (Tail t : all_tails) art.failures.push_back({kind, freq, t, e.what()});
      }
    }
  }
  return art;
}

/// Margin table over every (kind, frequency) pair whose three tails fitted;
/// rows come out in panel order regardless of which cells succeeded.
inline margins::MarginTable build_margin_table(const RunConfig& cfg, const PriceArtifacts& art) {
  std::vector<margins::MarginRow> rows;
  for (FuturesKind kind : cfg.futures_kinds) {
    for (Frequency freq : cfg.frequencies) {
      const bool complete =
          art.fits.count({kind, freq, Tail::Right}) && art.fits.count({kind, freq, Tail::Left}) &&
          art.fits.count({kind, freq, Tail::Common});
      if (!complete) continue;
      const std::array<FuturesKind, 1> k{kind};
      const std::array<Frequency, 1> f{freq};
      const auto cell = margins::margin_table(art.fits, art.moments, k, f, cfg.probabilities);
      rows.insert(rows.end(), cell.rows.begin(), cell.rows.end());
    }
  }
  std::sort(rows.begin(), rows.end(), [](const margins::MarginRow& a, const margins::MarginRow& b) {
    if (a.position != b.position) return a.position < b.position;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.frequency != b.frequency) return a.frequency < b.frequency;
    return a.probability > b.probability;
  });
  return {std::move(rows)};
}

// ---------------------------------------------------------------------------
// output rendering
// ---------------------------------------------------------------------------

namespace detail {

inline const char* const table1_row_names[] = {"Min",      "P25",      "Median", "Mean", "P75",
                                               "Max",      "Skewness", "Kurtosis", "S.D.",
                                               "Nobs"};

inline double table1_value(const SummaryStats& s, std::string_view row) {
  if (row == "Min") return s.min;
  if (row == "P25") return s.p25;
  if (row == "Median") return s.median;
  if (row == "Mean") return s.mean;
  if (row == "P75") return s.p75;
  if (row == "Max") return s.max;
  if (row == "Skewness") return s.skewness;
  if (row == "Kurtosis") return s.kurtosis;
  if (row == "S.D.") return s.sd;
  return static_cast<double>(s.nobs);
}

inline std::string csv_table1(const RunConfig& cfg, const PriceArtifacts& art) {
  std::ostringstream os;
  os << "statistic";
  for (FuturesKind k : cfg.futures_kinds)
    for (Frequency f : cfg.frequencies) os << ',' << to_string(k) << '_' << to_string(f);
  os << '\n';
  for (const char* row : table1_row_names) {
    os << row;
    for (FuturesKind k : cfg.futures_kinds) {
      for (Frequency f : cfg.frequencies) {
        const SummaryStats& s = art.summaries.at({k, f});
        if (std::string_view(row) == "Nobs")
          os << ',' << s.nobs;
        else
          os << ',' << format_double(table1_value(s, row));
      }
    }
    os << '\n';
  }
  return os.str();
}

inline std::string json_table1(const RunConfig& cfg, const PriceArtifacts& art) {
  nlohmann::ordered_json root;
  for (FuturesKind k : cfg.futures_kinds) {
    nlohmann::ordered_json per_kind;
    for (Frequency f : cfg.frequencies) {
      const SummaryStats& s = art.summaries.at({k, f});
      nlohmann::ordered_json cell;
      for (const char* row : table1_row_names) {
        if (std::string_view(row) == "Nobs")
          cell[row] = s.nobs;
        else
          cell[row] = table1_value(s, row);
      }
      per_kind[std::string(to_string(f))] = std::move(cell);
    }
    root[std::string(to_string(k))] = std::move(per_kind);
  }
  return root.dump(2) + "\n";
}

inline std::string csv_table2(const RunConfig& cfg, const PriceArtifacts& art) {
  std::ostringstream os;
  os << "kind,frequency,tail,tau,se_tau,sigma,se_sigma,mu,se_mu,n_fit,loglik\n";
  for (Tail tail : all_tails) {
    for (FuturesKind k : cfg.futures_kinds) {
      for (Frequency f : cfg.frequencies) {
        const auto it = art.fits.find({k, f, tail});
        if (it == art.fits.end()) continue;
        const gev::Params& p = it->second;
        os << to_string(k) << ',' << to_string(f) << ',' << to_string(tail) << ','
           << format_double(p.tau) << ',' << format_double(p.se_tau) << ','
           << format_double(p.sigma) << ',' << format_double(p.se_sigma) << ','
           << format_double(p.mu) << ',' << format_double(p.se_mu) << ',' << p.n_fit << ','
           << format_double(p.loglik) << '\n';
      }
    }
  }
  return os.str();
}

inline std::string json_table2(const RunConfig& cfg, const PriceArtifacts& art) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Tail tail : all_tails) {
    for (FuturesKind k : cfg.futures_kinds) {
      for (Frequency f : cfg.frequencies) {
        const auto it = art.fits.find({k, f, tail});
        if (it == art.fits.end()) continue;
        const gev::Params& p = it->second;
        nlohmann::ordered_json row;
        row["kind"] = std::string(to_string(k));
        row["frequency"] = std::string(to_string(f));
        row["tail"] = std::string(to_string(tail));
        row["tau"] = p.tau;
        row["sigma"] = p.sigma;
        row["mu"] = p.mu;
        row["se_tau"] = p.se_tau;
        row["se_sigma"] = p.se_sigma;
        row["se_mu"] = p.se_mu;
        row["n_fit"] = p.n_fit;
        row["loglik"] = p.loglik;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows.dump(2) + "\n";
}

inline std::string csv_table3(const margins::MarginTable& table) {
  std::ostringstream os;
  os << "panel,position,kind,frequency,probability,gev_margin,normal_margin,gev_leverage\n";
  for (const auto& r : table.rows) {
    os << margins::panel_letter(r.position) << ',' << to_string(r.position) << ','
       << to_string(r.kind) << ',' << to_string(r.frequency) << ','
       << format_double(r.probability) << ',' << format_double(r.gev_margin) << ','
       << format_double(r.normal_margin) << ',' << format_double(r.gev_leverage) << '\n';
  }
  return os.str();
}

inline std::string json_table3(const margins::MarginTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["panel"] = std::string(1, margins::panel_letter(r.position));
    row["position"] = std::string(to_string(r.position));
    row["kind"] = std::string(to_string(r.kind));
    row["frequency"] = std::string(to_string(r.frequency));
    row["probability"] = r.probability;
    row["gev_margin"] = r.gev_margin;
    row["normal_margin"] = r.normal_margin;
    row["gev_leverage"] = r.gev_leverage;
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

inline const char* const table4_columns[] = {"r_min",      "r_max",       "long_liq_M",
                                             "short_liq_M", "SI",          "p_long_pct",
                                             "p_short_pct", "L_long",      "L_short"};

inline const analytics::MetricStats& table4_metric(const analytics::AnalyticsSummary& s,
                                                   std::string_view col) {
  if (col == "r_min") return s.r_min;
  if (col == "r_max") return s.r_max;
  if (col == "long_liq_M") return s.long_liq_m;
  if (col == "short_liq_M") return s.short_liq_m;
  if (col == "SI") return s.si;
  if (col == "p_long_pct") return s.p_long_pct;
  if (col == "p_short_pct") return s.p_short_pct;
  if (col == "L_long") return s.lev_long;
  return s.lev_short;
}

inline std::string csv_table4(const analytics::AnalyticsSummary& s) {
  std::ostringstream os;
  os << "statistic";
  for (const char* col : table4_columns) os << ',' << col;
  os << '\n';
  const auto emit = [&](const char* name, auto get) {
    os << name;
    for (const char* col : table4_columns) os << ',' << format_double(get(table4_metric(s, col)));
    os << '\n';
  };
  emit("min", [](const analytics::MetricStats& m) { return m.min; });
  emit("median", [](const analytics::MetricStats& m) { return m.median; });
  emit("mean", [](const analytics::MetricStats& m) { return m.mean; });
  emit("max", [](const analytics::MetricStats& m) { return m.max; });
  os << "Nobs";
  for (std::size_t i = 0; i < std::size(table4_columns); ++i) os << ',' << s.nobs;
  os << '\n';
  return os.str();
}

inline std::string json_table4(const analytics::AnalyticsSummary& s) {
  nlohmann::ordered_json root;
  for (const char* col : table4_columns) {
    const analytics::MetricStats& m = table4_metric(s, col);
    nlohmann::ordered_json stats;
    stats["min"] = m.min;
    stats["median"] = m.median;
    stats["mean"] = m.mean;
    stats["max"] = m.max;
    stats["Nobs"] = s.nobs;
    root[col] = std::move(stats);
  }
  root["at_cap"] = {{"long", s.n_long_at_cap}, {"short", s.n_short_at_cap}};
  return root.dump(2) + "\n";
}

/// Empirical vs fitted CDF point pairs for one fitted tail. Plotting
/// positions i/(m+1).
inline std::string csv_cdf(const std::vector<double>& data, const gev::Params& params) {
  std::vector<double> sorted = data;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream os;
  os << "x,empirical_cdf,fitted_cdf\n";
  const double m = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    os << format_double(sorted[i]) << ','
       << format_double(static_cast<double>(i + 1) / (m + 1.0)) << ','
       << format_double(gev::cdf(params, sorted[i])) << '\n';
  }
  return os.str();
}

inline std::string csv_blocks(const BlockExtremes& be) {
  std::ostringstream os;
  os << "block_index,min,max\n";
  for (std::size_t i = 0; i < be.minima.size(); ++i)
    os << i << ',' << format_double(be.minima[i]) << ',' << format_double(be.maxima[i]) << '\n';
  return os.str();
}

inline std::string csv_liquidation_timeseries(std::span<const analytics::LiquidationDay> days,
                                              double cap) {
  std::ostringstream os;
  os << "date,si,p_long_pct,p_short_pct\n";
  for (const auto& day : days) {
    const auto m = analytics::day_metrics(day, cap);
    os << day.date << ',' << format_double(m.si) << ',' << format_double(m.p_long * 100.0) << ','
       << format_double(m.p_short * 100.0) << '\n';
  }
  return os.str();
}

}  // namespace detail

struct RunReport {
  std::filesystem::path output_dir;
  std::vector<std::string> outputs;
  std::vector<CellError> failures;
  std::string config_hash;
  bool complete = true;
};

/// Runs the whole pipeline: summary statistics, tail fits, margin tables,
/// liquidation analytics (when an OHLCV file is configured), CDF plot data
/// and a manifest. Identical config and inputs produce byte-identical
/// outputs. Cell-level fit errors leave partial outputs plus a failure
/// manifest instead of aborting the run.
inline RunReport run_pipeline(const RunConfig& cfg) {
  const PriceArtifacts art = analyze_prices(cfg, /*with_fits=*/true);
  detail::OutputWriter out(cfg.output_dir);

  out.write("table1.csv", detail::csv_table1(cfg, art));
  out.write("table1.json", detail::json_table1(cfg, art));
  out.write("table2.csv", detail::csv_table2(cfg, art));
  out.write("table2.json", detail::json_table2(cfg, art));

  const margins::MarginTable table = build_margin_table(cfg, art);
  out.write("table3.csv", detail::csv_table3(table));
  out.write("table3.json", detail::json_table3(table));

  for (const auto& [key, data] : art.tail_data) {
    const std::string name = "cdf_" + std::string(to_string(key.kind)) + "_" +
                             std::string(to_string(key.frequency)) + "_" +
                             std::string(to_string(key.tail)) + ".csv";
    out.write(name, detail::csv_cdf(data, art.fits.at(key)));
  }

  if (cfg.dump_blocks) {
    for (const auto& [key, blocks] : art.blocks) {
      const std::string name = "blocks_" + std::string(to_string(key.first)) + "_" +
                               std::string(to_string(key.second)) + ".csv";
      out.write(name, detail::csv_blocks(blocks));
    }
  }

  if (cfg.ohlcv_file) {
    if (!std::filesystem::exists(*cfg.ohlcv_file))
      throw ValidationError("ohlcv file '" + cfg.ohlcv_file->string() + "' does not exist");
    const auto days = analytics::load_liquidation_csv(*cfg.ohlcv_file);
    const auto summary = analytics::analytics_summary(days, cfg.leverage_cap);
    out.write("table4.csv", detail::csv_table4(summary));
    out.write("table4.json", detail::json_table4(summary));
    out.write("liquidation_timeseries.csv",
              detail::csv_liquidation_timeseries(days, cfg.leverage_cap));
  }

  RunReport report;
  report.output_dir = out.dir();
  report.failures = art.failures;
  report.config_hash = config_hash(cfg);
  report.complete = art.failures.empty();

  nlohmann::ordered_json manifest;
  manifest["library"] = library_name;
  manifest["version"] = library_version;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = report.config_hash;
  manifest["status"] = report.complete ? "complete" : "partial";
  manifest["filled_gaps"] = art.filled_gaps;
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  for (const auto& [name, hash] : out.files()) {
    outputs.push_back({{"file", name}, {"hash", hash}});
    report.outputs.push_back(name);
  }
  manifest["outputs"] = std::move(outputs);
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& f : art.failures)
    failures.push_back({{"kind", std::string(to_string(f.kind))},
                        {"frequency", std::string(to_string(f.frequency))},
                        {"tail", std::string(to_string(f.tail))},
                        {"error", f.message}});
  manifest["failures"] = std::move(failures);

  std::ofstream mf(cfg.output_dir / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << "\n";
  report.outputs.push_back("manifest.json");
  return report;
}

// ---------------------------------------------------------------------------
// verification
// ---------------------------------------------------------------------------

struct VerifyCell {
  margins::MarginSpec spec;
  double margin = 0;
  double mc_frequency = 0;
  double mc_se = 0;
  double roundtrip_residual = 0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<VerifyCell> cells;
  std::size_t mc_samples = 0;
  bool all_passed = false;
};

/// Re-checks a completed run: for every margin cell, draws block extremes
/// from the stored fit and tests the empirical exceedance of the stored
/// margin against its nominal probability at 3 binomial standard errors;
/// also reports the quantile/CDF roundtrip residual.
inline VerificationReport verify(const RunConfig& cfg) {
  const auto manifest_path = cfg.output_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw ValidationError("no run artifacts: '" + manifest_path.string() +
                          "' not found (run the pipeline first)");
  const auto read_json = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("no run artifacts: cannot open '" + p.string() + "'");
    return nlohmann::json::parse(in);
  };
  const nlohmann::json fits_json = read_json(cfg.output_dir / "table2.json");
  const nlohmann::json margins_json = read_json(cfg.output_dir / "table3.json");

  std::map<margins::TailKey, gev::Params> fits;
  for (const auto& row : fits_json) {
    gev::Params p;
    p.tau = row.at("tau").get<double>();
    p.sigma = row.at("sigma").get<double>();
    p.mu = row.at("mu").get<double>();
    p.n_fit = row.at("n_fit").get<std::size_t>();
    fits[{parse_futures_kind(row.at("kind").get<std::string>()),
          parse_frequency(row.at("frequency").get<std::string>()),
          parse_tail(row.at("tail").get<std::string>())}] = p;
  }

  VerificationReport report;
  report.mc_samples = cfg.mc_samples;
  report.all_passed = true;
  for (const auto& row : margins_json) {
    VerifyCell cell;
    const std::string pos = row.at("position").get<std::string>();
    cell.spec.position = pos == "short"   ? margins::Position::Short
                         : pos == "long" ? margins::Position::Long
                                         : margins::Position::Common;
    cell.spec.futures_kind = parse_futures_kind(row.at("kind").get<std::string>());
    cell.spec.frequency = parse_frequency(row.at("frequency").get<std::string>());
    cell.spec.probability = row.at("probability").get<double>();
    cell.margin = row.at("gev_margin").get<double>();

    const margins::TailKey key{cell.spec.futures_kind, cell.spec.frequency,
                               margins::tail_for(cell.spec.position)};
    const auto it = fits.find(key);
    if (it == fits.end())
      throw ValidationError("no run artifacts: table2.json lacks the fit for a table3.json cell");
    const gev::Params& params = it->second;

    const std::string cell_key = std::string(to_string(cell.spec.futures_kind)) + "/" +
                                 std::string(to_string(cell.spec.frequency)) + "/" + pos + "/" +
                                 detail::format_double(cell.spec.probability);
    const auto mc = margins::monte_carlo_exceedance(params, cell.margin, cfg.mc_samples,
                                                    detail::cell_seed(cfg.seed, cell_key));
    cell.mc_frequency = mc.frequency;
    cell.mc_se = mc.se;
    cell.roundtrip_residual = std::abs(
        margins::margin_call_probability(params, margins::optimal_margin(params,
                                                                          cell.spec.probability)) -
        cell.spec.probability);
    cell.pass = std::abs(mc.frequency - cell.spec.probability) <= 3.0 * mc.se;
    report.all_passed = report.all_passed && cell.pass;
    report.cells.push_back(cell);
  }

  nlohmann::ordered_json doc;
  doc["mc_samples"] = report.mc_samples;
  doc["seed"] = cfg.seed;
  doc["all_passed"] = report.all_passed;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"position", std::string(to_string(c.spec.position))},
                     {"kind", std::string(to_string(c.spec.futures_kind))},
                     {"frequency", std::string(to_string(c.spec.frequency))},
                     {"probability", c.spec.probability},
                     {"margin", c.margin},
                     {"mc_frequency", c.mc_frequency},
                     {"mc_se", c.mc_se},
                     {"roundtrip_residual", c.roundtrip_residual},
                     {"pass", c.pass}});
  }
  doc["cells"] = std::move(cells);
  std::ofstream vf(cfg.output_dir / "verification.json", std::ios::binary);
  vf << doc.dump(2) << "\n";
  return report;
}

}  // namespace evtmargin
