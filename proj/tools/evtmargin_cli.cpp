// Command-line driver: wires ingestion, tail fitting, margin tables,
// liquidation analytics and Monte Carlo verification into reproducible runs
// from a single config file.
//
// Exit codes: 0 success, 1 validation error, 2 computation error,
// 3 verification failure.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evtmargin/evtmargin.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitComputation = 2;
constexpr int kExitVerification = 3;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

evtmargin::RunConfig load_effective_config(const CliOptions& opts) {
  evtmargin::RunConfig cfg = evtmargin::load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  evtmargin::validate_config(cfg);
  return cfg;
}

void print_failures(const std::vector<evtmargin::CellError>& failures) {
  for (const auto& f : failures)
    std::fprintf(stderr, "cell %s/%s/%s failed: %s\n", std::string(to_string(f.kind)).c_str(),
                 std::string(to_string(f.frequency)).c_str(),
                 std::string(to_string(f.tail)).c_str(), f.message.c_str());
}

void print_summaries(const evtmargin::RunConfig& cfg, const evtmargin::PriceArtifacts& art) {
  for (evtmargin::FuturesKind k : cfg.futures_kinds) {
    for (evtmargin::Frequency f : cfg.frequencies) {
      const auto& s = art.summaries.at({k, f});
      std::printf("%-9s %-5s  n=%-8zu mean=%+.6f sd=%.6f min=%+.4f max=%+.4f skew=%+.2f kurt=%.2f\n",
                  std::string(to_string(k)).c_str(), std::string(to_string(f)).c_str(), s.nobs,
                  s.mean, s.sd, s.min, s.max, s.skewness, s.kurtosis);
    }
  }
}

void print_fits(const evtmargin::PriceArtifacts& art) {
  for (const auto& [key, p] : art.fits)
    std::printf("%-9s %-5s %-6s tau=%.4f (%.4f)  sigma=%.4f (%.4f)  mu=%.4f (%.4f)  n=%zu\n",
                std::string(to_string(key.kind)).c_str(),
                std::string(to_string(key.frequency)).c_str(),
                std::string(to_string(key.tail)).c_str(), p.tau, p.se_tau, p.sigma, p.se_sigma,
                p.mu, p.se_mu, p.n_fit);
}

void print_margins(const evtmargin::margins::MarginTable& table) {
  char last_panel = 0;
  for (const auto& r : table.rows) {
    const char panel = evtmargin::margins::panel_letter(r.position);
    if (panel != last_panel) {
      std::printf("Panel %c: %s position\n", panel,
                  std::string(to_string(r.position)).c_str());
      last_panel = panel;
    }
    if (std::isnan(r.normal_margin))
      std::printf("  %-9s %-5s p=%-6g margin=%6.2f%%  (~%.1fX leverage)\n",
                  std::string(to_string(r.kind)).c_str(),
                  std::string(to_string(r.frequency)).c_str(), r.probability, r.gev_margin,
                  r.gev_leverage);
    else
      std::printf("  %-9s %-5s p=%-6g margin=%6.2f%% (normal %5.2f%%)  (~%.1fX leverage)\n",
                  std::string(to_string(r.kind)).c_str(),
                  std::string(to_string(r.frequency)).c_str(), r.probability, r.gev_margin,
                  r.normal_margin, r.gev_leverage);
  }
}

int cmd_summarize(const evtmargin::RunConfig& cfg) {
  const auto art = evtmargin::analyze_prices(cfg, /*with_fits=*/false);
  evtmargin::detail::OutputWriter out(cfg.output_dir);
  out.write("table1.csv", evtmargin::detail::csv_table1(cfg, art));
  out.write("table1.json", evtmargin::detail::json_table1(cfg, art));
  print_summaries(cfg, art);
  std::printf("wrote %s/table1.{csv,json}\n", cfg.output_dir.string().c_str());
  return kExitOk;
}

int cmd_fit(const evtmargin::RunConfig& cfg) {
  const auto art = evtmargin::analyze_prices(cfg, /*with_fits=*/true);
  evtmargin::detail::OutputWriter out(cfg.output_dir);
  out.write("table2.csv", evtmargin::detail::csv_table2(cfg, art));
  out.write("table2.json", evtmargin::detail::json_table2(cfg, art));
  for (const auto& [key, data] : art.tail_data) {
    const std::string name = "cdf_" + std::string(to_string(key.kind)) + "_" +
                             std::string(to_string(key.frequency)) + "_" +
                             std::string(to_string(key.tail)) + ".csv";
    out.write(name, evtmargin::detail::csv_cdf(data, art.fits.at(key)));
  }
  print_fits(art);
  print_failures(art.failures);
  std::printf("wrote %s/table2.{csv,json} and CDF plot data\n", cfg.output_dir.string().c_str());
  return art.failures.empty() ? kExitOk : kExitComputation;
}

int cmd_margins(const evtmargin::RunConfig& cfg) {
  const auto art = evtmargin::analyze_prices(cfg, /*with_fits=*/true);
  const auto table = evtmargin::build_margin_table(cfg, art);
  evtmargin::detail::OutputWriter out(cfg.output_dir);
  out.write("table2.csv", evtmargin::detail::csv_table2(cfg, art));
  out.write("table2.json", evtmargin::detail::json_table2(cfg, art));
  out.write("table3.csv", evtmargin::detail::csv_table3(table));
  out.write("table3.json", evtmargin::detail::json_table3(table));
  print_margins(table);
  print_failures(art.failures);
  std::printf("wrote %s/table3.{csv,json}\n", cfg.output_dir.string().c_str());
  return art.failures.empty() ? kExitOk : kExitComputation;
}

int cmd_analytics(const evtmargin::RunConfig& cfg) {
  if (!cfg.ohlcv_file)
    throw evtmargin::ValidationError("analytics requires ohlcv_file in the config");
  if (!std::filesystem::exists(*cfg.ohlcv_file))
    throw evtmargin::ValidationError("ohlcv file '" + cfg.ohlcv_file->string() +
                                     "' does not exist");
  const auto days = evtmargin::analytics::load_liquidation_csv(*cfg.ohlcv_file);
  const auto summary = evtmargin::analytics::analytics_summary(days, cfg.leverage_cap);
  evtmargin::detail::OutputWriter out(cfg.output_dir);
  out.write("table4.csv", evtmargin::detail::csv_table4(summary));
  out.write("table4.json", evtmargin::detail::json_table4(summary));
  out.write("liquidation_timeseries.csv",
            evtmargin::detail::csv_liquidation_timeseries(days, cfg.leverage_cap));
  std::printf("%zu days: mean SI=%.2f  p_long=%.2f%%  p_short=%.2f%%  L_long=%.2f  L_short=%.2f\n",
              summary.nobs, summary.si.mean, summary.p_long_pct.mean, summary.p_short_pct.mean,
              summary.lev_long.mean, summary.lev_short.mean);
  std::printf("wrote %s/table4.{csv,json}\n", cfg.output_dir.string().c_str());
  return kExitOk;
}

int cmd_run(const evtmargin::RunConfig& cfg) {
  const auto report = evtmargin::run_pipeline(cfg);
  std::printf("run %s: %zu output file(s) in %s (config %s, seed %llu)\n",
              report.complete ? "complete" : "PARTIAL", report.outputs.size(),
              report.output_dir.string().c_str(), report.config_hash.c_str(),
              static_cast<unsigned long long>(cfg.seed));
  print_failures(report.failures);
  return report.complete ? kExitOk : kExitComputation;
}

int cmd_verify(const evtmargin::RunConfig& cfg) {
  const auto report = evtmargin::verify(cfg);
  for (const auto& c : report.cells)
    std::printf("%-5s %-9s %-5s p=%-6g md=%8.3f  mc=%.6f +/- %.6f  residual=%.2e  %s\n",
                std::string(to_string(c.spec.position)).c_str(),
                std::string(to_string(c.spec.futures_kind)).c_str(),
                std::string(to_string(c.spec.frequency)).c_str(), c.spec.probability, c.margin,
                c.mc_frequency, c.mc_se, c.roundtrip_residual, c.pass ? "pass" : "FAIL");
  std::printf("verification %s (%zu cells, %zu samples each)\n",
              report.all_passed ? "passed" : "FAILED", report.cells.size(), report.mc_samples);
  return report.all_passed ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extreme-value tail fitting and optimal margin toolkit for bitcoin futures"};
  app.set_version_flag("--version", std::string(evtmargin::library_name) + " " +
                                        evtmargin::library_version);
  app.require_subcommand(1);

  CliOptions opts;
  int (*handler)(const evtmargin::RunConfig&) = nullptr;

  const auto add_command = [&](const std::string& name, const std::string& desc,
                               int (*fn)(const evtmargin::RunConfig&)) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->add_option("-c,--config", opts.config_path, "run configuration file")->required();
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--output-dir", opts.output_dir, "override the config output directory");
    cmd->callback([&handler, fn] { handler = fn; });
  };

  add_command("summarize", "distributional summary of price changes (table1)", cmd_summarize);
  add_command("fit", "GEV tail parameter estimation (table2, CDF plot data)", cmd_fit);
  add_command("margins", "optimal margin tables (table3)", cmd_margins);
  add_command("analytics", "liquidation/leverage/speculation summary (table4)", cmd_analytics);
  add_command("run", "full pipeline with manifest", cmd_run);
  add_command("verify", "Monte Carlo verification of a completed run", cmd_verify);

  CLI11_PARSE(app, argc, argv);

  try {
    const evtmargin::RunConfig cfg = load_effective_config(opts);
    return handler(cfg);
  } catch (const evtmargin::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitComputation;
  }
}
