// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each check pins its tolerances in code; nothing is deferred to later
// calibration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evtmargin/evtmargin.hpp"
#include "support/fixtures.hpp"
#include "support/reference_data.hpp"
#include "support/test_rng.hpp"

using namespace evtmargin;
using namespace evtmargin::margins;
using namespace testsupport;

namespace {

int g_failures = 0;

class Criterion {
 public:
  explicit Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void note(const std::string& line) { notes_.push_back(line); }

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed_ = false;
      notes_.push_back("FAILED: " + what);
    }
  }

  void finish(double runtime_limit_s) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (elapsed > runtime_limit_s) {
      passed_ = false;
      notes_.push_back("FAILED: runtime " + std::to_string(elapsed) + "s exceeds " +
                       std::to_string(runtime_limit_s) + "s");
    }
    std::printf("[%s] criterion %d: %s (%.2fs)\n", passed_ ? "PASS" : "FAIL", number_,
                title_.c_str(), elapsed);
    for (const auto& n : notes_) std::printf("         %s\n", n.c_str());
    if (!passed_) ++g_failures;
  }

 private:
  int number_;
  std::string title_;
  std::vector<std::string> notes_;
  bool passed_ = true;
  std::chrono::steady_clock::time_point start_;
};

std::string cell_name(FuturesKind k, Frequency f, Position pos, double p) {
  std::ostringstream os;
  os << to_string(k) << "/" << to_string(f) << "/" << to_string(pos) << "/p=" << p;
  return os.str();
}

// --------------------------------------------------------------------------
// 1. closed-form reproduction of the published margin table
// --------------------------------------------------------------------------
void criterion1() {
  Criterion c(1, "published margins reproduced from published tail parameters (+/-0.05)");
  std::size_t checked = 0, within = 0;
  double worst_consistent = 0;
  for (const auto& rm : ref_margins) {
    const auto params = ref_params(rm.kind, rm.freq, tail_for(rm.pos));
    for (std::size_t j = 0; j < 4; ++j) {
      const double got = optimal_margin(params, ref_probabilities[j]);
      const double dev = std::abs(got - rm.gev[j]);
      ++checked;
      if (dev <= 0.05) {
        ++within;
        worst_consistent = std::max(worst_consistent, dev);
      } else {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s: computed %.4f vs published %.2f (dev %.3f)",
                      cell_name(rm.kind, rm.freq, rm.pos, ref_probabilities[j]).c_str(), got,
                      rm.gev[j], dev);
        c.note(buf);
      }
    }
  }
  // spot anchors
  c.require(std::abs(optimal_margin(ref_params(kPerp, k5m, Tail::Right), 0.001) - 10.54) <= 0.05,
            "perpetual 5min short p=0.001 anchor 10.54");
  c.require(std::abs(optimal_margin(ref_params(kPerp, k1d, Tail::Left), 0.01) - 32.56) <= 0.05,
            "perpetual 1d long p=0.01 anchor 32.56");
  c.require(std::abs(optimal_margin(ref_params(kStd, k1d, Tail::Right), 0.1) - 12.60) <= 0.05,
            "standard 1d short p=0.1 anchor 12.60");

  char buf[200];
  std::snprintf(buf, sizeof(buf), "%zu/%zu cells within +/-0.05; worst consistent dev %.4f",
                within, checked, worst_consistent);
  c.note(buf);
  if (within != checked)
    c.note("the standard/1d/common row of the published margin table cannot be produced from "
           "its published parameters by the closed-form quantile under any sign convention; "
           "see README known issues");
  c.require(within == checked, "all 120 cells within +/-0.05");
  c.finish(1.0);
}

// --------------------------------------------------------------------------
// 2. normal baseline vs an independent high-precision oracle
// --------------------------------------------------------------------------
long double normal_quantile_oracle(long double q) {
  long double lo = -40.0L, hi = 40.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (0.5L * erfcl(-mid / std::sqrt(2.0L)) < q ? lo : hi) = mid;
  }
  return 0.5L * (lo + hi);
}

void criterion2() {
  Criterion c(2, "normal-baseline margins match an independent quantile oracle to 1e-9");
  double worst = 0;
  for (double p = 0.0002; p < 0.9999; p += 0.0043) {
    for (const auto& m : {std::pair{0.0, 1.0}, std::pair{0.14, 4.76}, std::pair{0.35, 4.46}}) {
      const auto z = static_cast<double>(normal_quantile_oracle(1.0L - (long double)p));
      worst = std::max(worst, std::abs(normal_margin(m.first, m.second, p, Side::Short) -
                                       (m.first + m.second * z)));
      worst = std::max(worst, std::abs(normal_margin(m.first, m.second, p, Side::Long) -
                                       (m.second * z - m.first)));
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max |implementation - oracle| = %.2e", worst);
  c.note(buf);
  c.require(worst <= 1e-9, "oracle agreement to 1e-9");

  // documented (not asserted) comparison with the published parentheses:
  // published long/short columns are transposed relative to the stated tail
  // integrals, so the comparison swaps sides
  double worst_doc = 0;
  std::string worst_cell;
  for (const auto& rn : ref_normal_margins) {
    const auto m = ref_moment(rn.kind, rn.freq);
    const Side computed_side = rn.pos == Position::Short ? Side::Long : Side::Short;
    for (std::size_t j = 0; j < 4; ++j) {
      const double got = normal_margin(m.mean, m.sd, ref_probabilities[j], computed_side);
      const double dev = std::abs(got - rn.values[j]);
      if (dev > worst_doc) {
        worst_doc = dev;
        worst_cell = cell_name(rn.kind, rn.freq, rn.pos, ref_probabilities[j]);
      }
    }
  }
  std::snprintf(buf, sizeof(buf),
                "documented: published parentheses reproduced to %.3f (<= 0.35) at %s "
                "after un-transposing long/short", worst_doc, worst_cell.c_str());
  c.note(buf);
  c.finish(1.0);
}

// --------------------------------------------------------------------------
// 3. maximum-likelihood recovery on synthetic draws
// --------------------------------------------------------------------------
void criterion3() {
  Criterion c(3, "MLE recovers known parameters; standard errors shrink ~sqrt(10) per decade");
  const std::array<std::array<double, 3>, 3> truths = {
      {{0.14, 2.57, 4.33}, {0.31, 2.82, 3.81}, {0.38, 0.29, 0.43}}};
  std::uint64_t seed = 31'000;
  for (const auto& t : truths) {
    gev::Params truth;
    truth.tau = t[0];
    truth.sigma = t[1];
    truth.mu = t[2];

    const auto fit_n = [&](std::size_t n) { return gev::fit(gev::sample(truth, n, seed++)); };
    const gev::Params at_1e3 = fit_n(1'000);
    const gev::Params at_1e4 = fit_n(10'000);
    const gev::Params at_1e5 = fit_n(100'000);

    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "truth (%.2f, %.2f, %.2f): n=1e4 estimates (%.4f, %.4f, %.4f)", t[0], t[1],
                  t[2], at_1e4.tau, at_1e4.sigma, at_1e4.mu);
    c.note(buf);
    c.require(std::abs(at_1e4.tau - t[0]) <= 0.03 * std::max(1.0, std::abs(t[0])),
              "tau recovered within 0.03*max(1,|tau|)");
    c.require(std::abs(at_1e4.sigma - t[1]) <= 0.03 * std::max(1.0, std::abs(t[1])),
              "sigma recovered within 0.03*max(1,|sigma|)");
    c.require(std::abs(at_1e4.mu - t[2]) <= 0.03 * std::max(1.0, std::abs(t[2])),
              "mu recovered within 0.03*max(1,|mu|)");

    // per-decade shrink covering the 1,000 -> 100,000 range
    const auto ratios = {at_1e3.se_tau / at_1e4.se_tau,     at_1e4.se_tau / at_1e5.se_tau,
                         at_1e3.se_sigma / at_1e4.se_sigma, at_1e4.se_sigma / at_1e5.se_sigma,
                         at_1e3.se_mu / at_1e4.se_mu,       at_1e4.se_mu / at_1e5.se_mu};
    for (double r : ratios) {
      std::snprintf(buf, sizeof(buf), "se decade ratio %.2f in [2.5, 4.0]", r);
      c.require(r >= 2.5 && r <= 4.0, buf);
    }
  }
  c.finish(30.0);
}

// --------------------------------------------------------------------------
// 4. Monte Carlo validity of the closed-form margins
// --------------------------------------------------------------------------
void criterion4() {
  Criterion c(4, "empirical exceedance of each margin within 3 binomial SE of its probability");
  std::vector<std::pair<std::string, gev::Params>> fixtures;
  for (const auto& f : ref_fits)
    fixtures.emplace_back(std::string(to_string(f.kind)) + "/" + std::string(to_string(f.freq)) +
                              "/" + std::string(to_string(f.tail)),
                          ref_params(f.kind, f.freq, f.tail));
  // plus freshly fitted parameters, so the check also covers this fitter
  std::uint64_t seed = 71'000;
  for (const auto& t : {std::array<double, 3>{0.14, 2.57, 4.33},
                        std::array<double, 3>{0.31, 2.82, 3.81},
                        std::array<double, 3>{0.38, 0.29, 0.43}}) {
    gev::Params truth;
    truth.tau = t[0];
    truth.sigma = t[1];
    truth.mu = t[2];
    fixtures.emplace_back("fitted", gev::fit(gev::sample(truth, 10'000, seed++)));
  }

  std::size_t cells = 0;
  double worst_sigma_distance = 0;
  for (const auto& [name, params] : fixtures) {
    for (double p : ref_probabilities) {
      const double md = optimal_margin(params, p);
      const auto est = monte_carlo_exceedance(params, md, 1'000'000, seed++);
      ++cells;
      const double dist = std::abs(est.frequency - p) / est.se;
      worst_sigma_distance = std::max(worst_sigma_distance, dist);
      if (dist > 3.0) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s p=%g: frequency %.6f is %.2f SE away", name.c_str(),
                      p, est.frequency, dist);
        c.require(false, buf);
      }
    }
  }
  char buf[140];
  std::snprintf(buf, sizeof(buf), "%zu cells x 1e6 samples; worst distance %.2f SE", cells,
                worst_sigma_distance);
  c.note(buf);
  c.finish(60.0);
}

// --------------------------------------------------------------------------
// 5. pipeline property suite
// --------------------------------------------------------------------------
void criterion5() {
  Criterion c(5, "payoff/leverage/block-extreme property suite");
  TestRng rng(5'000);

  bool antisym = true, asym = true;
  for (int i = 0; i < 10'000; ++i) {
    const double pi = rng.uniform(0.5, 1'000.0);
    const double f1 = rng.uniform(10.0, 60'000.0);
    const double f2 = rng.uniform(10.0, 60'000.0);
    antisym = antisym &&
              analytics::payoff(Side::Long, pi, f1, f2) +
                      analytics::payoff(Side::Short, pi, f1, f2) ==
                  0.0;
    const double d = rng.uniform(1e-6, 0.999999);
    asym = asym && std::abs(analytics::payoff(Side::Long, pi, f1, f1 * (1.0 - d))) >
                       std::abs(analytics::payoff(Side::Short, pi, f1, f1 * (1.0 + d)));
  }
  c.require(antisym, "payoff antisymmetry over 10,000 draws");
  c.require(asym, "long-loss dominance over 10,000 draws");

  bool trigger_ok = true, return_ok = true;
  for (int i = 0; i < 10'000; ++i) {
    const double open = rng.uniform(100.0, 50'000.0);
    const double lev = rng.uniform(1.05, 25.0);
    const double low = analytics::trigger_price(Side::Long, open, lev);
    const double high = analytics::trigger_price(Side::Short, open, std::max(lev, 1.1));
    const analytics::LiquidationDay d{"2020-01-01", open, high, low, open, 1.0, 1.0, 0.0, 0.0};
    const auto est = analytics::implied_leverage(d, 1'000.0);
    trigger_ok = trigger_ok && std::abs(est.lev_long - lev) <= 1e-12 * lev * lev + 1e-12 &&
                 std::abs(est.lev_short - std::max(lev, 1.1)) <= 1e-12 * lev * lev + 1e-12;

    const double lev2 = rng.uniform(1.05, 100.0);
    const double r_min = -1.0 / (lev2 + 1.0);
    const double r_max = 1.0 / (lev2 - 1.0);
    return_ok = return_ok && std::abs(-(1.0 + r_min) / r_min - lev2) <= 1e-12 &&
                std::abs((1.0 + r_max) / r_max - lev2) <= 1e-12;
  }
  c.require(trigger_ok, "leverage/trigger roundtrip exact to 1e-12");
  c.require(return_ok, "leverage/return roundtrip exact to 1e-12");

  bool negation_ok = true, brute_ok = true;
  for (int rep = 0; rep < 1'000; ++rep) {
    const auto n = static_cast<std::size_t>(rng.uniform(2.0, 60.0));
    const auto bs = std::max<std::size_t>(2, static_cast<std::size_t>(rng.uniform(2.0, 12.0)));
    if (n < bs) continue;
    std::vector<double> v(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = rng.uniform(-100.0, 100.0);
      neg[i] = -v[i];
    }
    const BlockExtremes a = block_extremes(v, bs);
    const BlockExtremes b = block_extremes(neg, bs);
    for (std::size_t i = 0; i < a.maxima.size(); ++i) {
      negation_ok = negation_ok && b.maxima[i] == -a.minima[i] && b.minima[i] == -a.maxima[i];
      double lo = v[i * bs], hi = v[i * bs];
      for (std::size_t j = i * bs; j < (i + 1) * bs; ++j) {
        lo = std::min(lo, v[j]);
        hi = std::max(hi, v[j]);
      }
      brute_ok = brute_ok && a.maxima[i] == hi && a.minima[i] == lo;
    }
  }
  c.require(negation_ok, "block-extreme negation symmetry over 1,000 series");
  c.require(brute_ok, "brute-force block equivalence over 1,000 series");
  c.finish(10.0);
}

// --------------------------------------------------------------------------
// 6. end-to-end determinism on the bundled synthetic fixture
// --------------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig acceptance_run_config() {
  const auto dir = scratch_dir("acceptance_run");
  write_price_fixture(dir / "prices.csv", 50'000, 20'170'101);
  write_ohlcv_fixture(dir / "ohlcv.csv", 372, 20'200'129);
  RunConfig cfg;
  cfg.price_file = dir / "prices.csv";
  cfg.ohlcv_file = dir / "ohlcv.csv";
  cfg.price_frequency = Frequency::Min5;
  // 1d omitted: 50,000 points give only 17 daily blocks, below the fit floor
  cfg.frequencies = {Frequency::Min5, Frequency::Min30, Frequency::Hour1, Frequency::Hour8};
  cfg.seed = 42;
  cfg.output_dir = dir / "out";
  validate_config(cfg);
  return cfg;
}

void criterion6(const RunConfig& cfg) {
  Criterion c(6, "running the pipeline twice yields byte-identical outputs");
  const RunReport first_report = run_pipeline(cfg);
  c.require(first_report.complete, "first run completes with no cell failures");
  std::map<std::string, std::string> first;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.output_dir))
    first[entry.path().filename().string()] = slurp(entry.path());

  const RunReport second_report = run_pipeline(cfg);
  c.require(second_report.config_hash == first_report.config_hash, "config hashes identical");
  std::size_t compared = 0;
  for (const auto& [name, content] : first) {
    ++compared;
    if (slurp(cfg.output_dir / name) != content)
      c.require(false, "output file '" + name + "' differs between runs");
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "%zu files byte-identical (50,000-point prices, 372-row OHLCV, seed %llu)",
                compared, static_cast<unsigned long long>(cfg.seed));
  c.note(buf);
  c.require(compared >= 10, "runs produced the expected output set");
  c.finish(120.0);
}

// --------------------------------------------------------------------------
// 7. published-layout emission (documented: exact values need original data)
// --------------------------------------------------------------------------
void criterion7(const RunConfig& cfg) {
  Criterion c(7, "tables emitted in the published layout for user-supplied data");
  const std::string t1 = slurp(cfg.output_dir / "table1.csv");
  for (const char* row :
       {"\nMin,", "\nP25,", "\nMedian,", "\nMean,", "\nP75,", "\nMax,", "\nSkewness,",
        "\nKurtosis,", "\nS.D.,", "\nNobs,"})
    c.require(t1.find(row) != std::string::npos,
              std::string("table1 row '") + (row + 1) + "' present");

  const std::string t3 = slurp(cfg.output_dir / "table3.csv");
  c.require(t3.rfind("panel,position,kind,frequency,probability,gev_margin,normal_margin,"
                     "gev_leverage\n", 0) == 0,
            "table3 header");
  c.require(t3.find("A,short,") != std::string::npos, "table3 short panel");
  c.require(t3.find("B,long,") != std::string::npos, "table3 long panel");
  c.require(t3.find("C,common,") != std::string::npos, "table3 common panel");

  const std::string t4 = slurp(cfg.output_dir / "table4.csv");
  c.require(t4.rfind("statistic,r_min,r_max,long_liq_M,short_liq_M,SI,p_long_pct,p_short_pct,"
                     "L_long,L_short\n", 0) == 0,
            "table4 header");
  c.note("documented: the published tables were computed from proprietary BitMEX/Coinalyze "
         "datasets; byte-for-byte value reproduction requires those files, the layouts above "
         "are what the pipeline emits for user-supplied equivalents");
  c.finish(10.0);
}

}  // namespace

int main() {
  std::printf("evtmargin acceptance suite (%s %s)\n", library_name, library_version);
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  const RunConfig cfg = acceptance_run_config();
  criterion6(cfg);
  criterion7(cfg);
  if (g_failures > 0) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
