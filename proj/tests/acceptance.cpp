// Acceptance gates. One PASS/FAIL line per gate; exit status 1 if any gate fails.
// Usage: rsvlc_acceptance [csv_dir]

#include "rsvlc/bench.hpp"
#include "rsvlc/driver.hpp"
#include "rsvlc/ipm.hpp"
#include "rsvlc/sigdist.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rsvlc;

namespace {

// Tolerances.
constexpr double kMonotoneCccp = 1e-9;
constexpr int kMaxOuter = 30;
constexpr double kMaxSeconds = 300.0;
constexpr double kRankGap = 1e-6;
constexpr std::size_t kSamples = 1000;
constexpr double kMargin = -1e-6;
constexpr double kContainment = 1e-6;
constexpr double kOverloadedGain = 0.10;
constexpr double kSaturation = 0.01;
constexpr double kOracle = 0.02;
constexpr int kOracleGeometries = 10;
constexpr int kOracleGrid = 128;
constexpr double kUniform = 1e-10;
constexpr double kMoments = 1e-8;
constexpr double kEntropyBits = 1e-2;
constexpr double kTauIdentity = 1e-8;
constexpr double kSolverGate = 1e-7;
constexpr double kKkt = 1e-6;
constexpr double kSweepSlack = 1e-9;

const std::vector<std::string> kSweeps = {"snr_6led_4user", "overloaded_6led_8user", "current_min_6led_4user",
                                          "num_users_6led",      "num_leds_3user",             "radius_6led_4user"};

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass) {
    ++failures;
  }
}

std::string fmt(double v) { return bench::format_significant(v, 6); }

bench::Config preset(const std::string& name) {
  return bench::load_config_file(std::string(RSVLC_CONFIG_DIR) + "/" + name + ".cfg");
}

struct SweepResult {
  std::string name;
  std::vector<bench::ResultRow> rows;    // in memory, full precision
  std::vector<bench::ResultRow> parsed;  // read back from the emitted CSV
};

scene::Scenario tiny_scenario(std::mt19937_64& rng, int leds) {
  std::uniform_real_distribution<double> u(0.3, 2.7);
  std::uniform_int_distribution<int> pick(1, 9);
  std::ostringstream cfg;
  const int first = pick(rng);
  cfg << "[leds]\nsubset = " << first;
  if (leds == 2) {
    int second = pick(rng);
    while (second == first) {
      second = pick(rng);
    }
    cfg << ' ' << second;
  }
  cfg << "\n[users]\ncenter = " << u(rng) << ' ' << u(rng) << " 1.7\nradius = 0\n[limits]\nsnr_db = 15\n";
  return bench::parse_config(cfg.str()).scenario;
}

// (scheme, value) -> row, for one sweep.
std::map<std::pair<std::string, double>, const bench::ResultRow*> index_rows(const std::vector<bench::ResultRow>& rows) {
  std::map<std::pair<std::string, double>, const bench::ResultRow*> m;
  for (const auto& r : rows) {
    m[{r.scheme, r.axis_value}] = &r;
  }
  return m;
}

void gate_cccp(double& worst_kkt) {
  const auto cfg = preset("convergence_4led_4user");
  const auto t0 = std::chrono::steady_clock::now();
  const auto sol = driver::run_mmf(cfg.scenario);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& tr = sol.diagnostics.trace;
  double worst_drop = 0.0;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    worst_drop = std::max(worst_drop, tr[i - 1].objective - tr[i].objective);
  }
  worst_kkt = std::max(worst_kkt, sol.diagnostics.max_kkt_residual);
  const bool pass = sol.diagnostics.origin == "cccp" && sol.diagnostics.converged && worst_drop <= kMonotoneCccp &&
                    sol.diagnostics.outer_iterations <= kMaxOuter && secs <= kMaxSeconds;
  report(pass, "monotone_cccp",
         "convergence preset origin " + sol.diagnostics.origin + ", " + std::to_string(sol.diagnostics.outer_iterations) +
             " outer iterations (cap " + std::to_string(kMaxOuter) + "), largest objective drop " + fmt(worst_drop) +
             " (tol " + fmt(kMonotoneCccp) + "), converged " + (sol.diagnostics.converged ? "yes" : "no") + ", " +
             fmt(secs) + " s, t = " + fmt(sol.mmf_value));
}

void gate_oracle(double& worst_kkt) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int bad = 0;
  for (int g = 0; g < kOracleGeometries; ++g) {
    const auto sc = tiny_scenario(rng, 1 + g % 2);
    const double oracle = driver::brute_force_oracle(sc, kOracleGrid);
    for (const bool rs : {true, false}) {
      const auto sol = rs ? driver::run_mmf(sc) : driver::run_sdma(sc);
      worst_kkt = std::max(worst_kkt, sol.diagnostics.max_kkt_residual);
      const double rel = std::abs(sol.mmf_value - oracle) / oracle;
      worst = std::max(worst, rel);
      bad += rel > kOracle ? 1 : 0;
    }
  }
  report(bad == 0, "oracle_equivalence",
         std::to_string(kOracleGeometries) + " geometries x {rsma, sdma}, worst relative difference " + fmt(worst) +
             " (tol " + fmt(kOracle) + ")");
}

void gate_distribution() {
  const double a = 2.0;
  const auto uni = sigdist::solve_distribution(a, a * a / 3.0);
  const double tau_uni = 4.0 * a * a / std::numbers::e;
  bool pass = std::abs(uni.gamma) <= kUniform && std::abs(uni.tau - tau_uni) <= kUniform * tau_uni;
  double worst_moment = 0.0;
  double worst_entropy = 0.0;
  double worst_tau = 0.0;
  std::mt19937_64 rng(99);
  for (double eps : {0.3, 1.0, 2.0, 3.2}) {
    const auto d = sigdist::solve_distribution(a, eps);
    const auto m = sigdist::moments(d);
    worst_moment = std::max({worst_moment, std::abs(m.mass - 1.0), std::abs(m.mean), std::abs(m.second - eps)});
    const double h = sigdist::entropy_bits(d);
    worst_tau = std::max(worst_tau, std::abs(std::pow(2.0, 2.0 * h) / std::numbers::e - d.tau) / d.tau);
    // Rejection sampling from the density, then -mean log2 f.
    const double fmax = std::max(sigdist::density(d, 0.0), sigdist::density(d, a));
    std::uniform_real_distribution<double> us(-a, a);
    std::uniform_real_distribution<double> uy(0.0, fmax);
    double acc = 0.0;
    int n = 0;
    while (n < 200000) {
      const double s = us(rng);
      const double f = sigdist::density(d, s);
      if (uy(rng) <= f) {
        acc -= std::log2(f);
        ++n;
      }
    }
    worst_entropy = std::max(worst_entropy, std::abs(acc / n - h));
  }
  pass = pass && worst_moment <= kMoments && worst_entropy <= kEntropyBits && worst_tau <= kTauIdentity;
  report(pass, "distribution_solver",
         "uniform gamma " + fmt(uni.gamma) + ", tau " + fmt(uni.tau) + " vs 4A^2/e " + fmt(tau_uni) +
             "; moment error " + fmt(worst_moment) + " (tol " + fmt(kMoments) + "); Monte-Carlo entropy error " +
             fmt(worst_entropy) + " bits (tol " + fmt(kEntropyBits) + "); tau identity " + fmt(worst_tau));
}

bool solver_unit_gates(std::string& detail) {
  ipm::SolverConfig cfg;
  cfg.duality_gap_tol = 1e-9;
  ipm::Program sdp;
  sdp.num_vars = 1;
  sdp.c = Eigen::VectorXd::Ones(1);
  ipm::LmiBlock b;
  b.dim = 2;
  b.f0 = Eigen::Vector2d(3.0, 1.0).asDiagonal();
  b.scalar_terms.emplace_back(0, -Eigen::MatrixXd::Identity(2, 2));
  sdp.lmis.push_back(b);
  const auto s1 = ipm::solve(sdp, Eigen::VectorXd::Zero(1), cfg);

  ipm::Program ex;
  ex.num_vars = 2;
  ex.c = Eigen::Vector2d(1.0, 0.0);
  ex.exps.push_back({0, 1});
  ex.rows.push_back({{{1, -1.0}}, 7.0});
  const auto s2 = ipm::solve(ex, Eigen::Vector2d(0.0, 3.0), cfg);

  const double e1 = std::abs(s1.z(0) - 1.0);
  const double e2 = std::abs(s2.z(0) - std::log(7.0));
  const auto k1 = ipm::kkt_residuals(sdp, s1);
  const auto k2 = ipm::kkt_residuals(ex, s2);
  detail = "diag(3,1) error " + fmt(e1) + ", exp row error " + fmt(e2) + " (tol " + fmt(kSolverGate) + ")";
  return s1.status == ipm::Status::optimal && s2.status == ipm::Status::optimal && e1 <= kSolverGate &&
         e2 <= kSolverGate && k1.ok(kKkt) && k2.ok(kKkt);
}

bool monotone(const std::vector<bench::ResultRow>& rows, const std::string& scheme, bool increasing,
              std::string& where) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) {
    if (r.scheme == scheme) {
      pts.emplace_back(r.axis_value, r.mmf_rate);
    }
  }
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double step = pts[i].second - pts[i - 1].second;
    if (!(increasing ? step >= -kSweepSlack : step <= kSweepSlack)) {
      where = scheme + " " + fmt(pts[i - 1].first) + " -> " + fmt(pts[i].first) + ": " + fmt(pts[i - 1].second) +
              " -> " + fmt(pts[i].second);
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : "acceptance_csv";
  std::filesystem::create_directories(out_dir);
  double worst_kkt = 0.0;

  gate_cccp(worst_kkt);

  std::vector<SweepResult> sweeps;
  for (const auto& name : kSweeps) {
    SweepResult s;
    s.name = name;
    bench::RunOptions opts;
    opts.samples = kSamples;
    s.rows = bench::run_sweep(preset(name), opts);
    const auto path = out_dir / (name + ".csv");
    bench::emit_csv(s.rows, path);
    std::ifstream in(path);
    s.parsed = bench::parse_csv(in);
    for (const auto& r : s.rows) {
      worst_kkt = std::max(worst_kkt, r.kkt_residual);
    }
    std::cout << "  swept " << name << " (" << s.rows.size() << " rows) -> " << path.string() << std::endl;
    sweeps.push_back(std::move(s));
  }

  {
    double worst = 0.0;
    std::size_t errors = 0;
    std::string where;
    for (const auto& s : sweeps) {
      for (const auto& r : s.rows) {
        if (!r.error.empty() || !std::isfinite(r.rank_gap)) {
          ++errors;
          continue;
        }
        if (r.rank_gap > worst) {
          worst = r.rank_gap;
          where = s.name + " " + r.scheme + " " + r.axis + "=" + fmt(r.axis_value);
        }
      }
    }
    report(errors == 0 && worst <= kRankGap, "rank_one_recovery",
           "largest relative rank gap " + fmt(worst) + (where.empty() ? "" : " at " + where) + " (tol " +
               fmt(kRankGap) + "), rows with errors " + std::to_string(errors));
  }

  {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t rows = 0;
    std::string where;
    for (const auto& s : sweeps) {
      for (const auto& r : s.rows) {
        ++rows;
        if (!(r.mc_margin >= worst)) {
          worst = std::isfinite(r.mc_margin) ? r.mc_margin : -std::numeric_limits<double>::infinity();
          where = s.name + " " + r.scheme + " " + r.axis + "=" + fmt(r.axis_value);
        }
      }
    }
    report(worst >= kMargin, "robustness_certificate",
           std::to_string(rows) + " solutions, " + std::to_string(kSamples) + " samples each, smallest margin " +
               fmt(worst) + " at " + where + " (tol " + fmt(kMargin) + ")");
  }

  {
    double worst = std::numeric_limits<double>::infinity();
    std::string where;
    std::size_t pairs = 0;
    double overloaded_gain = -1.0;
    for (const auto& s : sweeps) {
      const auto idx = index_rows(s.rows);
      for (const auto& [key, row] : idx) {
        if (key.first != "rsma") {
          continue;
        }
        const auto it = idx.find({"sdma", key.second});
        if (it == idx.end()) {
          continue;
        }
        ++pairs;
        const double diff = row->mmf_rate - it->second->mmf_rate;
        if (diff < worst) {
          worst = diff;
          where = s.name + " " + row->axis + "=" + fmt(key.second);
        }
        if (s.name == "overloaded_6led_8user" && key.second == 15.0) {
          overloaded_gain = row->mmf_rate / it->second->mmf_rate - 1.0;
        }
      }
    }
    report(worst >= -kContainment && overloaded_gain >= kOverloadedGain, "rsma_contains_sdma",
           std::to_string(pairs) + " pairs, smallest RSMA - SDMA " + fmt(worst) + " at " + where + " (tol -" +
               fmt(kContainment) + "); 8-user 15 dB gain " + fmt(100.0 * overloaded_gain) + "% (need " +
               fmt(100.0 * kOverloadedGain) + "%)");
  }

  {
    const auto idx = index_rows(sweeps[0].rows);
    bool pass = true;
    std::string detail;
    for (const std::string scheme : {"rsma", "sdma"}) {
      const auto a = idx.find({scheme, 40.0});
      const auto b = idx.find({scheme, 50.0});
      if (a == idx.end() || b == idx.end()) {
        pass = false;
        detail += scheme + " missing 40/50 dB rows; ";
        continue;
      }
      const double rel = (b->second->mmf_rate - a->second->mmf_rate) / a->second->mmf_rate;
      pass = pass && rel < kSaturation;
      detail += scheme + " 40 dB " + fmt(a->second->mmf_rate) + ", 50 dB " + fmt(b->second->mmf_rate) + " (+" +
                fmt(100.0 * rel) + "%); ";
    }
    report(pass, "high_snr_saturation", detail + "tol " + fmt(100.0 * kSaturation) + "%");
  }

  gate_oracle(worst_kkt);
  gate_distribution();

  {
    std::string detail;
    const bool unit = solver_unit_gates(detail);
    report(unit && worst_kkt <= kKkt, "subproblem_solver",
           detail + "; largest scaled KKT residual over all subproblem solves " + fmt(worst_kkt) + " (tol " +
               fmt(kKkt) + ")");
  }

  {
    bool pass = true;
    std::string detail;
    const std::vector<std::pair<std::string, bool>> checks = {
        {"snr_6led_4user", true}, {"radius_6led_4user", false}, {"num_users_6led", false}};
    for (const auto& [name, increasing] : checks) {
      const auto it = std::find_if(sweeps.begin(), sweeps.end(), [&](const SweepResult& s) { return s.name == name; });
      for (const std::string scheme : {"rsma", "sdma"}) {
        std::string where;
        if (!monotone(it->parsed, scheme, increasing, where)) {
          pass = false;
          detail += name + " " + where + "; ";
        }
      }
    }
    report(pass, "monotone_sweeps",
           pass ? std::string("snr_db nondecreasing, radius and num_users nonincreasing in the emitted CSVs")
                : detail);
  }

  std::cout << (failures == 0 ? "all gates passed" : std::to_string(failures) + " gate(s) failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
