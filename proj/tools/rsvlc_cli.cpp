#include "rsvlc/bench.hpp"
#include "rsvlc/driver.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

using namespace rsvlc;

namespace {

bench::Config load(const std::string& path) {
  return path.empty() ? bench::parse_config(bench::default_config_text()) : bench::load_config_file(path);
}

void write_users_sidecar(const bench::Config& cfg, const std::string& out) {
  if (!cfg.users_placed || out.empty()) {
    return;
  }
  std::ofstream f(out + ".users", std::ios::binary);
  f << "# placement_seed " << cfg.placement_seed << '\n';
  for (const auto& u : cfg.scenario.user_centers) {
    f << "center = " << bench::format_double(u.x) << ' ' << bench::format_double(u.y) << ' '
      << bench::format_double(u.z) << '\n';
  }
}

int cmd_solve(const std::string& config, const std::string& scheme, const std::string& out, std::uint64_t seed,
              std::size_t samples, bool verbose) {
  const bench::Config cfg = load(config);
  driver::DriverConfig dcfg;
  dcfg.seed = seed;
  if (verbose) {
    dcfg.log = &std::cerr;
  }
  const driver::Problem pr = driver::make_problem(cfg.scenario);
  const rates::BeamformingSolution sol = driver::run(pr, scheme == "rsma", dcfg);
  const rates::MarginReport rep = rates::worst_case_validate(pr.estimates, sol, samples, seed);
  nlohmann::json j = bench::solution_to_json(sol, pr.estimates, scheme);
  j["validation"] = {{"samples", rep.samples},
                     {"seed", seed},
                     {"private_margin", rep.private_margin},
                     {"common_margin", rep.common_margin}};
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    f << j.dump(2) << '\n';
    write_users_sidecar(cfg, out);
  }
  std::cout << "scheme " << scheme << '\n'
            << "mmf_rate_bps_hz " << bench::format_significant(sol.mmf_value, 6) << '\n'
            << "outer_iterations " << sol.diagnostics.outer_iterations
            << (sol.diagnostics.hit_iteration_cap ? " (iteration cap reached)" : "") << '\n'
            << "origin " << sol.diagnostics.origin << '\n'
            << "extraction_scale " << bench::format_significant(sol.diagnostics.extraction_scale, 6) << '\n'
            << "private_margin " << bench::format_significant(rep.private_margin, 6) << '\n'
            << "common_margin " << bench::format_significant(rep.common_margin, 6) << '\n';
  std::cout << "n,t,penalty,max_rank_gap,rho,newton\n";
  for (const auto& r : sol.diagnostics.trace) {
    std::cout << r.iteration << ',' << bench::format_significant(r.t, 10) << ','
              << bench::format_significant(r.penalty, 6) << ',' << bench::format_significant(r.max_rank_gap, 6) << ','
              << bench::format_double(r.rho) << ',' << r.newton_steps << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& out, std::uint64_t seed, bool seed_given,
              std::size_t samples, bool timing) {
  bench::Config cfg = load(config);
  if (!cfg.sweep) {
    std::cerr << "sweep: the configuration has no [sweep] section\n";
    return 2;
  }
  if (seed_given) {
    cfg.sweep->seed = seed;
  }
  bench::RunOptions opts;
  opts.samples = samples;
  opts.timing = timing;
  const auto rows = bench::run_sweep(cfg, opts);
  if (out.empty()) {
    bench::emit_csv(rows, std::cout);
  } else {
    bench::emit_csv(rows, std::filesystem::path(out));
    write_users_sidecar(cfg, out);
  }
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << r.scheme << ' ' << r.axis << '=' << bench::format_double(r.axis_value) << ": " << r.error << '\n';
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_validate(const std::string& solution, std::uint64_t seed, std::size_t samples) {
  std::ifstream f(solution);
  if (!f) {
    std::cerr << "validate: cannot open '" << solution << "'\n";
    return 2;
  }
  const nlohmann::json j = nlohmann::json::parse(f);
  rates::BeamformingSolution sol;
  std::vector<scene::ChannelEstimate> est;
  bench::solution_from_json(j, sol, est);
  const rates::MarginReport rep = rates::worst_case_validate(est, sol, samples, seed);
  std::cout << "samples " << rep.samples << '\n'
            << "private_margin " << bench::format_significant(rep.private_margin, 6) << '\n'
            << "common_margin " << bench::format_significant(rep.common_margin, 6) << '\n';
  const bool ok = rep.private_margin >= -1e-6 && rep.common_margin >= -1e-6;
  std::cout << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

int cmd_oracle(const std::string& config, int grid, bool compare, bool verbose) {
  const bench::Config cfg = load(config);
  const double best = driver::brute_force_oracle(cfg.scenario, grid);
  std::cout << "oracle_rate_bps_hz " << bench::format_significant(best, 6) << '\n';
  if (compare) {
    driver::DriverConfig dcfg;
    if (verbose) {
      dcfg.log = &std::cerr;
    }
    const auto sol = driver::run_mmf(cfg.scenario, dcfg);
    std::cout << "solver_rate_bps_hz " << bench::format_significant(sol.mmf_value, 6) << '\n'
              << "relative_difference " << bench::format_significant((sol.mmf_value - best) / best, 6) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust max-min fair beamforming for multi-LED visible light downlinks"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Scenario configuration file (built-in default when omitted)");
    sub->add_option("--seed", seed, "Seed for the Monte-Carlo validator");
    sub->add_option("--out", out, "Output path");
    sub->add_option("--samples", samples, "Monte-Carlo samples per validation")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "Print the outer-iteration trace to stderr");
  };

  std::string scheme = "rsma";
  auto* solve = app.add_subcommand("solve", "Solve one scenario and print the solution and trace");
  add_common(solve);
  solve->add_option("--scheme", scheme, "rsma or sdma")->check(CLI::IsMember({"rsma", "sdma"}));

  bool timing = false;
  auto* sweep = app.add_subcommand("sweep", "Run the [sweep] section and write CSV");
  add_common(sweep);
  sweep->add_flag("--timing", timing, "Record wall time (breaks byte-identical reruns)");

  std::string solution;
  auto* validate = app.add_subcommand("validate", "Monte-Carlo margins of a saved solution");
  add_common(validate);
  validate->add_option("solution", solution, "Solution JSON written by solve --out")->required();

  int grid = 64;
  bool compare = false;
  auto* oracle = app.add_subcommand("oracle", "Grid search on a one-user, at most two-LED scenario");
  add_common(oracle);
  oracle->add_option("--grid", grid, "Grid points per axis")->check(CLI::Range(2, 4096));
  oracle->add_flag("--compare", compare, "Also run the optimizer and report the difference");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      return cmd_solve(config, scheme, out, seed, samples, verbose);
    }
    if (sweep->parsed()) {
      return cmd_sweep(config, out, seed, sweep->count("--seed") > 0, samples, timing);
    }
    if (validate->parsed()) {
      return cmd_validate(solution, seed, samples);
    }
    if (oracle->parsed()) {
      return cmd_oracle(config, grid, compare, verbose);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
