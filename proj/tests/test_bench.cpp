#include "helpers.hpp"
#include "rsvlc/bench.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <stdexcept>

#include <sstream>

using namespace rsvlc;
using doctest::Approx;

namespace {

std::string parse_error(const std::string& text) {
  try {
    bench::parse_config(text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

const char* kSmallSweep = R"([leds]
subset = 1 3

[users]
count = 2
placement_seed = 3
radius = 0.05

[limits]
snr_db = 15

[sweep]
axis = snr_db
values = 10 20
schemes = rsma sdma
)";

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("config errors name the line and the key") {
  const std::string bad_number = parse_error("[leds]\nsubset = 1 2\n[users]\ncenter = 1 1 x\n");
  CHECK(bad_number.find("line 4") != std::string::npos);
  CHECK(bad_number.find("'center'") != std::string::npos);

  const std::string unknown = parse_error("[leds]\nsubset = 1\n\n[limits]\nwattage = 3\n");
  CHECK(unknown.find("line 5") != std::string::npos);
  CHECK(unknown.find("wattage") != std::string::npos);

  CHECK_FALSE(parse_error("[leds]\nsubset = 10\n[users]\ncount = 1\n").empty());
  CHECK(parse_error("[bogus]\nx = 1\n").find("bogus") != std::string::npos);
  const std::string radius = parse_error("[leds]\nsubset = 1\n[users]\ncenter = 1 1 1.7\nradius = -0.1\n");
  CHECK(radius.find("radius") != std::string::npos);
}

TEST_CASE("LED table and defaults") {
  const auto& leds = bench::table_leds();
  CHECK(leds[4].x == 1.5);
  CHECK(leds[4].y == 1.5);
  CHECK(leds[4].z == 4.5);
  const auto cfg = bench::parse_config(bench::default_config_text());
  CHECK(cfg.scenario.num_leds() == 9);
  CHECK(cfg.scenario.num_users() == 4);
  for (const auto& u : cfg.scenario.user_centers) {
    CHECK(u.z == bench::kUserHeight);
  }
  CHECK(cfg.scenario.params.noise_power == scene::LedParams{}.noise_power);
  CHECK(cfg.users_placed);
  REQUIRE(cfg.snr_db);
  CHECK(scene::snr_db_for_total_power(cfg.scenario, cfg.scenario.total_power) == Approx(*cfg.snr_db).epsilon(1e-12));
}

TEST_CASE("user placement is seeded and keeps its separation") {
  const auto a = bench::place_users(8, 7, 1.7);
  const auto b = bench::place_users(8, 7, 1.7);
  const auto c = bench::place_users(8, 8, 1.7);
  REQUIRE(a.size() == 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
    differs = differs || a[i].x != c[i].x;
    CHECK(a[i].x >= 0.0);
    CHECK(a[i].x <= 3.0);
    CHECK(a[i].y >= 0.0);
    CHECK(a[i].y <= 3.0);
    for (std::size_t j = 0; j < i; ++j) {
      CHECK(std::hypot(a[i].x - a[j].x, a[i].y - a[j].y) >= bench::kMinUserSeparation);
    }
  }
  CHECK(differs);
}

TEST_CASE("sweep coordinates") {
  const auto cfg = testing::preset("num_users_6led.cfg");
  const auto s3 = bench::scenario_at(cfg, "num_users", 3);
  CHECK(s3.num_users() == 3);
  CHECK(s3.user_centers[2].x == cfg.scenario.user_centers[2].x);
  const auto r = bench::scenario_at(cfg, "radius", 0.2);
  CHECK(r.user_radius == 0.2);
  const auto snr = bench::scenario_at(cfg, "snr_db", 25.0);
  CHECK(scene::snr_db_for_total_power(snr, snr.total_power) == Approx(25.0).epsilon(1e-12));
  CHECK_THROWS_AS(bench::scenario_at(cfg, "num_users", 100), std::invalid_argument);
}

TEST_CASE("number formatting") {
  CHECK(bench::format_double(0.1) == "0.1");
  CHECK(bench::format_double(1e-13) == "1e-13");
  CHECK(std::stod(bench::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(bench::format_significant(1.23456789, 6) == "1.23457");
  CHECK(bench::format_significant(0.000123456789, 6) == "0.000123457");
}

TEST_CASE("CSV layout and round trip") {
  bench::ResultRow row{"rsma", "snr_db", 15.0, 0.8051234567, 12, 3.2e-8, 0.0125, 0.0, ""};
  std::ostringstream out;
  bench::emit_csv({row}, out);
  const std::string text = out.str();
  CHECK(text == std::string(bench::kCsvHeader) + "\nrsma,snr_db,15,0.805123,12,3.2e-08,0.0125,0\n");
  std::istringstream in(text);
  const auto back = bench::parse_csv(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].scheme == "rsma");
  CHECK(back[0].axis_value == 15.0);
  CHECK(back[0].mmf_rate == 0.805123);
  CHECK(back[0].outer_iters == 12);
  std::istringstream bad("scheme,axis\n");
  CHECK_THROWS_AS(bench::parse_csv(bad), std::invalid_argument);
}

TEST_CASE("sweeps rerun byte for byte") {
  const auto cfg = bench::parse_config(kSmallSweep);
  bench::RunOptions opts;
  opts.samples = 200;
  std::ostringstream a;
  std::ostringstream b;
  const auto rows = bench::run_sweep(cfg, opts);
  bench::emit_csv(rows, a);
  bench::emit_csv(bench::run_sweep(cfg, opts), b);
  CHECK(a.str() == b.str());
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(r.wall_s == 0.0);
    CHECK(r.mc_margin >= -1e-6);
  }
}

TEST_CASE("solution JSON round trip") {
  const auto cfg = bench::parse_config(kSmallSweep);
  const auto pr = driver::make_problem(cfg.scenario);
  const auto sol = driver::run(pr, true, {});
  const nlohmann::json j = bench::solution_to_json(sol, pr.estimates, "rsma");
  rates::BeamformingSolution back;
  std::vector<scene::ChannelEstimate> est;
  bench::solution_from_json(nlohmann::json::parse(j.dump()), back, est);
  CHECK((back.beams.array() == sol.beams.array()).all());
  CHECK((back.common_shares.array() == sol.common_shares.array()).all());
  CHECK(back.mmf_value == sol.mmf_value);
  REQUIRE(est.size() == pr.estimates.size());
  CHECK((est[1].h_hat.array() == pr.estimates[1].h_hat.array()).all());
  CHECK(est[1].v == pr.estimates[1].v);
  const auto r1 = rates::worst_case_validate(pr.estimates, sol, 300, 9);
  const auto r2 = rates::worst_case_validate(est, back, 300, 9);
  CHECK(r1.private_margin == r2.private_margin);
  CHECK(r1.common_margin == r2.common_margin);
}

}
