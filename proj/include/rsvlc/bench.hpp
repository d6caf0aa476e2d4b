#pragma once

#include "rsvlc/driver.hpp"
#include "rsvlc/rates.hpp"
#include "rsvlc/scene.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rsvlc::bench {

/// Built-in ceiling LED coordinates, LED 1 first.
const std::array<scene::Point3, 9>& table_leds();

inline constexpr double kUserHeight = 1.7;
inline constexpr double kMinUserSeparation = 0.2;

struct SweepSpec {
  std::string axis;  // snr_db | current_min | num_users | num_leds | radius
  std::vector<double> values;
  std::vector<std::string> schemes{"rsma", "sdma"};
  std::uint64_t seed = 1;

  void validate(std::size_t available_users, std::size_t available_leds) const;
};

/// Parsed configuration. The scenario carries the full user list; sweeps over
/// num_users take prefixes of it so user sets are nested.
struct Config {
  scene::Scenario scenario;
  std::optional<double> snr_db;  // when set, overrides total_power at load time
  std::optional<SweepSpec> sweep;
  bool users_placed = false;     // users came from seeded placement
  std::uint64_t placement_seed = 0;
};

/// Parses the sectioned key/value format documented in README.md. Errors name the
/// line and key (std::invalid_argument); invariant violations name the field.
Config parse_config(std::string_view text);
Config load_config_file(const std::filesystem::path& path);
scene::Scenario load_scenario(std::string_view text);

/// Built-in configuration: all nine LEDs, four seeded users, SNR 15 dB.
std::string_view default_config_text();

/// Uniform positions in [0, room_x] x [0, room_y] at `height` with a minimum
/// pairwise separation; deterministic given the seed.
std::vector<scene::Point3> place_users(std::size_t count, std::uint64_t seed, double height, double room_x = 3.0,
                                       double room_y = 3.0, double min_separation = kMinUserSeparation);

/// Applies one sweep coordinate to a copy of the base scenario.
scene::Scenario scenario_at(const Config& cfg, const std::string& axis, double value);

struct ResultRow {
  std::string scheme;
  std::string axis;
  double axis_value = 0.0;
  double mmf_rate = 0.0;
  int outer_iters = 0;
  double rank_gap = 0.0;
  double mc_margin = 0.0;
  double wall_s = 0.0;
  std::string error;  // empty for accepted rows
  // Not written to CSV.
  std::string origin;
  double kkt_residual = 0.0;
};

struct RunOptions {
  std::size_t samples = 1000;
  bool timing = false;  // wall_s is written as 0 otherwise, keeping reruns byte-identical
  driver::DriverConfig driver;
};

std::vector<ResultRow> run_sweep(const Config& cfg, const RunOptions& opts = {});

inline constexpr std::string_view kCsvHeader =
    "scheme,axis,axis_value,mmf_rate_bps_hz,outer_iters,rank_gap,mc_margin,wall_s";

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> parse_csv(std::istream& in);

/// Shortest round-trip decimal text of a double, locale independent.
std::string format_double(double v);
/// `digits` significant digits in general format, locale independent.
std::string format_significant(double v, int digits);

/// Self-contained solution record: estimates, stream model and beams, enough for
/// `validate` to recompute the Monte-Carlo margins.
nlohmann::json solution_to_json(const rates::BeamformingSolution& sol,
                                const std::vector<scene::ChannelEstimate>& estimates, const std::string& scheme);
void solution_from_json(const nlohmann::json& j, rates::BeamformingSolution& sol,
                        std::vector<scene::ChannelEstimate>& estimates);

}  // namespace rsvlc::bench
