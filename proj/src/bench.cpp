#include "rsvlc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rsvlc::bench {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) {
      ++i;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') {
      ++j;
    }
    if (j > i) {
      out.push_back(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

[[noreturn]] void fail(int line, std::string_view key, const std::string& what) {
  std::ostringstream msg;
  msg << "config line " << line << ": '" << key << "' " << what;
  throw std::invalid_argument(msg.str());
}

double parse_number(std::string_view tok, int line, std::string_view key) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    fail(line, key, "expects a number, got '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<double> parse_numbers(std::string_view value, int line, std::string_view key) {
  std::vector<double> out;
  for (auto tok : split_ws(value)) {
    out.push_back(parse_number(tok, line, key));
  }
  if (out.empty()) {
    fail(line, key, "needs at least one value");
  }
  return out;
}

double parse_single(std::string_view value, int line, std::string_view key) {
  const auto v = parse_numbers(value, line, key);
  if (v.size() != 1) {
    fail(line, key, "expects exactly one value");
  }
  return v[0];
}

std::uint64_t parse_u64(std::string_view value, int line, std::string_view key) {
  const auto t = trim(value);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    fail(line, key, "expects a non-negative integer");
  }
  return v;
}

constexpr std::string_view kDefaultConfig = R"(# Nine ceiling LEDs, four users placed uniformly at random.
[leds]
subset = 1 2 3 4 5 6 7 8 9

[users]
count = 4
placement_seed = 1
radius = 0.05

[limits]
snr_db = 15
)";

}  // namespace

const std::array<scene::Point3, 9>& table_leds() {
  static const std::array<scene::Point3, 9> leds{{{0.5, 2.5, 4.5},
                                                 {2.5, 0.5, 4.5},
                                                 {0.5, 0.5, 4.5},
                                                 {2.5, 2.5, 4.5},
                                                 {1.5, 1.5, 4.5},
                                                 {0.5, 1.5, 4.5},
                                                 {2.5, 1.5, 4.5},
                                                 {1.5, 0.5, 4.5},
                                                 {1.5, 2.5, 4.5}}};
  return leds;
}

std::string_view default_config_text() { return kDefaultConfig; }

std::vector<scene::Point3> place_users(std::size_t count, std::uint64_t seed, double height, double room_x,
                                       double room_y, double min_separation) {
  if (!(room_x > 0.0) || !(room_y > 0.0)) {
    throw std::invalid_argument("place_users: room dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, room_x);
  std::uniform_real_distribution<double> uy(0.0, room_y);
  std::vector<scene::Point3> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100000 * (count + 1)) {
      throw std::runtime_error("place_users: cannot satisfy the minimum separation");
    }
    const scene::Point3 p{ux(rng), uy(rng), height};
    const bool clear = std::all_of(out.begin(), out.end(), [&](const scene::Point3& q) {
      return std::hypot(p.x - q.x, p.y - q.y) >= min_separation;
    });
    if (clear) {
      out.push_back(p);
    }
  }
  return out;
}

void SweepSpec::validate(std::size_t available_users, std::size_t available_leds) const {
  static const std::vector<std::string> axes = {"snr_db", "current_min", "num_users", "num_leds", "radius"};
  if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
    throw std::invalid_argument("sweep.axis: unknown axis '" + axis + "'");
  }
  if (values.empty()) {
    throw std::invalid_argument("sweep.values: empty");
  }
  if (!std::is_sorted(values.begin(), values.end())) {
    throw std::invalid_argument("sweep.values: must be sorted ascending");
  }
  if (schemes.empty()) {
    throw std::invalid_argument("sweep.schemes: empty");
  }
  for (const auto& s : schemes) {
    if (s != "rsma" && s != "sdma") {
      throw std::invalid_argument("sweep.schemes: unknown scheme '" + s + "'");
    }
  }
  for (double v : values) {
    if (axis == "num_users" && (v < 1 || v != std::floor(v) || v > static_cast<double>(available_users))) {
      throw std::invalid_argument("sweep.values: num_users must be integers within the configured users");
    }
    if (axis == "num_leds" && (v < 1 || v != std::floor(v) || v > static_cast<double>(available_leds))) {
      throw std::invalid_argument("sweep.values: num_leds must be integers within the configured LEDs");
    }
    if (axis == "radius" && v < 0.0) {
      throw std::invalid_argument("sweep.values: radius must be >= 0");
    }
  }
}

Config parse_config(std::string_view text) {
  Config cfg;
  scene::Scenario& sc = cfg.scenario;
  std::string section;
  std::vector<scene::Point3> leds;
  std::optional<std::vector<double>> subset;
  std::vector<scene::Point3> centers;
  std::optional<std::size_t> count;
  double height = kUserHeight;
  double room_x = 3.0;
  double room_y = 3.0;
  std::optional<double> total_power;
  std::optional<double> i_min;
  std::optional<double> i_max;
  std::optional<double> bias;
  SweepSpec sweep;
  bool has_sweep = false;
  std::vector<int> center_lines;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find_first_of("#;"); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    const auto line = trim(raw);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(line_no, line, "is a malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "leds" && section != "users" && section != "params" && section != "limits" &&
          section != "sweep") {
        fail(line_no, section, "is not a known section");
      }
      if (section == "sweep") {
        has_sweep = true;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(line_no, line, "is not a key = value pair");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (section.empty()) {
      fail(line_no, key, "appears before any section");
    }
    auto unknown = [&] { fail(line_no, key, "is not a key of [" + section + "]"); };

    if (section == "leds") {
      if (key == "led") {
        const auto v = parse_numbers(value, line_no, key);
        if (v.size() != 3) {
          fail(line_no, key, "expects x y z");
        }
        leds.push_back({v[0], v[1], v[2]});
      } else if (key == "subset") {
        subset = parse_numbers(value, line_no, key);
        for (double id : *subset) {
          if (id < 1 || id > 9 || id != std::floor(id)) {
            fail(line_no, key, "entries must be LED numbers 1..9");
          }
        }
      } else {
        unknown();
      }
    } else if (section == "users") {
      if (key == "center") {
        const auto v = parse_numbers(value, line_no, key);
        if (v.size() != 2 && v.size() != 3) {
          fail(line_no, key, "expects x y [z]");
        }
        centers.push_back({v[0], v[1], v.size() == 3 ? v[2] : std::numeric_limits<double>::quiet_NaN()});
      } else if (key == "count") {
        count = static_cast<std::size_t>(parse_u64(value, line_no, key));
      } else if (key == "placement_seed") {
        cfg.placement_seed = parse_u64(value, line_no, key);
      } else if (key == "radius") {
        sc.user_radius = parse_single(value, line_no, key);
      } else if (key == "height") {
        height = parse_single(value, line_no, key);
      } else if (key == "room") {
        const auto v = parse_numbers(value, line_no, key);
        if (v.size() != 2) {
          fail(line_no, key, "expects x y");
        }
        room_x = v[0];
        room_y = v[1];
      } else {
        unknown();
      }
    } else if (section == "params") {
      auto& p = sc.params;
      const double v = parse_single(value, line_no, key);
      if (key == "semi_angle_deg") {
        p.semi_angle_deg = v;
      } else if (key == "fov_deg") {
        p.fov_deg = v;
      } else if (key == "pd_area") {
        p.pd_area = v;
      } else if (key == "refractive_index") {
        p.refractive_index = v;
      } else if (key == "responsivity") {
        p.responsivity = v;
      } else if (key == "led_conversion") {
        p.led_conversion = v;
      } else if (key == "amplitude") {
        p.amplitude = v;
      } else if (key == "variance") {
        p.variance = v;
      } else if (key == "noise_dbm") {
        p.noise_power = scene::dbm_to_watts(v);
      } else if (key == "noise_power") {
        p.noise_power = v;
      } else {
        unknown();
      }
    } else if (section == "limits") {
      const double v = parse_single(value, line_no, key);
      if (key == "snr_db") {
        cfg.snr_db = v;
      } else if (key == "total_power") {
        total_power = v;
      } else if (key == "current_min") {
        i_min = v;
      } else if (key == "current_max") {
        i_max = v;
      } else if (key == "dc_bias") {
        bias = v;
      } else {
        unknown();
      }
    } else if (section == "sweep") {
      if (key == "axis") {
        sweep.axis = std::string(value);
      } else if (key == "values") {
        sweep.values = parse_numbers(value, line_no, key);
      } else if (key == "schemes") {
        sweep.schemes.clear();
        for (auto tok : split_ws(value)) {
          sweep.schemes.emplace_back(tok);
        }
      } else if (key == "seed") {
        sweep.seed = parse_u64(value, line_no, key);
      } else {
        unknown();
      }
    }
  }

  // LEDs: explicit coordinates win over a subset of the built-in table; default is all nine.
  if (!leds.empty()) {
    sc.led_positions = leds;
  } else if (subset) {
    for (double id : *subset) {
      sc.led_positions.push_back(table_leds()[static_cast<std::size_t>(id) - 1]);
    }
  } else {
    sc.led_positions.assign(table_leds().begin(), table_leds().end());
  }

  if (!centers.empty()) {
    for (auto& c : centers) {
      if (std::isnan(c.z)) {
        c.z = height;
      }
    }
    sc.user_centers = centers;
  } else if (count) {
    sc.user_centers = place_users(*count, cfg.placement_seed, height, room_x, room_y);
    cfg.users_placed = true;
  } else {
    throw std::invalid_argument("users: give center lines or a count");
  }

  auto& p = sc.params;
  if (i_min || i_max || bias) {
    if (i_min) {
      p.current_min = *i_min;
    }
    if (i_max) {
      p.current_max = *i_max;
    }
    p.dc_bias = bias ? *bias : 0.5 * (p.current_min + p.current_max);
  }
  if (cfg.snr_db && total_power) {
    throw std::invalid_argument("limits: give snr_db or total_power, not both");
  }
  if (total_power) {
    sc.total_power = *total_power;
  } else {
    if (!cfg.snr_db) {
      cfg.snr_db = 15.0;
    }
    sc.total_power = scene::total_power_for_snr(sc, *cfg.snr_db);
  }
  sc.validate();
  if (has_sweep) {
    sweep.validate(sc.num_users(), sc.num_leds());
    cfg.sweep = sweep;
  }
  return cfg;
}

Config load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

scene::Scenario load_scenario(std::string_view text) { return parse_config(text).scenario; }

scene::Scenario scenario_at(const Config& cfg, const std::string& axis, double value) {
  scene::Scenario sc = cfg.scenario;
  std::optional<double> snr = cfg.snr_db;
  if (axis == "snr_db") {
    snr = value;
  } else if (axis == "current_min") {
    // The DC bias stays put; the window slides with I_H = I_L + 5.
    sc.params.current_min = value;
    sc.params.current_max = value + 5.0;
  } else if (axis == "num_users") {
    sc.user_centers.resize(static_cast<std::size_t>(value));
  } else if (axis == "num_leds") {
    sc.led_positions.resize(static_cast<std::size_t>(value));
  } else if (axis == "radius") {
    sc.user_radius = value;
  } else {
    throw std::invalid_argument("scenario_at: unknown axis '" + axis + "'");
  }
  if (snr) {
    sc.total_power = scene::total_power_for_snr(sc, *snr);
  }
  sc.validate();
  return sc;
}

namespace {

// Drops trailing users or pads new LEDs with zeros; prefixes keep the nesting valid.
driver::WarmStart adapt_warm(const rates::BeamformingSolution& prev, std::size_t streams, Eigen::Index leds) {
  driver::WarmStart w;
  w.beams = Eigen::MatrixXd::Zero(leds, static_cast<Eigen::Index>(streams));
  const auto& p = prev.diagnostics.lifted;
  for (std::size_t i = 0; i < streams; ++i) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(leds, leds);
    if (i < p.size()) {
      const Eigen::Index n = std::min(leds, p[i].rows());
      m.topLeftCorner(n, n) = p[i].topLeftCorner(n, n);
      w.beams.col(static_cast<Eigen::Index>(i)).head(n) = prev.beams.col(static_cast<Eigen::Index>(i)).head(n);
    }
    w.lifted.push_back(std::move(m));
  }
  return w;
}

}  // namespace

std::vector<ResultRow> run_sweep(const Config& cfg, const RunOptions& opts) {
  if (!cfg.sweep) {
    throw std::invalid_argument("run_sweep: configuration has no [sweep] section");
  }
  const SweepSpec& sw = *cfg.sweep;
  // Rows along an axis that only relaxes the constraint set are solved in chains,
  // each row also starting from the previous row's lifted matrices.
  const bool chained = sw.axis != "current_min";
  const bool descending = sw.axis == "radius" || sw.axis == "num_users";
  std::vector<double> order = sw.values;
  std::sort(order.begin(), order.end());
  if (descending) {
    std::reverse(order.begin(), order.end());
  }
  struct Task {
    double value;
    std::string scheme;
    std::size_t row;
  };
  std::vector<std::vector<Task>> chains;
  std::vector<ResultRow> rows(sw.values.size() * sw.schemes.size());
  for (std::size_t si = 0; si < sw.schemes.size(); ++si) {
    std::vector<Task> chain;
    for (double v : order) {
      const auto pos = static_cast<std::size_t>(std::find(sw.values.begin(), sw.values.end(), v) - sw.values.begin());
      chain.push_back({v, sw.schemes[si], pos * sw.schemes.size() + si});
    }
    if (chained) {
      chains.push_back(std::move(chain));
    } else {
      for (auto& t : chain) {
        chains.push_back({t});
      }
    }
  }
  driver::DriverConfig dcfg = opts.driver;
  dcfg.seed = sw.seed;
  dcfg.log = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chains.size()); ++c) {
    std::optional<rates::BeamformingSolution> previous;
    for (const Task& task : chains[static_cast<std::size_t>(c)]) {
      ResultRow& row = rows[task.row];
      row.scheme = task.scheme;
      row.axis = sw.axis;
      row.axis_value = task.value;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const scene::Scenario sc = scenario_at(cfg, sw.axis, task.value);
        const driver::Problem pr = driver::make_problem(sc);
        std::vector<driver::WarmStart> warm;
        if (previous) {
          warm.push_back(adapt_warm(*previous, sc.num_users() + 1, static_cast<Eigen::Index>(sc.num_leds())));
        }
        const rates::BeamformingSolution sol = driver::run(pr, task.scheme == "rsma", dcfg, warm);
        const rates::MarginReport rep = rates::worst_case_validate(pr.estimates, sol, opts.samples, sw.seed);
        row.mmf_rate = sol.mmf_value;
        row.outer_iters = sol.diagnostics.outer_iterations;
        row.rank_gap = *std::max_element(sol.diagnostics.rank_gaps.begin(), sol.diagnostics.rank_gaps.end());
        row.mc_margin = std::min(rep.private_margin, rep.common_margin);
        row.origin = sol.diagnostics.origin;
        row.kkt_residual = sol.diagnostics.max_kkt_residual;
        if (sol.diagnostics.hit_iteration_cap) {
          row.error = "outer iteration cap reached";
        }
        previous = sol;
      } catch (const std::exception& e) {
        row.mmf_rate = std::numeric_limits<double>::quiet_NaN();
        row.rank_gap = std::numeric_limits<double>::quiet_NaN();
        row.mc_margin = std::numeric_limits<double>::quiet_NaN();
        row.error = e.what();
        previous.reset();
      }
      row.wall_s = opts.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    }
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_significant(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  if (rows.empty()) {
    throw std::invalid_argument("emit_csv: no rows");
  }
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.scheme << ',' << r.axis << ',' << format_double(r.axis_value) << ','
        << format_significant(r.mmf_rate, 6) << ',' << r.outer_iters << ',' << format_significant(r.rank_gap, 6)
        << ',' << format_significant(r.mc_margin, 6) << ',' << format_significant(r.wall_s, 6) << '\n';
  }
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_csv: cannot write '" + path.string() + "'");
  }
  emit_csv(rows, out);
  if (!out) {
    throw std::runtime_error("emit_csv: write failed for '" + path.string() + "'");
  }
  const bool any_error = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); });
  auto side = path;
  side += ".errors";
  if (any_error) {
    std::ofstream err(side, std::ios::binary);
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        err << r.scheme << ',' << r.axis << ',' << format_double(r.axis_value) << ": " << r.error << '\n';
      }
    }
  } else {
    std::error_code ec;
    std::filesystem::remove(side, ec);
  }
}

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("parse_csv: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (f.size() != 8) {
      throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                                  " fields");
    }
    auto num = [&](const std::string& s) {
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) + ": bad number '" + s + "'");
      }
      return v;
    };
    ResultRow r;
    r.scheme = f[0];
    r.axis = f[1];
    r.axis_value = num(f[2]);
    r.mmf_rate = num(f[3]);
    r.outer_iters = static_cast<int>(num(f[4]));
    r.rank_gap = num(f[5]);
    r.mc_margin = num(f[6]);
    r.wall_s = num(f[7]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace rsvlc::bench
