#include "rsvlc/scene.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rsvlc::scene {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void require(bool ok, const char* field, const char* what) {
  if (!ok) {
    throw std::invalid_argument(std::string(field) + ": " + what);
  }
}

double horizontal_distance(const Point3& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

void LedParams::validate() const {
  require(semi_angle_deg > 0.0 && semi_angle_deg < 90.0, "semi_angle_deg", "must lie in (0, 90)");
  require(fov_deg > 0.0 && fov_deg <= 90.0, "fov_deg", "must lie in (0, 90]");
  require(pd_area > 0.0, "pd_area", "must be positive");
  require(refractive_index >= 1.0, "refractive_index", "must be >= 1");
  require(responsivity > 0.0, "responsivity", "must be positive");
  require(led_conversion > 0.0, "led_conversion", "must be positive");
  require(current_min <= dc_bias, "dc_bias", "must be >= current_min");
  require(dc_bias <= current_max, "dc_bias", "must be <= current_max");
  require(amplitude > 0.0, "amplitude", "must be positive");
  require(variance > 0.0 && variance <= amplitude * amplitude, "variance", "must lie in (0, A^2]");
  require(noise_power > 0.0, "noise_power", "must be positive");
}

double LedParams::optical_limit() const {
  return std::min(dc_bias - current_min, current_max - dc_bias);
}

void Scenario::validate() const {
  params.validate();
  require(!led_positions.empty(), "leds", "at least one LED required");
  require(!user_centers.empty(), "users", "at least one user required");
  require(user_radius >= 0.0, "user_radius", "must be >= 0");
  require(total_power > 0.0, "total_power", "must be positive");
  const double plane = user_centers.front().z;
  for (const auto& u : user_centers) {
    require(u.z == plane, "users", "all users must share the receiving plane height");
  }
  for (const auto& led : led_positions) {
    require(led.z > plane, "leds", "every LED must be above the receiving plane");
  }
}

double lambertian_order(double semi_angle_deg) {
  if (!(semi_angle_deg > 0.0 && semi_angle_deg < 90.0)) {
    throw std::domain_error("lambertian_order: semi-angle must lie in (0, 90) degrees");
  }
  return -std::log(2.0) / std::log(std::cos(semi_angle_deg * kDegToRad));
}

double effective_pd_area(double refractive_index, double fov_deg, double pd_area) {
  if (!(fov_deg > 0.0 && fov_deg <= 90.0)) {
    throw std::domain_error("effective_pd_area: FOV must lie in (0, 90] degrees");
  }
  if (refractive_index < 1.0 || pd_area <= 0.0) {
    throw std::domain_error("effective_pd_area: need n_r >= 1 and A_PD > 0");
  }
  const double s = std::sin(fov_deg * kDegToRad);
  return refractive_index * refractive_index / (s * s) * pd_area;
}

double channel_gain(const Point3& led, const Point3& user, const LedParams& params) {
  const double dz = led.z - user.z;
  if (!(dz > 0.0)) {
    throw std::invalid_argument("channel_gain: LED must be above the user");
  }
  const double d = std::sqrt(dz * dz + std::pow(horizontal_distance(led, user), 2));
  const double cos_angle = dz / d;  // radiance and incidence angles coincide
  // |psi| <= FOV  <=>  cos(psi) >= cos(FOV); compare angles to avoid cos rounding at 90 deg
  if (std::acos(std::min(1.0, cos_angle)) > params.fov_deg * kDegToRad) {
    return 0.0;
  }
  const double l = lambertian_order(params.semi_angle_deg);
  const double area = effective_pd_area(params.refractive_index, params.fov_deg, params.pd_area);
  return (l + 1.0) * params.responsivity * params.led_conversion * area /
         (2.0 * std::numbers::pi * d * d) * std::pow(cos_angle, l) * cos_angle;
}

double on_axis_gain(double height, const LedParams& params) {
  return channel_gain(Point3{0.0, 0.0, height}, Point3{0.0, 0.0, 0.0}, params);
}

DistanceBounds distance_bounds(const Point3& led, const Point3& user_center, double radius) {
  const double dz = led.z - user_center.z;
  if (!(dz > 0.0) || radius < 0.0) {
    throw std::invalid_argument("distance_bounds: need LED above the user and radius >= 0");
  }
  const double dxy = horizontal_distance(led, user_center);
  DistanceBounds out;
  // LED footprint inside the activity disk: the user can stand right below it.
  out.d_min = dxy <= radius ? dz : std::hypot(dxy - radius, dz);
  out.d_max = std::hypot(dxy + radius, dz);
  return out;
}

Eigen::VectorXd channel_vector(const Scenario& scenario, const Point3& user) {
  Eigen::VectorXd h(static_cast<Eigen::Index>(scenario.num_leds()));
  for (std::size_t n = 0; n < scenario.num_leds(); ++n) {
    h(static_cast<Eigen::Index>(n)) = channel_gain(scenario.led_positions[n], user, scenario.params);
  }
  return h;
}

namespace {

// Gain for a user at horizontal offset `dxy` from the LED footprint; the gain
// depends on position only through the LED-user distance.
double gain_at_distance(double d, double dz, const LedParams& params) {
  const double dxy = std::sqrt(std::max(0.0, d * d - dz * dz));
  return channel_gain(Point3{0.0, 0.0, dz}, Point3{dxy, 0.0, 0.0}, params);
}

}  // namespace

ChannelEstimate estimate_csit(const Scenario& scenario, std::size_t user_index) {
  if (user_index >= scenario.num_users()) {
    throw std::out_of_range("estimate_csit: user index out of range");
  }
  const auto n_leds = static_cast<Eigen::Index>(scenario.num_leds());
  const Point3& center = scenario.user_centers[user_index];
  ChannelEstimate est;
  est.h_upper.resize(n_leds);
  est.h_lower.resize(n_leds);
  for (Eigen::Index n = 0; n < n_leds; ++n) {
    const Point3& led = scenario.led_positions[static_cast<std::size_t>(n)];
    const double dz = led.z - center.z;
    if (scenario.user_radius == 0.0) {
      const double h = channel_gain(led, center, scenario.params);
      est.h_upper(n) = h;
      est.h_lower(n) = h;
      continue;
    }
    const DistanceBounds db = distance_bounds(led, center, scenario.user_radius);
    // gain is nonincreasing in distance (cos = dz/d and the FOV cut are both monotone)
    est.h_upper(n) = gain_at_distance(db.d_min, dz, scenario.params);
    est.h_lower(n) = gain_at_distance(db.d_max, dz, scenario.params);
  }
  est.h_hat = 0.5 * (est.h_upper + est.h_lower);
  const Eigen::VectorXd width = est.h_upper - est.h_lower;
  est.v = 0.25 * width.squaredNorm();
  return est;
}

std::vector<ChannelEstimate> estimate_all(const Scenario& scenario) {
  std::vector<ChannelEstimate> out;
  out.reserve(scenario.num_users());
  for (std::size_t k = 0; k < scenario.num_users(); ++k) {
    out.push_back(estimate_csit(scenario, k));
  }
  return out;
}

double reference_gain(const Scenario& scenario) {
  double best = 0.0;
  for (const auto& led : scenario.led_positions) {
    for (const auto& u : scenario.user_centers) {
      best = std::max(best, on_axis_gain(led.z - u.z, scenario.params));
    }
  }
  return best;
}

double total_power_for_snr(const Scenario& scenario, double snr_db) {
  const double g = reference_gain(scenario);
  return scenario.params.noise_power * std::pow(10.0, snr_db / 10.0) / (g * g);
}

double snr_db_for_total_power(const Scenario& scenario, double total_power) {
  const double g = reference_gain(scenario);
  return 10.0 * std::log10(total_power * g * g / scenario.params.noise_power);
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace rsvlc::scene
