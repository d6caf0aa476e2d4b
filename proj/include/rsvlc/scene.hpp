#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace rsvlc::scene {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Physical LED / photodiode parameters and drive limits.
///
/// `dc_bias`, `current_min`, `current_max` and `amplitude` share one drive
/// unit; the math never converts between units.
struct LedParams {
  double semi_angle_deg = 60.0;
  double fov_deg = 60.0;
  double pd_area = 1e-4;           // m^2
  double refractive_index = 1.5;
  double responsivity = 0.54;      // A/W
  double led_conversion = 1.0;
  double dc_bias = 2.449489742783178;   // sqrt(6)
  double current_min = 0.0;
  double current_max = 4.898979485566356;  // 2 sqrt(6)
  double amplitude = 2.0;
  double variance = 1.0;
  double noise_power = 1.3121998990192042e-13;  // W, -98.82 dBm

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// min{b - I_L, I_H - b}: the per-LED budget for sum_i A_i |p_{i,n}|.
  double optical_limit() const;
};

struct Scenario {
  std::vector<Point3> led_positions;
  std::vector<Point3> user_centers;
  double user_radius = 0.0;
  LedParams params;
  double total_power = 1.0;

  std::size_t num_leds() const { return led_positions.size(); }
  std::size_t num_users() const { return user_centers.size(); }

  void validate() const;
};

/// Estimated channel of one user plus its bounded-error description.
struct ChannelEstimate {
  Eigen::VectorXd h_hat;
  double v = 0.0;
  Eigen::VectorXd h_upper;
  Eigen::VectorXd h_lower;
};

struct DistanceBounds {
  double d_min = 0.0;
  double d_max = 0.0;
};

double lambertian_order(double semi_angle_deg);
double effective_pd_area(double refractive_index, double fov_deg, double pd_area);

/// LOS gain with the LED facing down and the PD facing up.
double channel_gain(const Point3& led, const Point3& user, const LedParams& params);

/// Gain at normal incidence for a vertical gap `height`; depends only on the gap.
double on_axis_gain(double height, const LedParams& params);

DistanceBounds distance_bounds(const Point3& led, const Point3& user_center, double radius);

/// True channel vector from every LED to a user standing at `user`.
Eigen::VectorXd channel_vector(const Scenario& scenario, const Point3& user);

ChannelEstimate estimate_csit(const Scenario& scenario, std::size_t user_index);
std::vector<ChannelEstimate> estimate_all(const Scenario& scenario);

/// Largest on-axis gain over all LED/user height gaps; the SNR reference.
double reference_gain(const Scenario& scenario);

/// Converts SNR (dB) to an electric budget: P_t = sigma^2 10^{snr/10} / g_ref^2.
double total_power_for_snr(const Scenario& scenario, double snr_db);
double snr_db_for_total_power(const Scenario& scenario, double total_power);

double dbm_to_watts(double dbm);

}  // namespace rsvlc::scene
