#pragma once

#include "rsvlc/ipm.hpp"
#include "rsvlc/rates.hpp"
#include "rsvlc/scene.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace rsvlc::lifting {

using Index = Eigen::Index;

struct Aggregates {
  Eigen::MatrixXd phi;      // sum_i tau_i P_i
  Eigen::MatrixXd phi_bar;  // 2 pi sum_{j>=1} eps_j P_j
  Eigen::MatrixXd q;        // sum_{i>=1} tau_i P_i
  Eigen::MatrixXd q_bar;    // 2 pi sum_{j>=1, j!=k} eps_j P_j
  Eigen::MatrixXd r;        // tau_0 P_0 + Q
  Eigen::MatrixXd r_bar;    // 2 pi eps_0 P_0 + Q_bar
};

/// `user` is 0-based; private stream k sits at index user + 1 of `p_list`.
Aggregates aggregate_matrices(std::span<const Eigen::MatrixXd> p_list, const rates::StreamModel& model,
                              std::size_t user);

struct LinearizationPoint {
  Eigen::VectorXd y_c;
  Eigen::VectorXd y_p;
  std::vector<Eigen::VectorXd> u_max;
  double rho = -0.01;

  void validate(std::size_t num_users, bool has_common) const;
};

/// Tangent of exp at y_prev: exp(y_prev) (1 + y - y_prev).
struct ExpTangent {
  double slope = 1.0;
  double y_prev = 0.0;
  double operator()(double y) const { return slope * (1.0 + y - y_prev); }
};
ExpTangent linearize_exp_lower(double y_prev);

double rank_one_gap(const Eigen::MatrixXd& p);

/// rho * sum_i (Tr P_i - u_i^T P_i u_i); p_list and point.u_max align by stream.
double penalty_terms(std::span<const Eigen::MatrixXd> p_list, const LinearizationPoint& point);

/// Unit dominant eigenvector; the largest-magnitude entry is made positive.
Eigen::VectorXd dominant_eigenvector(const Eigen::MatrixXd& p);

struct LmiScalars {
  double p_c = 0.0;
  double q_c = 0.0;
  double p_p = 0.0;
  double q_p = 0.0;
  double u_c = 0.0;
  double l_c = 0.0;
  double u_p = 0.0;
  double l_p = 0.0;
};

/// The four robust blocks of order N+1 for one user, evaluated numerically:
/// common numerator, common denominator, private numerator, private denominator.
/// `noise` is sigma^2; the blocks use 2 pi sigma^2.
std::array<Eigen::MatrixXd, 4> build_lmis(const Aggregates& agg, const Eigen::VectorXd& h_hat, double v,
                                          double noise, const LmiScalars& s);

/// Channel data rescaled so the largest estimated gain is 1. Rates are invariant:
/// h -> h/g, v -> v/g^2, sigma^2 -> sigma^2/g^2.
struct ProblemData {
  std::vector<Eigen::VectorXd> h_hat;
  std::vector<double> v;
  double noise = 0.0;
  rates::StreamModel model;  // noise_power normalized as well
  double gain_scale = 1.0;
  double amplitude = 2.0;
  double total_power = 1.0;
  double optical_limit = 1.0;
  bool has_common = true;

  std::size_t num_users() const { return h_hat.size(); }
  Index num_leds() const { return h_hat.empty() ? 0 : h_hat.front().size(); }
};

ProblemData normalize(std::span<const scene::ChannelEstimate> estimates, const rates::StreamModel& model,
                      double amplitude, double total_power, double optical_limit, bool has_common);

struct VariableMap {
  std::vector<int> matrix_of_stream;  // -1 for an absent common stream
  Index t = -1;
  std::vector<Index> c, x_c, y_c, x_p, y_p, p_c, q_c, p_p, q_p, u_c, l_c, u_p, l_p;
};

struct ConstraintCounts {
  std::size_t lmis = 0;
  int lmi_order = 0;
  std::size_t psd = 0;
  std::size_t exp_rows = 0;
  std::size_t taylor_rows = 0;
  std::size_t rate_links = 0;
  std::size_t sign_rows = 0;
  std::size_t share_rows = 0;
  std::size_t electric_rows = 0;
  std::size_t optical_rows = 0;
  std::size_t multiplier_rows = 0;
  std::size_t robust_rows = 0;  // scalar robust rows for zero-radius users

  std::size_t linear_rows() const {
    return taylor_rows + rate_links + sign_rows + share_rows + electric_rows + optical_rows + multiplier_rows +
           robust_rows;
  }
};

struct ConvexSubproblem {
  ipm::Program program;
  VariableMap vars;
  ProblemData data;
  LinearizationPoint point;
  ConstraintCounts counts;

  std::vector<Eigen::MatrixXd> matrices(const Eigen::VectorXd& z) const;  // one per stream, zero if absent
  double objective(const Eigen::VectorXd& z) const { return program.c.dot(z); }
};

ConvexSubproblem assemble(const ProblemData& data, const LinearizationPoint& point);

/// log of the worst-case (largest over the error ball) denominators at the given
/// matrices, in the normalized units of `data`.
void worst_case_log_denominators(const ProblemData& data, std::span<const Eigen::MatrixXd> p_list,
                                 Eigen::VectorXd& y_c, Eigen::VectorXd& y_p);

/// Strictly interior assignment with the given matrices: multipliers from the
/// concave dual of each robust block, slacks placed inside their rows. Throws
/// std::domain_error when no interior completion exists.
Eigen::VectorXd complete_start(const ConvexSubproblem& sub, std::span<const Eigen::MatrixXd> p_list);

/// The analytic matrix start delta I used by ipm::strictly_feasible_start.
double isotropic_delta(const ProblemData& data);

}  // namespace rsvlc::lifting
