#pragma once

#include "rsvlc/ipm.hpp"
#include "rsvlc/lifting.hpp"
#include "rsvlc/rates.hpp"
#include "rsvlc/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace rsvlc::driver {

struct DriverConfig {
  double zeta = 1e-4;
  double rho_init = -0.01;
  double rho_growth = 2.0;
  int rho_patience = 5;
  double rho_floor = -16.0;
  double rank_tol = 1e-6;
  int max_outer = 200;
  std::uint64_t seed = 1;
  ipm::SolverConfig solver = default_solver();
  std::ostream* log = nullptr;

  void validate() const;
  static ipm::SolverConfig default_solver();
};

/// Everything the optimizer needs from a scenario, in physical units.
struct Problem {
  std::vector<scene::ChannelEstimate> estimates;
  rates::StreamModel model;
  double amplitude = 2.0;
  double total_power = 1.0;
  double optical_limit = 1.0;
};

Problem make_problem(const scene::Scenario& scenario);

struct StartPoint {
  std::vector<Eigen::MatrixXd> matrices;
  Eigen::VectorXd y_c;
  Eigen::VectorXd y_p;
  std::vector<Eigen::VectorXd> u_max;
};

/// Channel-matched start with 50% margin on both power rows, picked among a few
/// regularized zero-forcing candidates as the one with the best interior t.
StartPoint initialize(const lifting::ProblemData& data);

/// Relative rank gap of each stream; streams carrying at most 1e-6 of the total
/// trace are measured against the total trace.
std::vector<double> relative_rank_gaps(std::span<const Eigen::MatrixXd> p_list);

/// p_i = sqrt(sigma_1) u_1 with the largest-magnitude entry positive, then one
/// global scale s <= 1 restoring the absolute-value optical row and the electric row.
Eigen::MatrixXd extract_beamformers(std::span<const Eigen::MatrixXd> p_list, const Problem& problem,
                                    double* scale_out = nullptr);

/// Start from lifted matrices of a related problem (same stream and LED counts).
StartPoint warm_start(const lifting::ProblemData& data, std::span<const Eigen::MatrixXd> p_list);

/// Solution of a neighbouring problem whose constraint set is contained in this one.
struct WarmStart {
  std::vector<Eigen::MatrixXd> lifted;  // K+1 matrices, N x N
  Eigen::MatrixXd beams;                // N x (K+1)
};

/// Runs the outer loop from the default start and from each warm start, and keeps
/// the best certified solution. Each warm start also offers its beams unchanged,
/// certified against this problem after the feasibility rescale. Warm starts
/// without an interior point are skipped.
rates::BeamformingSolution run(const Problem& problem, bool rate_splitting, const DriverConfig& config,
                               std::span<const WarmStart> warm_starts = {});
rates::BeamformingSolution run_mmf(const scene::Scenario& scenario, const DriverConfig& config = {});
rates::BeamformingSolution run_sdma(const scene::Scenario& scenario, const DriverConfig& config = {});

/// Exhaustive search for one user and at most two LEDs with exact CSIT.
double brute_force_oracle(const scene::Scenario& scenario, int grid_points);

}  // namespace rsvlc::driver
