#pragma once

#include "rsvlc/scene.hpp"
#include "rsvlc/sigdist.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rsvlc::rates {

/// Per-stream constants that enter the rate bounds. Index 0 is the common stream.
struct StreamModel {
  Eigen::VectorXd tau;
  Eigen::VectorXd variance;
  double noise_power = 0.0;

  std::size_t num_streams() const { return static_cast<std::size_t>(tau.size()); }

  static StreamModel from_distributions(std::span<const sigdist::SignalDistribution> dists, double noise_power);
};

struct IterationRecord {
  int iteration = 0;
  double t = 0.0;
  double penalty = 0.0;          // linearized penalty at the subproblem optimum
  double objective = 0.0;        // t + penalty
  double start_objective = 0.0;  // previous iterate re-evaluated in this subproblem
  double max_rank_gap = 0.0;     // relative
  double rho = 0.0;
  int newton_steps = 0;
  double kkt_residual = 0.0;     // largest KKT residual of the subproblem solve over its scale
};

struct Diagnostics {
  std::vector<IterationRecord> trace;
  std::vector<double> rank_gaps;  // per stream, relative to the stream trace
  double penalty = 0.0;
  double extraction_scale = 1.0;
  double solver_t = 0.0;  // t reported by the last subproblem, before extraction
  bool converged = false;
  bool hit_iteration_cap = false;
  int outer_iterations = 0;
  std::vector<Eigen::MatrixXd> lifted;  // final lifted matrices, physical units
  double max_kkt_residual = 0.0;        // over every subproblem solve of every start tried
  // cccp | warm_cccp | carried (warm-start beams kept) | multicast (common stream only)
  // | no_interior (zero beams: no strictly feasible start exists for the subproblem)
  std::string origin = "cccp";
};

/// Beamformers and rate split. Column 0 of `beams` is the common beam p_0; column k
/// the private beam of user k. Rates are certified worst-case lower bounds.
struct BeamformingSolution {
  Eigen::MatrixXd beams;
  Eigen::VectorXd common_shares;
  double mmf_value = 0.0;
  Eigen::VectorXd per_user_private;  // worst-case R_{k,p}
  Eigen::VectorXd per_user_common;   // worst-case R_{k,c}
  double common_bound = 0.0;         // min_k worst-case R_{k,c}
  StreamModel model;
  bool has_common_stream = true;
  Diagnostics diagnostics;

  std::size_t num_users() const { return static_cast<std::size_t>(beams.cols()) - 1; }
};

struct RateValue {
  double raw = 0.0;
  double clamped = 0.0;
};

RateValue common_rate(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h,
                      const Eigen::MatrixXd& beams, const StreamModel& model);
RateValue private_rate(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h, std::size_t user,
                       const Eigen::MatrixXd& beams, const StreamModel& model);

inline double common_rate_lb(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h,
                             const Eigen::MatrixXd& beams, const StreamModel& model) {
  return common_rate(h_hat, delta_h, beams, model).clamped;
}
inline double private_rate_lb(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h, std::size_t user,
                              const Eigen::MatrixXd& beams, const StreamModel& model) {
  return private_rate(h_hat, delta_h, user, beams, model).clamped;
}

struct WorstCaseRates {
  double common = 0.0;   // clamped
  double private_ = 0.0; // clamped
};

/// Exact worst case over ||dh||^2 <= v of the numerator (min) and denominator (max)
/// of each bound, combined into a conservative rate. Solves trust-region problems.
WorstCaseRates worst_case_rates(const scene::ChannelEstimate& est, std::size_t user,
                                const Eigen::MatrixXd& beams, const StreamModel& model);

struct ShareAllocation {
  Eigen::VectorXd shares;
  double t = 0.0;
};

/// max t  s.t.  sum c <= common_budget, c >= 0, c_k + private_k >= t.
ShareAllocation allocate_common_shares(double common_budget, const Eigen::VectorXd& private_rates);

/// Fills the rate fields of `solution` from worst-case evaluation at its beams.
void certify(BeamformingSolution& solution, std::span<const scene::ChannelEstimate> estimates);

struct MarginReport {
  double private_margin = 0.0;  // min over samples, users of c_k + R_kp - t
  double common_margin = 0.0;   // min over samples, users of R_kc - sum c
  std::size_t samples = 0;
};

/// Uniform sampling of each user's error ball; deterministic given the seed and
/// independent of the thread count. OpenMP over fixed sample chunks.
MarginReport worst_case_validate(std::span<const scene::ChannelEstimate> estimates,
                                 const BeamformingSolution& solution, std::size_t samples, std::uint64_t seed);

/// Serial reference for the parallel validator; same chunking, same result bits.
MarginReport worst_case_validate_serial(std::span<const scene::ChannelEstimate> estimates,
                                        const BeamformingSolution& solution, std::size_t samples,
                                        std::uint64_t seed);

/// Uniform point in the ball ||x||^2 <= radius_sq of dimension `dim`.
template <class Rng>
Eigen::VectorXd sample_ball(Rng& rng, Eigen::Index dim, double radius_sq);

}  // namespace rsvlc::rates

#include "rsvlc/detail/sample_ball.hpp"
