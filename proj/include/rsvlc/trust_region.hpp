#pragma once

#include <Eigen/Dense>

namespace rsvlc {

struct TrustRegionResult {
  Eigen::VectorXd x;
  double value = 0.0;  // x^T A x + 2 b^T x at the minimizer
};

/// Global minimizer of x^T A x + 2 b^T x over the ball ||x||^2 <= radius_sq.
/// A need not be definite; the hard case is handled explicitly.
TrustRegionResult minimize_on_ball(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double radius_sq);

}  // namespace rsvlc
