#include "rsvlc/trust_region.hpp"

#include <cmath>
#include <algorithm>
#include <stdexcept>

namespace rsvlc {

TrustRegionResult minimize_on_ball(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double radius_sq) {
  const Eigen::Index n = b.size();
  if (a.rows() != n || a.cols() != n) {
    throw std::invalid_argument("minimize_on_ball: dimension mismatch");
  }
  TrustRegionResult out;
  out.x = Eigen::VectorXd::Zero(n);
  if (radius_sq <= 0.0 || n == 0) {
    return out;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd& vec = es.eigenvectors();
  const Eigen::VectorXd bt = vec.transpose() * b;
  const double scale = std::max({1.0, lam.cwiseAbs().maxCoeff(), b.norm()});
  const double lam_min = lam(0);

  auto step_norm_sq = [&](double mu) {
    return (bt.array() / (lam.array() + mu)).square().sum();
  };
  auto value_of = [&](const Eigen::VectorXd& x) { return x.dot(a * x) + 2.0 * b.dot(x); };

  // Interior stationary point of a convex model.
  if (lam_min > 1e-14 * scale && step_norm_sq(0.0) <= radius_sq) {
    const Eigen::VectorXd y = -(bt.array() / lam.array()).matrix();
    out.x = vec * y;
    out.value = value_of(out.x);
    return out;
  }

  // Boundary solution: (A + mu I) x = -b with mu >= max(0, -lam_min), ||x||^2 = r^2.
  const double mu_floor = std::max(0.0, -lam_min);
  const double eps = 1e-13 * scale;
  double lo = mu_floor;
  double hi = mu_floor + b.norm() / std::sqrt(radius_sq) + eps;
  // Hard case: the secular function never reaches r^2 above the floor.
  const bool hard = step_norm_sq(mu_floor + eps) < radius_sq;
  if (!hard) {
    while (step_norm_sq(hi) > radius_sq) {
      hi = 2.0 * hi + eps;
    }
    lo = mu_floor + eps;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (step_norm_sq(mid) > radius_sq) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double mu = hi;
    const Eigen::VectorXd y = -(bt.array() / (lam.array() + mu)).matrix();
    out.x = vec * y;
  } else {
    // Components along the bottom eigenspace are free; fill the ball with them.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    const double tol = 1e-10 * scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (lam(i) - lam_min > tol) {
        y(i) = -bt(i) / (lam(i) - lam_min);
      }
    }
    const double rem = radius_sq - y.squaredNorm();
    y(0) += std::sqrt(std::max(0.0, rem));
    out.x = vec * y;
  }
  out.value = value_of(out.x);
  return out;
}

}  // namespace rsvlc
