#pragma once

#include <cmath>
#include <random>

namespace rsvlc::rates {

template <class Rng>
Eigen::VectorXd sample_ball(Rng& rng, Eigen::Index dim, double radius_sq) {
  Eigen::VectorXd x(dim);
  if (radius_sq <= 0.0) {
    x.setZero();
    return x;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) {
      x(i) = normal(rng);
    }
    norm = x.norm();
  } while (norm == 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double radius = std::sqrt(radius_sq) * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  return x * (radius / norm);
}

}  // namespace rsvlc::rates
