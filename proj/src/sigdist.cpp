#include "rsvlc/sigdist.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsvlc::sigdist {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr unsigned kMaxDepth = 20;
constexpr double kQuadTol = 1e-15;

// Largest value of -gamma s^2 on [0, A]; subtracting it keeps the integrand <= 1.
double exponent_shift(double amplitude, double gamma) {
  return gamma < 0.0 ? -gamma * amplitude * amplitude : 0.0;
}

template <class F>
double integrate_half(F&& f, double amplitude) {
  // The weights are even; split at A/2 so panels near the endpoint peaks
  // (gamma < 0) are refined independently from the flat center.
  return Kronrod::integrate(f, 0.0, 0.5 * amplitude, kMaxDepth, kQuadTol) +
         Kronrod::integrate(f, 0.5 * amplitude, amplitude, kMaxDepth, kQuadTol);
}

}  // namespace

double log_normalizer(double amplitude, double gamma) {
  if (gamma == 0.0) {
    return std::log(2.0 * amplitude);
  }
  const double shift = exponent_shift(amplitude, gamma);
  const double half = integrate_half([&](double s) { return std::exp(-gamma * s * s - shift); }, amplitude);
  return std::log(2.0 * half) + shift;
}

double truncated_variance(double amplitude, double gamma) {
  if (gamma == 0.0) {
    return amplitude * amplitude / 3.0;
  }
  const double shift = exponent_shift(amplitude, gamma);
  const double z = integrate_half([&](double s) { return std::exp(-gamma * s * s - shift); }, amplitude);
  const double m2 = integrate_half([&](double s) { return s * s * std::exp(-gamma * s * s - shift); }, amplitude);
  return m2 / z;
}

SignalDistribution solve_distribution(double amplitude, double variance, const SolveOptions& opts) {
  if (!(amplitude > 0.0)) {
    throw std::domain_error("solve_distribution: amplitude must be positive");
  }
  const double a2 = amplitude * amplitude;
  if (!(variance > 0.0 && variance < a2)) {
    throw std::domain_error("solve_distribution: variance must lie in (0, A^2)");
  }
  const double tol = opts.variance_tol * std::max(1.0, a2);

  SignalDistribution dist;
  dist.amplitude = amplitude;
  dist.variance = variance;
  dist.beta = 0.0;

  const double uniform_residual = a2 / 3.0 - variance;
  if (std::abs(uniform_residual) <= 1e-15 * a2) {
    dist.gamma = 0.0;
  } else {
    // Var(gamma) is strictly decreasing; grow a bracket on the side the sign dictates.
    const double side = uniform_residual > 0.0 ? 1.0 : -1.0;
    double inner = 0.0;
    double outer = side / a2;
    int guard = 0;
    auto residual = [&](double g) { return truncated_variance(amplitude, g) - variance; };
    while (side * residual(outer) > 0.0) {
      inner = outer;
      outer *= 4.0;
      if (++guard > 200) {
        throw std::runtime_error("solve_distribution: failed to bracket gamma");
      }
    }
    double lo = std::min(inner, outer);
    double hi = std::max(inner, outer);
    double gamma = 0.5 * (lo + hi);
    double res = residual(gamma);
    int it = 0;
    while (std::abs(res) > tol) {
      if (++it > opts.max_iterations || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(gamma)) {
        throw std::runtime_error("solve_distribution: bisection did not reach the variance tolerance");
      }
      if (res > 0.0) {
        lo = gamma;  // variance too large: need larger gamma
      } else {
        hi = gamma;
      }
      gamma = 0.5 * (lo + hi);
      res = residual(gamma);
    }
    dist.gamma = gamma;
  }

  dist.alpha = log_normalizer(amplitude, dist.gamma) - 1.0;
  dist.tau = std::exp(1.0 + 2.0 * (dist.alpha + dist.gamma * variance));
  return dist;
}

double density(const SignalDistribution& dist, double s) {
  if (std::abs(s) > dist.amplitude) {
    return 0.0;
  }
  return std::exp(-1.0 - dist.alpha - dist.beta * s - dist.gamma * s * s);
}

double entropy_bits(const SignalDistribution& dist) {
  return (1.0 + dist.alpha + dist.gamma * dist.variance) * std::numbers::log2e;
}

Moments moments(const SignalDistribution& dist) {
  const double a = dist.amplitude;
  auto f = [&](double s) { return density(dist, s); };
  Moments m;
  m.mass = Kronrod::integrate(f, -a, 0.0, kMaxDepth, kQuadTol) + Kronrod::integrate(f, 0.0, a, kMaxDepth, kQuadTol);
  auto f1 = [&](double s) { return s * density(dist, s); };
  m.mean = Kronrod::integrate(f1, -a, 0.0, kMaxDepth, kQuadTol) + Kronrod::integrate(f1, 0.0, a, kMaxDepth, kQuadTol);
  auto f2 = [&](double s) { return s * s * density(dist, s); };
  m.second = Kronrod::integrate(f2, -a, 0.0, kMaxDepth, kQuadTol) + Kronrod::integrate(f2, 0.0, a, kMaxDepth, kQuadTol);
  return m;
}

}  // namespace rsvlc::sigdist
