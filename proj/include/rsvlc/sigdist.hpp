#pragma once

namespace rsvlc::sigdist {

/// Maximum-entropy density on [-A, A] with prescribed zero mean and variance:
///   f(s) = exp(-1 - alpha - beta s - gamma s^2)  for |s| <= A, 0 otherwise.
///
/// `tau = exp(1 + 2(alpha + gamma variance))` is the entropy-power constant that
/// enters both rate lower bounds. Immutable once solved.
struct SignalDistribution {
  double amplitude = 0.0;
  double variance = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
};

struct SolveOptions {
  double variance_tol = 1e-12;  // absolute, scaled by max(1, A^2)
  int max_iterations = 400;
};

/// Solves the normalization / zero-mean / variance system with beta = 0.
/// gamma > 0 below the uniform variance A^2/3, gamma = 0 at it, gamma < 0 above.
/// Throws std::domain_error for variance outside (0, A^2) and std::runtime_error
/// if the root finder stalls.
SignalDistribution solve_distribution(double amplitude, double variance, const SolveOptions& opts = {});

double density(const SignalDistribution& dist, double s);

/// Differential entropy in bits; closed form (1 + alpha + gamma eps) log2(e).
double entropy_bits(const SignalDistribution& dist);

struct Moments {
  double mass = 0.0;
  double mean = 0.0;
  double second = 0.0;
};

/// Quadrature of the solved density (used to verify the three moment equations).
Moments moments(const SignalDistribution& dist);

/// Variance of the (unnormalized) weight exp(-gamma s^2) truncated to [-A, A].
double truncated_variance(double amplitude, double gamma);

/// log of the normalizer Z(gamma) = integral_{-A}^{A} exp(-gamma s^2) ds; exp(1 + alpha) = Z.
double log_normalizer(double amplitude, double gamma);

}  // namespace rsvlc::sigdist
