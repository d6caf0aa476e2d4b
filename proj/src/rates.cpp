#include "rsvlc/rates.hpp"

#include "rsvlc/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsvlc::rates {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_dims(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h, const Eigen::MatrixXd& beams,
                const StreamModel& model) {
  if (h_hat.size() != delta_h.size() || beams.rows() != h_hat.size()) {
    throw std::invalid_argument("rate: channel and beam dimensions disagree");
  }
  if (static_cast<std::size_t>(beams.cols()) != model.num_streams() || model.variance.size() != model.tau.size()) {
    throw std::invalid_argument("rate: stream count mismatch");
  }
}

RateValue make_rate(double num, double den) {
  RateValue r;
  r.raw = 0.5 * std::log2(num / den);
  r.clamped = std::max(0.0, r.raw);
  return r;
}

}  // namespace

StreamModel StreamModel::from_distributions(std::span<const sigdist::SignalDistribution> dists, double noise_power) {
  StreamModel m;
  m.tau.resize(static_cast<Eigen::Index>(dists.size()));
  m.variance.resize(static_cast<Eigen::Index>(dists.size()));
  for (std::size_t i = 0; i < dists.size(); ++i) {
    m.tau(static_cast<Eigen::Index>(i)) = dists[i].tau;
    m.variance(static_cast<Eigen::Index>(i)) = dists[i].variance;
  }
  m.noise_power = noise_power;
  return m;
}

RateValue common_rate(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h, const Eigen::MatrixXd& beams,
                      const StreamModel& model) {
  check_dims(h_hat, delta_h, beams, model);
  const Eigen::VectorXd g = beams.transpose() * (h_hat + delta_h);
  const Eigen::ArrayXd g2 = g.array().square();
  const double s = kTwoPi * model.noise_power;
  const double num = s + (g2 * model.tau.array()).sum();
  const double den = s + kTwoPi * (g2.tail(g2.size() - 1) * model.variance.tail(g2.size() - 1).array()).sum();
  return make_rate(num, den);
}

RateValue private_rate(const Eigen::VectorXd& h_hat, const Eigen::VectorXd& delta_h, std::size_t user,
                       const Eigen::MatrixXd& beams, const StreamModel& model) {
  check_dims(h_hat, delta_h, beams, model);
  const auto k = static_cast<Eigen::Index>(user) + 1;
  if (k >= beams.cols()) {
    throw std::invalid_argument("private_rate: user index out of range");
  }
  const Eigen::VectorXd g = beams.transpose() * (h_hat + delta_h);
  const double r0 = delta_h.dot(beams.col(0));
  const double s = kTwoPi * model.noise_power;
  double num = s + r0 * r0 * model.tau(0);
  double den = s + kTwoPi * r0 * r0 * model.variance(0);
  for (Eigen::Index j = 1; j < beams.cols(); ++j) {
    num += g(j) * g(j) * model.tau(j);
    if (j != k) {
      den += kTwoPi * g(j) * g(j) * model.variance(j);
    }
  }
  return make_rate(num, den);
}

WorstCaseRates worst_case_rates(const scene::ChannelEstimate& est, std::size_t user, const Eigen::MatrixXd& beams,
                                const StreamModel& model) {
  const Eigen::Index n = beams.rows();
  const auto k = static_cast<Eigen::Index>(user) + 1;
  if (est.h_hat.size() != n || k >= beams.cols()) {
    throw std::invalid_argument("worst_case_rates: dimension mismatch");
  }
  const double s = kTwoPi * model.noise_power;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);      // sum tau_i P_i
  Eigen::MatrixXd phi_bar = Eigen::MatrixXd::Zero(n, n);  // 2 pi sum_{j>=1} eps_j P_j
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);        // sum_{i>=1} tau_i P_i
  Eigen::MatrixXd q_bar = Eigen::MatrixXd::Zero(n, n);    // 2 pi sum_{j!=k, j>=1} eps_j P_j
  for (Eigen::Index i = 0; i < beams.cols(); ++i) {
    const Eigen::MatrixXd p = beams.col(i) * beams.col(i).transpose();
    phi += model.tau(i) * p;
    if (i >= 1) {
      phi_bar += kTwoPi * model.variance(i) * p;
      q += model.tau(i) * p;
      if (i != k) {
        q_bar += kTwoPi * model.variance(i) * p;
      }
    }
  }
  const Eigen::MatrixXd p0 = beams.col(0) * beams.col(0).transpose();
  const Eigen::VectorXd& h = est.h_hat;
  const double v = est.v;

  // (h + d)^T M (h + d) = d^T M d + 2 (M h)^T d + h^T M h
  auto min_quad = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) {
    return minimize_on_ball(a, m * h, v).value + h.dot(m * h);
  };
  auto max_quad = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) {
    return -(minimize_on_ball(-a, -(m * h), v).value - h.dot(m * h));
  };

  WorstCaseRates out;
  const double c_num = s + std::max(0.0, min_quad(phi, phi));
  const double c_den = s + std::max(0.0, max_quad(phi_bar, phi_bar));
  out.common = make_rate(c_num, c_den).clamped;

  const double p_num = s + std::max(0.0, min_quad(model.tau(0) * p0 + q, q));
  const double p_den = s + std::max(0.0, max_quad(kTwoPi * model.variance(0) * p0 + q_bar, q_bar));
  out.private_ = make_rate(p_num, p_den).clamped;
  return out;
}

ShareAllocation allocate_common_shares(double common_budget, const Eigen::VectorXd& private_rates) {
  const Eigen::Index k = private_rates.size();
  ShareAllocation out;
  out.shares = Eigen::VectorXd::Zero(k);
  if (k == 0) {
    return out;
  }
  const double budget = std::max(0.0, common_budget);
  std::vector<double> sorted(private_rates.data(), private_rates.data() + k);
  std::sort(sorted.begin(), sorted.end());
  // Raise the water level over the lowest m rates until the budget runs out.
  double used = 0.0;
  double level = sorted[0];
  Eigen::Index m = 1;
  while (m < k) {
    const double need = static_cast<double>(m) * (sorted[static_cast<std::size_t>(m)] - level);
    if (used + need > budget) {
      break;
    }
    used += need;
    level = sorted[static_cast<std::size_t>(m)];
    ++m;
  }
  level += (budget - used) / static_cast<double>(m);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.shares(i) = std::max(0.0, level - private_rates(i));
  }
  // Guard against rounding pushing the total past the budget.
  const double total = out.shares.sum();
  if (total > budget && total > 0.0) {
    out.shares *= budget / total;
  }
  out.t = (out.shares + private_rates).minCoeff();
  return out;
}

void certify(BeamformingSolution& solution, std::span<const scene::ChannelEstimate> estimates) {
  const std::size_t k = solution.num_users();
  if (estimates.size() != k) {
    throw std::invalid_argument("certify: estimate count does not match beams");
  }
  solution.per_user_private.resize(static_cast<Eigen::Index>(k));
  solution.per_user_common.resize(static_cast<Eigen::Index>(k));
  for (std::size_t u = 0; u < k; ++u) {
    const WorstCaseRates wc = worst_case_rates(estimates[u], u, solution.beams, solution.model);
    solution.per_user_private(static_cast<Eigen::Index>(u)) = wc.private_;
    solution.per_user_common(static_cast<Eigen::Index>(u)) = wc.common;
  }
  solution.common_bound = solution.has_common_stream && k > 0 ? solution.per_user_common.minCoeff() : 0.0;
  const ShareAllocation alloc = allocate_common_shares(solution.common_bound, solution.per_user_private);
  solution.common_shares = alloc.shares;
  solution.mmf_value = alloc.t;
}

}  // namespace rsvlc::rates
