#include "rsvlc/lifting.hpp"

#include "rsvlc/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsvlc::lifting {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kTwoLn2 = 2.0 * std::numbers::ln2;

// svec coefficients of h^T P h.
Eigen::VectorXd quad_coeffs(const Eigen::VectorXd& h) {
  const int n = static_cast<int>(h.size());
  Eigen::VectorXd out(static_cast<Index>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      out(ipm::svec_index(n, i, j)) = i == j ? h(i) * h(i) : 2.0 * h(i) * h(j);
    }
  }
  return out;
}

void add_matrix_terms(ipm::AffineRow& row, const ipm::MatrixVar& mv, const Eigen::VectorXd& coeffs, double w) {
  for (Index a = 0; a < coeffs.size(); ++a) {
    if (coeffs(a) != 0.0) {
      row.terms.emplace_back(mv.offset + a, w * coeffs(a));
    }
  }
}

// (1/2) log2 rate-link: (x - y) / (2 ln 2)
void add_rate_terms(ipm::AffineRow& row, Index x, Index y) {
  row.terms.emplace_back(x, 1.0 / kTwoLn2);
  row.terms.emplace_back(y, -1.0 / kTwoLn2);
}

// sup over u > max(0, -lambda_min(A)) of c0 - u v - b^T (A + u I)^{-1} b.
// The supremum equals the minimum of the quadratic over the ball.
struct DualPoint {
  double mult = 0.0;
  double value = 0.0;
};

DualPoint numerator_dual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double c0, double v) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::VectorXd bt = es.eigenvectors().transpose() * b;
  const double floor = std::max(0.0, -lam(0));
  const double scale = std::max({1.0, lam.cwiseAbs().maxCoeff(), b.norm()});
  const double offset = 1e-9 * scale;
  auto deriv = [&](double u) { return -v + (bt.array() / (lam.array() + u)).square().sum(); };
  auto value = [&](double u) { return c0 - u * v - (bt.array().square() / (lam.array() + u)).sum(); };
  double lo = floor + offset;
  double u = lo;
  if (deriv(lo) > 0.0) {
    double hi = floor + b.norm() / std::sqrt(v) + offset;
    while (deriv(hi) > 0.0) {
      hi = 2.0 * hi + offset;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (deriv(mid) > 0.0 ? lo : hi) = mid;
    }
    u = 0.5 * (lo + hi);
  }
  return {u, value(u)};
}

}  // namespace

Aggregates aggregate_matrices(std::span<const Eigen::MatrixXd> p_list, const rates::StreamModel& model,
                              std::size_t user) {
  if (p_list.size() < 2 || p_list.size() != model.num_streams() || user + 1 >= p_list.size()) {
    throw std::invalid_argument("aggregate_matrices: stream count mismatch");
  }
  const Index n = p_list[0].rows();
  for (const auto& p : p_list) {
    if (p.rows() != n || p.cols() != n) {
      throw std::invalid_argument("aggregate_matrices: matrix dimension mismatch");
    }
  }
  Aggregates g;
  g.phi = model.tau(0) * p_list[0];
  g.phi_bar = Eigen::MatrixXd::Zero(n, n);
  g.q = Eigen::MatrixXd::Zero(n, n);
  g.q_bar = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 1; j < p_list.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    g.phi += model.tau(jj) * p_list[j];
    g.phi_bar += kTwoPi * model.variance(jj) * p_list[j];
    g.q += model.tau(jj) * p_list[j];
    if (j != user + 1) {
      g.q_bar += kTwoPi * model.variance(jj) * p_list[j];
    }
  }
  g.r = model.tau(0) * p_list[0] + g.q;
  g.r_bar = kTwoPi * model.variance(0) * p_list[0] + g.q_bar;
  return g;
}

void LinearizationPoint::validate(std::size_t num_users, bool has_common) const {
  if (!(rho < 0.0)) {
    throw std::invalid_argument("LinearizationPoint: rho must be negative");
  }
  if (static_cast<std::size_t>(y_p.size()) != num_users ||
      (has_common && static_cast<std::size_t>(y_c.size()) != num_users)) {
    throw std::invalid_argument("LinearizationPoint: slack count mismatch");
  }
  if (u_max.size() != num_users + 1) {
    throw std::invalid_argument("LinearizationPoint: need one u_max per stream");
  }
  for (const auto& u : u_max) {
    if (std::abs(u.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("LinearizationPoint: u_max must be a unit vector");
    }
  }
}

ExpTangent linearize_exp_lower(double y_prev) {
  return {std::exp(y_prev), y_prev};
}

double rank_one_gap(const Eigen::MatrixXd& p) {
  if (p.size() == 0) {
    return 0.0;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p + p.transpose()), Eigen::EigenvaluesOnly);
  // sigma_1 of a PSD matrix is its top eigenvalue; rounding can leave tiny negatives.
  return std::max(0.0, p.trace() - es.eigenvalues().maxCoeff());
}

double penalty_terms(std::span<const Eigen::MatrixXd> p_list, const LinearizationPoint& point) {
  if (p_list.size() != point.u_max.size()) {
    throw std::invalid_argument("penalty_terms: need one u_max per matrix");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    const Eigen::VectorXd& u = point.u_max[i];
    acc += p_list[i].trace() - u.dot(p_list[i] * u);
  }
  return point.rho * acc;
}

Eigen::VectorXd dominant_eigenvector(const Eigen::MatrixXd& p) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p + p.transpose()));
  Eigen::VectorXd u = es.eigenvectors().col(p.rows() - 1);
  Index arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  if (u(arg) < 0.0) {
    u = -u;
  }
  return u;
}

std::array<Eigen::MatrixXd, 4> build_lmis(const Aggregates& agg, const Eigen::VectorXd& h_hat, double v,
                                          double noise, const LmiScalars& sc) {
  const Index n = h_hat.size();
  const double s = kTwoPi * noise;
  auto block = [&](const Eigen::MatrixXd& quad, const Eigen::MatrixXd& lin, double mult, double sign,
                   double corner) {
    // sign * [[quad, lin h], [h^T lin, h^T lin h]] + mult diag(I, -v) + corner e e^T
    Eigen::MatrixXd m(n + 1, n + 1);
    m.topLeftCorner(n, n) = sign * quad + mult * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd lh = sign * (lin * h_hat);
    m.topRightCorner(n, 1) = lh;
    m.bottomLeftCorner(1, n) = lh.transpose();
    m(n, n) = sign * h_hat.dot(lin * h_hat) - mult * v + corner;
    return m;
  };
  return {block(agg.phi, agg.phi, sc.u_c, 1.0, s - sc.p_c), block(agg.phi_bar, agg.phi_bar, sc.l_c, -1.0, sc.q_c - s),
          block(agg.r, agg.q, sc.u_p, 1.0, s - sc.p_p), block(agg.r_bar, agg.q_bar, sc.l_p, -1.0, sc.q_p - s)};
}

ProblemData normalize(std::span<const scene::ChannelEstimate> estimates, const rates::StreamModel& model,
                      double amplitude, double total_power, double optical_limit, bool has_common) {
  if (estimates.empty()) {
    throw std::invalid_argument("normalize: no users");
  }
  if (model.num_streams() != estimates.size() + 1) {
    throw std::invalid_argument("normalize: stream model does not match the user count");
  }
  if (!(total_power > 0.0) || !(optical_limit > 0.0) || !(amplitude > 0.0)) {
    throw std::domain_error("normalize: power limits and amplitude must be positive");
  }
  double g = 0.0;
  for (const auto& e : estimates) {
    if (e.h_hat.size() != estimates.front().h_hat.size()) {
      throw std::invalid_argument("normalize: channel dimension mismatch");
    }
    g = std::max(g, e.h_hat.cwiseAbs().maxCoeff());
  }
  if (!(g > 0.0)) {
    throw std::domain_error("normalize: all estimated channels are zero");
  }
  ProblemData d;
  d.gain_scale = g;
  for (const auto& e : estimates) {
    d.h_hat.push_back(e.h_hat / g);
    d.v.push_back(e.v / (g * g));
  }
  d.noise = model.noise_power / (g * g);
  d.model = model;
  d.model.noise_power = d.noise;
  d.amplitude = amplitude;
  d.total_power = total_power;
  d.optical_limit = optical_limit;
  d.has_common = has_common;
  return d;
}

std::vector<Eigen::MatrixXd> ConvexSubproblem::matrices(const Eigen::VectorXd& z) const {
  const Index n = data.num_leds();
  std::vector<Eigen::MatrixXd> out;
  for (int id : vars.matrix_of_stream) {
    out.push_back(id < 0 ? Eigen::MatrixXd::Zero(n, n)
                         : ipm::matrix_from_z(program.matrices[static_cast<std::size_t>(id)], z));
  }
  return out;
}

ConvexSubproblem assemble(const ProblemData& data, const LinearizationPoint& point) {
  const std::size_t k_users = data.num_users();
  const int n = static_cast<int>(data.num_leds());
  point.validate(k_users, data.has_common);
  const bool common = data.has_common;
  const double s = kTwoPi * data.noise;
  const auto& tau = data.model.tau;
  const auto& var = data.model.variance;

  ConvexSubproblem sub;
  sub.data = data;
  sub.point = point;
  VariableMap& vm = sub.vars;
  ipm::Program& prog = sub.program;

  Index next = 0;
  const Index len = static_cast<Index>(n) * (n + 1) / 2;
  vm.matrix_of_stream.assign(k_users + 1, -1);
  for (std::size_t i = common ? 0 : 1; i <= k_users; ++i) {
    vm.matrix_of_stream[i] = static_cast<int>(prog.matrices.size());
    prog.matrices.push_back({next, n});
    next += len;
  }
  auto take = [&](std::vector<Index>& slot) {
    slot.resize(k_users);
    for (auto& s_idx : slot) {
      s_idx = next++;
    }
  };
  vm.t = next++;
  if (common) {
    take(vm.c);
    take(vm.x_c);
    take(vm.y_c);
    take(vm.p_c);
    take(vm.q_c);
  }
  take(vm.x_p);
  take(vm.y_p);
  take(vm.p_p);
  take(vm.q_p);
  // Multipliers only for users with a nonzero error ball.
  auto take_robust = [&](std::vector<Index>& slot) {
    slot.assign(k_users, -1);
    for (std::size_t k = 0; k < k_users; ++k) {
      if (data.v[k] > 0.0) {
        slot[k] = next++;
      }
    }
  };
  if (common) {
    take_robust(vm.u_c);
    take_robust(vm.l_c);
  }
  take_robust(vm.u_p);
  take_robust(vm.l_p);
  prog.num_vars = next;

  // Objective: t + rho sum_i (Tr P_i - u_i^T P_i u_i).
  prog.c = Eigen::VectorXd::Zero(prog.num_vars);
  prog.c(vm.t) = 1.0;
  for (std::size_t i = 0; i <= k_users; ++i) {
    const int id = vm.matrix_of_stream[i];
    if (id < 0) {
      continue;
    }
    const ipm::MatrixVar& mv = prog.matrices[static_cast<std::size_t>(id)];
    const Eigen::VectorXd& u = point.u_max[i];
    const Eigen::VectorXd uu = quad_coeffs(u);
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        const Index idx = ipm::svec_index(n, a, b);
        prog.c(mv.offset + idx) = point.rho * ((a == b ? 1.0 : 0.0) - uu(idx));
      }
    }
  }

  ConstraintCounts& cnt = sub.counts;
  auto push_row = [&](ipm::AffineRow row, std::size_t& counter) {
    prog.rows.push_back(std::move(row));
    ++counter;
  };

  for (std::size_t k = 0; k < k_users; ++k) {
    // Rate links.
    if (common) {
      ipm::AffineRow row;
      add_rate_terms(row, vm.x_c[k], vm.y_c[k]);
      for (std::size_t j = 0; j < k_users; ++j) {
        row.terms.emplace_back(vm.c[j], -1.0);
      }
      push_row(std::move(row), cnt.rate_links);
    }
    {
      ipm::AffineRow row;
      add_rate_terms(row, vm.x_p[k], vm.y_p[k]);
      row.terms.emplace_back(vm.t, -1.0);
      if (common) {
        row.terms.emplace_back(vm.c[k], 1.0);
      }
      push_row(std::move(row), cnt.rate_links);
    }
    // exp(x) <= p, tangent rows, x >= y.
    auto slack_group = [&](Index x, Index y, Index p, Index q, double y0) {
      prog.exps.push_back({x, p});
      ++cnt.exp_rows;
      const ExpTangent tan = linearize_exp_lower(y0);
      ipm::AffineRow taylor;
      taylor.terms = {{y, tan.slope}, {q, -1.0}};
      taylor.constant = tan.slope * (1.0 - y0);
      push_row(std::move(taylor), cnt.taylor_rows);
      ipm::AffineRow sign;
      sign.terms = {{x, 1.0}, {y, -1.0}};
      push_row(std::move(sign), cnt.sign_rows);
    };
    if (common) {
      slack_group(vm.x_c[k], vm.y_c[k], vm.p_c[k], vm.q_c[k], point.y_c(static_cast<Index>(k)));
    }
    slack_group(vm.x_p[k], vm.y_p[k], vm.p_p[k], vm.q_p[k], point.y_p(static_cast<Index>(k)));
    if (common) {
      ipm::AffineRow row;
      row.terms = {{vm.c[k], 1.0}};
      push_row(std::move(row), cnt.share_rows);
    }
  }

  // Power rows.
  {
    ipm::AffineRow row;
    row.constant = data.total_power;
    Eigen::VectorXd tr = Eigen::VectorXd::Zero(len);
    for (int a = 0; a < n; ++a) {
      tr(ipm::svec_index(n, a, a)) = 1.0;
    }
    for (std::size_t i = 0; i <= k_users; ++i) {
      const int id = vm.matrix_of_stream[i];
      if (id >= 0) {
        add_matrix_terms(row, prog.matrices[static_cast<std::size_t>(id)], tr, -var(static_cast<Index>(i)));
      }
    }
    push_row(std::move(row), cnt.electric_rows);
  }
  const double a2 = data.amplitude * data.amplitude;
  for (int led = 0; led < n; ++led) {
    ipm::AffineRow row;
    row.constant = data.optical_limit * data.optical_limit;
    for (int id : vm.matrix_of_stream) {
      if (id >= 0) {
        row.terms.emplace_back(prog.matrices[static_cast<std::size_t>(id)].offset + ipm::svec_index(n, led, led), -a2);
      }
    }
    push_row(std::move(row), cnt.optical_rows);
  }

  // PSD blocks.
  for (std::size_t m = 0; m < prog.matrices.size(); ++m) {
    ipm::LmiBlock blk;
    blk.dim = n;
    blk.f0 = Eigen::MatrixXd::Zero(n, n);
    blk.lifted.push_back({Eigen::MatrixXd::Identity(n, n), {{static_cast<int>(m), 1.0}}});
    prog.lmis.push_back(std::move(blk));
    ++cnt.psd;
  }

  // Robust numerator / denominator constraints.
  const int m1 = n + 1;
  Eigen::MatrixXd corner = Eigen::MatrixXd::Zero(m1, m1);
  corner(n, n) = 1.0;
  const int id0 = vm.matrix_of_stream[0];
  for (std::size_t k = 0; k < k_users; ++k) {
    const Eigen::VectorXd& h = data.h_hat[k];
    const double v = data.v[k];
    // Weights of the (h + dh)^T (.) (h + dh) part and of the dh^T P_0 dh part.
    std::vector<std::pair<int, double>> w_phi, w_phibar, w_q, w_qbar;
    for (std::size_t i = 0; i <= k_users; ++i) {
      const int id = vm.matrix_of_stream[i];
      if (id < 0) {
        continue;
      }
      const auto ii = static_cast<Index>(i);
      w_phi.emplace_back(id, tau(ii));
      if (i >= 1) {
        w_phibar.emplace_back(id, -kTwoPi * var(ii));
        w_q.emplace_back(id, tau(ii));
        if (i != k + 1) {
          w_qbar.emplace_back(id, -kTwoPi * var(ii));
        }
      }
    }
    if (v > 0.0) {
      Eigen::MatrixXd e_h(n, m1);
      e_h << Eigen::MatrixXd::Identity(n, n), h;
      Eigen::MatrixXd e_0 = Eigen::MatrixXd::Zero(n, m1);
      e_0.leftCols(n).setIdentity();
      Eigen::MatrixXd mult = Eigen::MatrixXd::Identity(m1, m1);
      mult(n, n) = -v;
      auto add_block = [&](Index multiplier, Index slack, double slack_sign, double constant,
                           std::vector<ipm::LmiBlock::Lifted> lifted) {
        ipm::LmiBlock blk;
        blk.dim = m1;
        blk.f0 = constant * corner;
        blk.scalar_terms.emplace_back(multiplier, mult);
        blk.scalar_terms.emplace_back(slack, slack_sign * corner);
        blk.lifted = std::move(lifted);
        prog.lmis.push_back(std::move(blk));
        ++cnt.lmis;
        ipm::AffineRow nonneg;
        nonneg.terms = {{multiplier, 1.0}};
        push_row(std::move(nonneg), cnt.multiplier_rows);
      };
      auto with_p0 = [&](std::vector<ipm::LmiBlock::Lifted> lifted, double w0) {
        if (id0 >= 0) {
          lifted.push_back({e_0, {{id0, w0}}});
        }
        return lifted;
      };
      if (common) {
        add_block(vm.u_c[k], vm.p_c[k], -1.0, s, {{e_h, w_phi}});
        add_block(vm.l_c[k], vm.q_c[k], 1.0, -s, {{e_h, w_phibar}});
      }
      add_block(vm.u_p[k], vm.p_p[k], -1.0, s, with_p0({{e_h, w_q}}, tau(0)));
      add_block(vm.l_p[k], vm.q_p[k], 1.0, -s, with_p0({{e_h, w_qbar}}, -kTwoPi * var(0)));
    } else {
      // Zero radius: the robust blocks collapse to scalar rows at dh = 0.
      const Eigen::VectorXd hq = quad_coeffs(h);
      auto add_row = [&](Index slack, double slack_sign, double constant,
                         const std::vector<std::pair<int, double>>& weights) {
        ipm::AffineRow row;
        row.constant = constant;
        row.terms.emplace_back(slack, slack_sign);
        for (const auto& [id, w] : weights) {
          add_matrix_terms(row, prog.matrices[static_cast<std::size_t>(id)], hq, w);
        }
        push_row(std::move(row), cnt.robust_rows);
      };
      if (common) {
        add_row(vm.p_c[k], -1.0, s, w_phi);
        add_row(vm.q_c[k], 1.0, -s, w_phibar);
      }
      add_row(vm.p_p[k], -1.0, s, w_q);
      add_row(vm.q_p[k], 1.0, -s, w_qbar);
    }
  }
  cnt.lmi_order = m1;
  prog.check();
  return sub;
}

void worst_case_log_denominators(const ProblemData& data, std::span<const Eigen::MatrixXd> p_list,
                                 Eigen::VectorXd& y_c, Eigen::VectorXd& y_p) {
  const std::size_t k_users = data.num_users();
  const double s = kTwoPi * data.noise;
  y_c = Eigen::VectorXd::Zero(data.has_common ? static_cast<Index>(k_users) : 0);
  y_p = Eigen::VectorXd::Zero(static_cast<Index>(k_users));
  for (std::size_t k = 0; k < k_users; ++k) {
    const Aggregates g = aggregate_matrices(p_list, data.model, k);
    const Eigen::VectorXd& h = data.h_hat[k];
    auto max_quad = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) {
      return -minimize_on_ball(-a, -(m * h), data.v[k]).value + h.dot(m * h);
    };
    if (data.has_common) {
      y_c(static_cast<Index>(k)) = std::log(s + std::max(0.0, max_quad(g.phi_bar, g.phi_bar)));
    }
    y_p(static_cast<Index>(k)) = std::log(s + std::max(0.0, max_quad(g.r_bar, g.q_bar)));
  }
}

Eigen::VectorXd complete_start(const ConvexSubproblem& sub, std::span<const Eigen::MatrixXd> p_list) {
  const ProblemData& data = sub.data;
  const VariableMap& vm = sub.vars;
  const std::size_t k_users = data.num_users();
  if (p_list.size() != k_users + 1) {
    throw std::invalid_argument("complete_start: need one matrix per stream");
  }
  const double s = kTwoPi * data.noise;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(sub.program.num_vars);
  for (std::size_t i = 0; i <= k_users; ++i) {
    const int id = vm.matrix_of_stream[i];
    if (id >= 0) {
      ipm::matrix_to_z(sub.program.matrices[static_cast<std::size_t>(id)], p_list[i], z);
    }
  }
  Eigen::VectorXd gap_c = Eigen::VectorXd::Zero(static_cast<Index>(k_users));
  Eigen::VectorXd gap_p = Eigen::VectorXd::Zero(static_cast<Index>(k_users));
  constexpr double kRel = 1e-7;

  for (std::size_t k = 0; k < k_users; ++k) {
    const auto kk = static_cast<Index>(k);
    const Aggregates g = aggregate_matrices(p_list, data.model, k);
    const Eigen::VectorXd& h = data.h_hat[k];
    const double v = data.v[k];
    // Largest admissible numerator slack and smallest admissible denominator slack.
    auto numerator = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& lin, Index mult) {
      double bound = h.dot(lin * h);
      if (v > 0.0) {
        const DualPoint dp = numerator_dual(a, lin * h, bound, v);
        z(mult) = dp.mult;
        bound = dp.value;
      }
      return s + bound;
    };
    auto denominator = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& lin, Index mult) {
      double bound = h.dot(lin * h);
      if (v > 0.0) {
        const DualPoint dp = numerator_dual(-a, -(lin * h), -bound, v);
        z(mult) = dp.mult;
        bound = -dp.value;
      }
      return s + bound;
    };
    auto fill = [&](Index x, Index y, Index p, Index q, double num, double den, double y0) {
      z(p) = num * (1.0 - kRel);
      z(q) = den * (1.0 + kRel);
      const double e0 = std::exp(y0);
      const double y_min = y0 - 1.0 + z(q) / e0;
      z(y) = y_min + kRel * std::max(1.0, std::abs(y_min));
      const double room = std::log(z(p)) - z(y);
      if (!(room > 0.0)) {
        throw std::domain_error("complete_start: worst-case numerator does not exceed the denominator");
      }
      z(x) = z(y) + 0.5 * room;
      return 0.5 * room / kTwoLn2;
    };
    if (data.has_common) {
      const double num = numerator(g.phi, g.phi, v > 0.0 ? vm.u_c[k] : -1);
      const double den = denominator(g.phi_bar, g.phi_bar, v > 0.0 ? vm.l_c[k] : -1);
      gap_c(kk) = fill(vm.x_c[k], vm.y_c[k], vm.p_c[k], vm.q_c[k], num, den, sub.point.y_c(kk));
    }
    const double num = numerator(g.r, g.q, v > 0.0 ? vm.u_p[k] : -1);
    const double den = denominator(g.r_bar, g.q_bar, v > 0.0 ? vm.l_p[k] : -1);
    gap_p(kk) = fill(vm.x_p[k], vm.y_p[k], vm.p_p[k], vm.q_p[k], num, den, sub.point.y_p(kk));
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Index>(k_users));
  if (data.has_common) {
    c.setConstant(0.5 * gap_c.minCoeff() / static_cast<double>(k_users));
    for (std::size_t k = 0; k < k_users; ++k) {
      z(vm.c[k]) = c(static_cast<Index>(k));
    }
  }
  const double m = (c + gap_p).minCoeff();
  z(vm.t) = m - 0.5 * gap_p.minCoeff();
  return z;
}

double isotropic_delta(const ProblemData& data) {
  const double streams = static_cast<double>(data.num_users() + (data.has_common ? 1 : 0));
  const double n = static_cast<double>(data.num_leds());
  const double eps_max = data.model.variance.maxCoeff();
  const double a2 = data.amplitude * data.amplitude;
  return 0.5 * std::min(data.total_power / (streams * eps_max * n),
                        data.optical_limit * data.optical_limit / (streams * a2));
}

}  // namespace rsvlc::lifting

namespace rsvlc::ipm {

Eigen::VectorXd strictly_feasible_start(const lifting::ConvexSubproblem& sub) {
  const auto& data = sub.data;
  if (!(data.total_power > 0.0) || !(data.optical_limit > 0.0)) {
    throw std::domain_error("strictly_feasible_start: power limits must be positive");
  }
  const double delta = lifting::isotropic_delta(data);
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::domain_error("strictly_feasible_start: empty interior");
  }
  const Index n = data.num_leds();
  std::vector<Eigen::MatrixXd> p(data.num_users() + 1, delta * Eigen::MatrixXd::Identity(n, n));
  if (!data.has_common) {
    p[0].setZero();
  }
  return lifting::complete_start(sub, p);
}

}  // namespace rsvlc::ipm
