#include "rsvlc/driver.hpp"

#include "rsvlc/sigdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rsvlc::driver {

using Eigen::Index;

namespace {

constexpr double kNegligibleShare = 1e-6;

std::vector<Eigen::MatrixXd> blend_toward_identity(const std::vector<Eigen::MatrixXd>& p, double eta, double delta,
                                                   bool has_common) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == 0 && !has_common) {
      out.push_back(Eigen::MatrixXd::Zero(p[i].rows(), p[i].cols()));
      continue;
    }
    out.push_back((1.0 - eta) * p[i] + eta * delta * Eigen::MatrixXd::Identity(p[i].rows(), p[i].cols()));
  }
  return out;
}

std::vector<Eigen::VectorXd> dominant_vectors(const std::vector<Eigen::MatrixXd>& p) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(p.size());
  for (const auto& m : p) {
    out.push_back(lifting::dominant_eigenvector(m));
  }
  return out;
}

// Largest s with s * (power rows of p_list) within half of each budget.
double half_margin_scale(const lifting::ProblemData& data, const std::vector<Eigen::MatrixXd>& p) {
  double electric = 0.0;
  Eigen::VectorXd optical = Eigen::VectorXd::Zero(data.num_leds());
  const double a2 = data.amplitude * data.amplitude;
  for (std::size_t i = 0; i < p.size(); ++i) {
    electric += data.model.variance(static_cast<Index>(i)) * p[i].trace();
    optical += a2 * p[i].diagonal();
  }
  const double l2 = data.optical_limit * data.optical_limit;
  return std::min(0.5 * data.total_power / electric, 0.5 * l2 / optical.maxCoeff());
}

// Private powers q (summing to 1) with tau_k a_kk q_k > sum_j (2 pi eps_j b_kj - tau_j a_kj) q_j
// for every user, a and b being the smallest and largest gains of a direction over the
// error ball. q = (I - F)^{-1} 1 with the normalized leakage matrix F; empty when no
// such q exists.
Eigen::VectorXd leakage_balanced_powers(const lifting::ProblemData& data, const Eigen::MatrixXd& dirs) {
  const auto k_users = static_cast<Index>(data.num_users());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(k_users, k_users);
  for (Index k = 0; k < k_users; ++k) {
    const double r = std::sqrt(data.v[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd& h = data.h_hat[static_cast<std::size_t>(k)];
    const double own = std::max(0.0, std::abs(h.dot(dirs.col(k))) - r);
    if (!(own > 0.0)) {
      return {};
    }
    const double tau_k = data.model.tau(k + 1);
    for (Index j = 0; j < k_users; ++j) {
      if (j == k) {
        continue;
      }
      const double a = std::abs(h.dot(dirs.col(j)));
      const double hi = (a + r) * (a + r);
      const double lo = std::pow(std::max(0.0, a - r), 2);
      f(k, j) = std::max(0.0, 2.0 * std::numbers::pi * data.model.variance(j + 1) * hi - data.model.tau(j + 1) * lo) /
                (tau_k * own * own);
    }
  }
  Eigen::VectorXd q =
      (Eigen::MatrixXd::Identity(k_users, k_users) - f).partialPivLu().solve(Eigen::VectorXd::Ones(k_users));
  if (!q.allFinite() || q.minCoeff() <= 0.0) {
    return {};
  }
  return q / q.sum();
}

}  // namespace

void DriverConfig::validate() const {
  if (!(zeta > 0.0) || !(rho_init >= -0.1 && rho_init <= -0.01) || !(rho_growth > 1.0) || !(rank_tol > 0.0) ||
      rho_patience <= 0 || max_outer <= 0 || !(rho_floor <= rho_init)) {
    throw std::invalid_argument("DriverConfig: invalid field");
  }
  solver.validate();
}

ipm::SolverConfig DriverConfig::default_solver() {
  ipm::SolverConfig s;
  // Barrier residue on the null directions of a rank-one P scales with mu / |rho|;
  // the rank-gap target needs a gap well below the default.
  s.duality_gap_tol = 1e-8;
  return s;
}

Problem make_problem(const scene::Scenario& scenario) {
  scenario.validate();
  Problem pr;
  pr.estimates = scene::estimate_all(scenario);
  const auto& par = scenario.params;
  const sigdist::SignalDistribution dist = sigdist::solve_distribution(par.amplitude, par.variance);
  std::vector<sigdist::SignalDistribution> dists(scenario.num_users() + 1, dist);
  pr.model = rates::StreamModel::from_distributions(dists, par.noise_power);
  pr.amplitude = par.amplitude;
  pr.total_power = scenario.total_power;
  pr.optical_limit = par.optical_limit();
  return pr;
}

std::vector<double> relative_rank_gaps(std::span<const Eigen::MatrixXd> p_list) {
  double total = 0.0;
  for (const auto& p : p_list) {
    total += std::max(0.0, p.trace());
  }
  std::vector<double> out;
  for (const auto& p : p_list) {
    const double tr = p.trace();
    const double ref = tr > kNegligibleShare * total ? tr : total;
    out.push_back(ref > 0.0 ? lifting::rank_one_gap(p) / ref : 0.0);
  }
  return out;
}

StartPoint initialize(const lifting::ProblemData& data) {
  const std::size_t k_users = data.num_users();
  const Index n = data.num_leds();
  Eigen::MatrixXd h(static_cast<Index>(k_users), n);
  for (std::size_t k = 0; k < k_users; ++k) {
    h.row(static_cast<Index>(k)) = data.h_hat[k].transpose();
  }
  const Eigen::MatrixXd gram = h * h.transpose();
  const double mean_gain = gram.trace() / static_cast<double>(k_users);
  const Eigen::VectorXd common_dir = lifting::dominant_eigenvector(h.transpose() * h);

  const std::vector<double> reg = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  const std::vector<double> split = data.has_common ? std::vector<double>{0.2, 0.5, 0.8} : std::vector<double>{0.0};
  const double delta_rel = 1e-3;

  StartPoint best;
  double best_t = -std::numeric_limits<double>::infinity();
  std::string last_error = "no candidate";
  for (double alpha : reg) {
    const Eigen::MatrixXd w =
        h.transpose() * (gram + alpha * mean_gain * Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).inverse();
    Eigen::MatrixXd dirs(n, static_cast<Index>(k_users));
    for (std::size_t k = 0; k < k_users; ++k) {
      Eigen::VectorXd d = w.col(static_cast<Index>(k));
      if (d.norm() == 0.0) {
        d = data.h_hat[k];
      }
      dirs.col(static_cast<Index>(k)) = d.normalized();
    }
    std::vector<Eigen::VectorXd> allocations{
        Eigen::VectorXd::Constant(static_cast<Index>(k_users), 1.0 / static_cast<double>(k_users))};
    if (Eigen::VectorXd q = leakage_balanced_powers(data, dirs); q.size() > 0) {
      allocations.push_back(q);
    }
    for (const Eigen::VectorXd& alloc : allocations) {
      for (double frac : split) {
        std::vector<Eigen::MatrixXd> p(k_users + 1, Eigen::MatrixXd::Zero(n, n));
        const Eigen::MatrixXd iso = delta_rel * Eigen::MatrixXd::Identity(n, n);
        if (data.has_common) {
          p[0] = frac * common_dir * common_dir.transpose() + iso;
        }
        for (std::size_t k = 0; k < k_users; ++k) {
          const Eigen::VectorXd d = dirs.col(static_cast<Index>(k));
          p[k + 1] = (1.0 - frac) * alloc(static_cast<Index>(k)) * d * d.transpose() + iso;
        }
        const double sc = half_margin_scale(data, p);
        for (auto& m : p) {
          m *= sc;
        }
        StartPoint cand;
        cand.matrices = p;
        lifting::worst_case_log_denominators(data, p, cand.y_c, cand.y_p);
        cand.u_max = dominant_vectors(p);
        lifting::LinearizationPoint pt{cand.y_c, cand.y_p, cand.u_max, -0.01};
        try {
          const lifting::ConvexSubproblem sub = lifting::assemble(data, pt);
          const Eigen::VectorXd z = lifting::complete_start(sub, p);
          const double t = z(sub.vars.t);
          if (t > best_t) {
            best_t = t;
            best = std::move(cand);
          }
        } catch (const std::domain_error& e) {
          last_error = e.what();
        }
      }
    }
  }
  if (!std::isfinite(best_t)) {
    throw std::runtime_error("initialize: no strictly feasible start found (" + last_error + ")");
  }
  return best;
}

Eigen::MatrixXd extract_beamformers(std::span<const Eigen::MatrixXd> p_list, const Problem& problem,
                                    double* scale_out) {
  const Index n = p_list.empty() ? 0 : p_list[0].rows();
  Eigen::MatrixXd beams = Eigen::MatrixXd::Zero(n, static_cast<Index>(p_list.size()));
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p_list[i] + p_list[i].transpose()));
    const double sigma = std::max(0.0, es.eigenvalues()(n - 1));
    Eigen::VectorXd u = es.eigenvectors().col(n - 1);
    Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0.0) {
      u = -u;
    }
    beams.col(static_cast<Index>(i)) = std::sqrt(sigma) * u;
  }
  double scale = 1.0;
  const Eigen::VectorXd optical = problem.amplitude * beams.cwiseAbs().rowwise().sum();
  if (optical.size() > 0 && optical.maxCoeff() > problem.optical_limit) {
    scale = std::min(scale, problem.optical_limit / optical.maxCoeff());
  }
  double electric = 0.0;
  for (Index i = 0; i < beams.cols(); ++i) {
    electric += problem.model.variance(i) * beams.col(i).squaredNorm();
  }
  if (electric > problem.total_power) {
    scale = std::min(scale, std::sqrt(problem.total_power / electric));
  }
  beams *= scale;
  if (scale_out != nullptr) {
    *scale_out = scale;
  }
  return beams;
}

namespace {

struct Trajectory {
  std::vector<Eigen::MatrixXd> p;
  rates::Diagnostics diag;
};

Trajectory cccp(const lifting::ProblemData& data, const StartPoint& start, const DriverConfig& config) {
  const bool rate_splitting = data.has_common;
  const double delta = lifting::isotropic_delta(data);
  Trajectory tr;
  std::vector<Eigen::MatrixXd>& p = tr.p;
  p = start.matrices;
  lifting::LinearizationPoint point{start.y_c, start.y_p, start.u_max, config.rho_init};
  rates::Diagnostics& diag = tr.diag;
  Eigen::VectorXd z_prev;

  for (int n = 1; n <= config.max_outer; ++n) {
    const lifting::ConvexSubproblem sub = lifting::assemble(data, point);
    Eigen::VectorXd z0;
    for (double eta : {1e-3, 1e-2, 1e-1}) {
      try {
        z0 = lifting::complete_start(sub, blend_toward_identity(p, eta, delta, rate_splitting));
        double phi = 0.0;
        if (ipm::barrier_value(sub.program, z0, phi)) {
          break;
        }
      } catch (const std::domain_error&) {
      }
      z0.resize(0);
    }
    if (z0.size() == 0) {
      if (z_prev.size() == 0) {
        throw std::runtime_error("run: no interior start for the first subproblem");
      }
      z0 = z_prev;
    }
    ipm::Solution sol = ipm::solve(sub.program, z0, config.solver);
    if (sol.status != ipm::Status::optimal) {
      std::ostringstream msg;
      msg << "run: subproblem " << n << " stopped with status '" << ipm::to_string(sol.status) << "' (gap "
          << sol.gap << ")";
      throw std::runtime_error(msg.str());
    }
    // The previous iterate is feasible here; never return worse than it.
    const Eigen::VectorXd& ref = z_prev.size() > 0 ? z_prev : z0;
    const double start_obj = sub.objective(ref);
    Eigen::VectorXd z = sol.objective >= start_obj ? sol.z : ref;
    const double obj = sub.objective(z);
    p = sub.matrices(z);

    rates::IterationRecord rec;
    rec.iteration = n;
    rec.t = z(sub.vars.t);
    rec.objective = obj;
    rec.penalty = obj - rec.t;
    rec.start_objective = start_obj;
    const std::vector<double> gaps = relative_rank_gaps(p);
    rec.max_rank_gap = *std::max_element(gaps.begin(), gaps.end());
    rec.rho = point.rho;
    rec.newton_steps = sol.newton_steps;
    const ipm::KktReport kkt = ipm::kkt_residuals(sub.program, sol);
    rec.kkt_residual = std::max({kkt.stationarity, kkt.primal, kkt.complementarity}) / kkt.scale;
    diag.trace.push_back(rec);
    if (config.log != nullptr) {
      *config.log << "iter " << n << " t " << rec.t << " penalty " << rec.penalty << " gap " << rec.max_rank_gap
                  << " rho " << rec.rho << " newton " << rec.newton_steps << '\n';
    }
    z_prev = z;
    if (n > 1 && std::abs(obj - start_obj) < config.zeta && rec.max_rank_gap <= config.rank_tol) {
      diag.converged = true;
      break;
    }
    // Next expansion point.
    for (std::size_t k = 0; k < data.num_users(); ++k) {
      const auto kk = static_cast<Index>(k);
      if (rate_splitting) {
        point.y_c(kk) = z(sub.vars.y_c[k]);
      }
      point.y_p(kk) = z(sub.vars.y_p[k]);
    }
    point.u_max = dominant_vectors(p);
    if (n % config.rho_patience == 0 && rec.max_rank_gap > config.rank_tol) {
      point.rho = std::max(config.rho_floor, point.rho * config.rho_growth);
    }
  }
  diag.rank_gaps = relative_rank_gaps(p);
  diag.solver_t = diag.trace.empty() ? 0.0 : diag.trace.back().t;
  diag.penalty = diag.trace.empty() ? 0.0 : diag.trace.back().penalty;
  diag.hit_iteration_cap = !diag.converged;
  diag.outer_iterations = static_cast<int>(diag.trace.size());
  return tr;
}

rates::BeamformingSolution finish(const Problem& problem, bool rate_splitting, Trajectory tr) {
  rates::BeamformingSolution out;
  double scale = 1.0;
  out.beams = extract_beamformers(tr.p, problem, &scale);
  out.model = problem.model;
  out.has_common_stream = rate_splitting;
  rates::certify(out, problem.estimates);
  tr.diag.extraction_scale = scale;
  tr.diag.lifted = std::move(tr.p);
  out.diagnostics = std::move(tr.diag);
  return out;
}

// Common-stream-only beams at full budget: nonnegative directions scaled until the
// optical or the electric row binds.
std::vector<Eigen::VectorXd> multicast_directions(const Problem& problem) {
  const Index n = problem.estimates.front().h_hat.size();
  std::vector<Eigen::VectorXd> dirs;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  for (const auto& e : problem.estimates) {
    gram += e.h_hat * e.h_hat.transpose();
    sum += e.h_hat.normalized();
  }
  dirs.push_back(lifting::dominant_eigenvector(gram).cwiseAbs());
  dirs.push_back(sum);
  dirs.push_back(Eigen::VectorXd::Ones(n));
  for (const auto& e : problem.estimates) {
    dirs.push_back(e.h_hat);
  }
  const double eps0 = problem.model.variance(0);
  for (auto& d : dirs) {
    const double optical = problem.optical_limit / (problem.amplitude * d.cwiseAbs().maxCoeff());
    const double electric = std::sqrt(problem.total_power / (eps0 * d.squaredNorm()));
    d *= std::min(optical, electric);
  }
  return dirs;
}

}  // namespace

StartPoint warm_start(const lifting::ProblemData& data, std::span<const Eigen::MatrixXd> p_list) {
  const std::size_t streams = data.num_users() + 1;
  const Index n = data.num_leds();
  if (p_list.size() != streams) {
    throw std::invalid_argument("warm_start: stream count does not match the problem");
  }
  StartPoint sp;
  for (std::size_t i = 0; i < streams; ++i) {
    if (p_list[i].rows() != n || p_list[i].cols() != n) {
      throw std::invalid_argument("warm_start: matrix size does not match the LED count");
    }
    sp.matrices.push_back(i == 0 && !data.has_common ? Eigen::MatrixXd::Zero(n, n)
                                                     : Eigen::MatrixXd(0.5 * (p_list[i] + p_list[i].transpose())));
  }
  lifting::worst_case_log_denominators(data, sp.matrices, sp.y_c, sp.y_p);
  sp.u_max = dominant_vectors(sp.matrices);
  return sp;
}

rates::BeamformingSolution run(const Problem& problem, bool rate_splitting, const DriverConfig& config,
                               std::span<const WarmStart> warm_starts) {
  config.validate();
  const lifting::ProblemData data = lifting::normalize(problem.estimates, problem.model, problem.amplitude,
                                                       problem.total_power, problem.optical_limit, rate_splitting);
  std::optional<rates::BeamformingSolution> best;
  std::string first_error;
  double worst_kkt = 0.0;
  auto consider = [&](rates::BeamformingSolution cand) {
    if (!best || cand.mmf_value > best->mmf_value) {
      best = std::move(cand);
    }
  };
  auto attempt = [&](auto&& make_start, const char* origin) {
    try {
      rates::BeamformingSolution cand = finish(problem, rate_splitting, cccp(data, make_start(), config));
      for (const auto& r : cand.diagnostics.trace) {
        worst_kkt = std::max(worst_kkt, r.kkt_residual);
      }
      cand.diagnostics.origin = origin;
      consider(std::move(cand));
    } catch (const std::runtime_error& e) {
      if (first_error.empty()) {
        first_error = e.what();
      }
    }
  };
  attempt([&] { return initialize(data); }, "cccp");
  for (const auto& w : warm_starts) {
    attempt([&] { return warm_start(data, w.lifted); }, "warm_cccp");
  }
  const bool solved = best.has_value();
  auto from_beams = [&](const Eigen::MatrixXd& beams, const char* origin) {
    std::vector<Eigen::MatrixXd> outer;
    for (Index i = 0; i < beams.cols(); ++i) {
      outer.push_back(beams.col(i) * beams.col(i).transpose());
    }
    if (!rate_splitting) {
      outer[0].setZero();
    }
    rates::Diagnostics diag;
    if (best) {
      diag.trace = best->diagnostics.trace;
      diag.outer_iterations = best->diagnostics.outer_iterations;
    }
    diag.converged = true;
    rates::BeamformingSolution cand = finish(problem, rate_splitting, Trajectory{outer, diag});
    cand.diagnostics.rank_gaps = relative_rank_gaps(cand.diagnostics.lifted);
    cand.diagnostics.origin = origin;
    return cand;
  };
  for (const auto& w : warm_starts) {
    if (w.beams.rows() == data.num_leds() && w.beams.cols() == static_cast<Index>(data.num_users() + 1)) {
      consider(from_beams(w.beams, "carried"));
    }
  }
  if (rate_splitting) {
    for (const Eigen::VectorXd& d : multicast_directions(problem)) {
      Eigen::MatrixXd beams = Eigen::MatrixXd::Zero(d.size(), static_cast<Index>(data.num_users() + 1));
      beams.col(0) = d;
      consider(from_beams(beams, "multicast"));
    }
  }
  if (!best || (!solved && best->mmf_value <= 0.0)) {
    if (!best && rate_splitting) {
      throw std::runtime_error(first_error);
    }
    // No strictly feasible start: the only certified point left is silence.
    rates::BeamformingSolution zero = from_beams(
        Eigen::MatrixXd::Zero(data.num_leds(), static_cast<Index>(data.num_users() + 1)), "no_interior");
    zero.diagnostics.converged = true;
    consider(std::move(zero));
    best->diagnostics.origin = "no_interior";
  }
  best->diagnostics.max_kkt_residual = worst_kkt;
  return std::move(*best);
}

rates::BeamformingSolution run_mmf(const scene::Scenario& scenario, const DriverConfig& config) {
  return run(make_problem(scenario), true, config);
}

rates::BeamformingSolution run_sdma(const scene::Scenario& scenario, const DriverConfig& config) {
  return run(make_problem(scenario), false, config);
}

double brute_force_oracle(const scene::Scenario& scenario, int grid_points) {
  if (scenario.num_users() != 1 || scenario.num_leds() > 2) {
    throw std::invalid_argument("brute_force_oracle: needs one user and at most two LEDs");
  }
  if (scenario.user_radius != 0.0) {
    throw std::invalid_argument("brute_force_oracle: needs exact CSIT (radius 0)");
  }
  if (grid_points < 2) {
    throw std::invalid_argument("brute_force_oracle: grid_points must be >= 2");
  }
  if (scenario.total_power == 0.0) {
    scene::Scenario rest = scenario;
    rest.total_power = 1.0;
    rest.validate();
    return 0.0;
  }
  const Problem pr = make_problem(scenario);
  if (!(pr.optical_limit > 0.0)) {
    return 0.0;
  }
  const Eigen::VectorXd h = pr.estimates[0].h_hat;
  const int n = static_cast<int>(h.size());
  const double s = 2.0 * std::numbers::pi * pr.model.noise_power;
  const double tau0 = pr.model.tau(0);
  const double tau1 = pr.model.tau(1);
  const double e0 = pr.model.variance(0);
  const double e1 = pr.model.variance(1);
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = pr.amplitude;

  // With one user: t = R_c + R_p, every rate clamped at zero.
  auto value = [&](double g0, double g1) {
    const double rc = std::max(0.0, 0.5 * std::log2((s + tau0 * g0 * g0 + tau1 * g1 * g1) / (s + two_pi * e1 * g1 * g1)));
    const double rp = std::max(0.0, 0.5 * std::log2((s + tau1 * g1 * g1) / s));
    return rc + rp;
  };

  const int dirs = n == 1 ? 1 : grid_points;
  const int scales = std::max(4, grid_points / 4);
  double best = 0.0;
  for (int i0 = 0; i0 < dirs; ++i0) {
    const double th0 = std::numbers::pi * i0 / dirs;
    for (int i1 = 0; i1 < dirs; ++i1) {
      const double th1 = std::numbers::pi * i1 / dirs;
      double d0[2] = {1.0, 0.0};
      double d1[2] = {1.0, 0.0};
      if (n == 2) {
        d0[0] = std::cos(th0);
        d0[1] = std::sin(th0);
        d1[0] = std::cos(th1);
        d1[1] = std::sin(th1);
      }
      for (int iw = 0; iw <= grid_points; ++iw) {
        const double omega = static_cast<double>(iw) / grid_points;
        const double w0 = std::sqrt(omega);
        const double w1 = std::sqrt(1.0 - omega);
        // Largest amplitude keeping both power rows.
        double opt = 0.0;
        for (int led = 0; led < n; ++led) {
          opt = std::max(opt, a * (w0 * std::abs(d0[led]) + w1 * std::abs(d1[led])));
        }
        const double elec = e0 * omega + e1 * (1.0 - omega);
        double amax = std::sqrt(pr.total_power / elec);
        if (opt > 0.0) {
          amax = std::min(amax, pr.optical_limit / opt);
        }
        double g0 = 0.0;
        double g1 = 0.0;
        for (int led = 0; led < n; ++led) {
          g0 += h(led) * w0 * d0[led];
          g1 += h(led) * w1 * d1[led];
        }
        for (int is = 1; is <= scales; ++is) {
          const double sc = amax * is / scales;
          best = std::max(best, value(sc * g0, sc * g1));
        }
      }
    }
  }
  return best;
}

}  // namespace rsvlc::driver
