#include "helpers.hpp"
#include "rsvlc/driver.hpp"
#include "rsvlc/lifting.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <random>

using namespace rsvlc;
using doctest::Approx;

namespace {

rates::StreamModel model_for(std::size_t users) {
  rates::StreamModel m;
  m.tau = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(users + 1), 5.0, 5.5);
  m.variance = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(users + 1), 1.0);
  m.noise_power = 0.01;
  return m;
}

double min_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

struct Instance {
  lifting::ProblemData data;
  driver::StartPoint start;
  lifting::ConvexSubproblem sub;
  Eigen::VectorXd z;
};

Instance preset_subproblem(bool rate_splitting) {
  const auto pr = driver::make_problem(testing::preset("convergence_4led_4user.cfg").scenario);
  Instance f;
  f.data = lifting::normalize(pr.estimates, pr.model, pr.amplitude, pr.total_power, pr.optical_limit, rate_splitting);
  f.start = driver::initialize(f.data);
  f.sub = lifting::assemble(f.data, {f.start.y_c, f.start.y_p, f.start.u_max, -0.01});
  f.z = lifting::complete_start(f.sub, f.start.matrices);
  return f;
}

}  // namespace

TEST_SUITE("lifting") {

TEST_CASE("aggregates of zero matrices vanish") {
  const std::vector<Eigen::MatrixXd> p(3, Eigen::MatrixXd::Zero(4, 4));
  const auto a = lifting::aggregate_matrices(p, model_for(2), 0);
  for (const auto* m : {&a.phi, &a.phi_bar, &a.q, &a.q_bar, &a.r, &a.r_bar}) {
    CHECK(m->cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("aggregates for one user and identity matrices") {
  const auto m = model_for(1);
  const std::vector<Eigen::MatrixXd> p(2, Eigen::MatrixXd::Identity(3, 3));
  const auto a = lifting::aggregate_matrices(p, m, 0);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  CHECK((a.phi - (m.tau(0) + m.tau(1)) * id).norm() <= 1e-14);
  CHECK((a.phi_bar - 2.0 * std::numbers::pi * m.variance(1) * id).norm() <= 1e-14);
  CHECK(a.q_bar.norm() == 0.0);
  CHECK((a.r - (m.tau(0) + m.tau(1)) * id).norm() <= 1e-14);
  CHECK((a.r_bar - 2.0 * std::numbers::pi * m.variance(0) * id).norm() <= 1e-14);
}

TEST_CASE("aggregates of PSD inputs are PSD") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::MatrixXd> p;
    for (int i = 0; i < 4; ++i) {
      p.push_back(testing::random_psd(rng, 5, 1 + (trial + i) % 3));
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const auto a = lifting::aggregate_matrices(p, model_for(3), k);
      for (const auto* m : {&a.phi, &a.phi_bar, &a.q, &a.q_bar, &a.r, &a.r_bar}) {
        CHECK(min_eig(*m) >= -1e-12 * std::max(1.0, m->norm()));
      }
    }
  }
}

TEST_CASE("tangent of exp") {
  const auto t0 = lifting::linearize_exp_lower(0.0);
  CHECK(t0(0.0) == Approx(1.0).epsilon(1e-15));
  CHECK(t0(1.0) == Approx(2.0).epsilon(1e-15));
  CHECK(t0(1.0) < std::numbers::e);
  const auto t2 = lifting::linearize_exp_lower(2.0);
  for (double y = -5.0; y <= 8.0; y += 0.01) {
    if (std::abs(y - 2.0) > 1e-9) {
      CHECK(t2(y) < std::exp(y));
    }
  }
  CHECK(t2(2.0) == Approx(std::exp(2.0)).epsilon(1e-15));
}

TEST_CASE("penalty and rank gap") {
  const Eigen::Vector3d v(1.0, -2.0, 0.5);
  const Eigen::MatrixXd r1 = v * v.transpose();
  lifting::LinearizationPoint pt;
  pt.rho = -0.5;
  pt.u_max = {v.normalized()};
  CHECK(std::abs(lifting::penalty_terms(std::vector<Eigen::MatrixXd>{r1}, pt)) <= 1e-14);
  CHECK(lifting::rank_one_gap(r1) <= 1e-13);

  pt.u_max = {Eigen::Vector2d(0.6, 0.8)};
  CHECK(lifting::penalty_terms(std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Identity(2, 2)}, pt) ==
        Approx(-0.5).epsilon(1e-14));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd p = testing::random_psd(rng, 5, 3);
    const double sigma1 = Eigen::JacobiSVD<Eigen::MatrixXd>(p).singularValues()(0);
    CHECK(lifting::rank_one_gap(p) == Approx(p.trace() - sigma1).epsilon(1e-10));
    pt.u_max = {lifting::dominant_eigenvector(p)};
    pt.rho = -1.0;
    CHECK(-lifting::penalty_terms(std::vector<Eigen::MatrixXd>{p}, pt) == Approx(p.trace() - sigma1).epsilon(1e-10));
  }
}

TEST_CASE("zero radius block reduces to the noise corner") {
  // With u = 0 the Schur complement of [[Phi, Phi h], [h^T Phi, h^T Phi h + s - p]] is s - p.
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd phi = testing::random_psd(rng, 3, 2);
  lifting::Aggregates ag{phi, phi, phi, phi, phi, phi};
  const Eigen::Vector3d h(0.3, 0.9, 0.5);
  const double noise = 0.02;
  const double s = 2.0 * std::numbers::pi * noise;
  lifting::LmiScalars sc;
  sc.p_c = s * (1.0 - 1e-3);
  CHECK(min_eig(lifting::build_lmis(ag, h, 0.0, noise, sc)[0]) >= -1e-12);
  sc.p_c = s * (1.0 + 1e-3);
  CHECK(min_eig(lifting::build_lmis(ag, h, 0.0, noise, sc)[0]) < 0.0);
}

TEST_CASE("block with zero aggregates and zero estimate") {
  const lifting::Aggregates ag{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2),
                               Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  const Eigen::Vector2d h = Eigen::Vector2d::Zero();
  const double noise = 0.05;
  const double s = 2.0 * std::numbers::pi * noise;
  const double v = 0.3;
  lifting::LmiScalars sc;
  sc.p_c = 0.1;
  for (double u : {-0.1, 0.0, 0.5, (s - 0.1) / v, (s - 0.1) / v + 0.01}) {
    sc.u_c = u;
    const bool psd = min_eig(lifting::build_lmis(ag, h, v, noise, sc)[0]) >= -1e-14;
    CHECK(psd == (u >= 0.0 && u * v <= s - sc.p_c + 1e-15));
  }
}

TEST_CASE("constraint counts") {
  const auto f = preset_subproblem(true);
  const std::size_t k = 4;
  const auto& c = f.sub.counts;
  CHECK(c.lmis == 4 * k);
  CHECK(c.lmi_order == 5);
  CHECK(c.psd == k + 1);
  CHECK(c.exp_rows == 2 * k);
  CHECK(c.taylor_rows == 2 * k);
  CHECK(c.rate_links == 2 * k);
  CHECK(c.sign_rows == 2 * k);
  CHECK(c.share_rows == k);
  CHECK(c.electric_rows == 1);
  CHECK(c.optical_rows == 4);
  CHECK(c.multiplier_rows == 4 * k);
  CHECK(c.robust_rows == 0);
  CHECK(f.sub.program.lmis.size() == 4 * k + (k + 1));
  CHECK(f.sub.program.exps.size() == 2 * k);
  CHECK(f.sub.program.rows.size() == c.linear_rows());

  const auto g = preset_subproblem(false);
  CHECK(g.sub.counts.psd == k);
  CHECK(g.sub.counts.lmis == 2 * k);
  CHECK(g.sub.counts.share_rows == 0);
}

TEST_CASE("program blocks agree with build_lmis") {
  const auto f = preset_subproblem(true);
  const auto p = f.sub.matrices(f.z);
  const auto& vm = f.sub.vars;
  std::vector<Eigen::MatrixXd> expected;
  for (std::size_t k = 0; k < f.data.num_users(); ++k) {
    const auto ag = lifting::aggregate_matrices(p, f.data.model, k);
    lifting::LmiScalars sc{f.z(vm.p_c[k]), f.z(vm.q_c[k]), f.z(vm.p_p[k]), f.z(vm.q_p[k]),
                           f.z(vm.u_c[k]), f.z(vm.l_c[k]), f.z(vm.u_p[k]), f.z(vm.l_p[k])};
    for (const auto& m : lifting::build_lmis(ag, f.data.h_hat[k], f.data.v[k], f.data.noise, sc)) {
      expected.push_back(m);
    }
  }
  std::size_t matched = 0;
  for (std::size_t b = 0; b < f.sub.program.lmis.size(); ++b) {
    const Eigen::MatrixXd val = f.sub.program.lmi_value(b, f.z);
    for (const auto& e : expected) {
      if (e.rows() == val.rows() && (e - val).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, e.norm())) {
        ++matched;
        break;
      }
    }
  }
  CHECK(matched == expected.size());
}

TEST_CASE("interior start is strictly feasible") {
  const auto f = preset_subproblem(true);
  double phi = 0.0;
  CHECK(ipm::barrier_value(f.sub.program, f.z, phi));
  for (const auto& row : f.sub.program.rows) {
    CHECK(row.evaluate(f.z) > 0.0);
  }
  for (std::size_t b = 0; b < f.sub.program.lmis.size(); ++b) {
    CHECK(min_eig(f.sub.program.lmi_value(b, f.z)) > 0.0);
  }
}

TEST_CASE("certified blocks imply the robust scalar rows") {
  auto f = preset_subproblem(true);
  const auto sol = ipm::solve(f.sub.program, f.z, driver::DriverConfig::default_solver());
  REQUIRE(sol.status == ipm::Status::optimal);
  const auto p = f.sub.matrices(sol.z);
  const auto& vm = f.sub.vars;
  const double s = 2.0 * std::numbers::pi * f.data.noise;
  std::mt19937_64 rng(21);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.data.num_users(); ++k) {
    const auto a = lifting::aggregate_matrices(p, f.data.model, k);
    const Eigen::VectorXd& h = f.data.h_hat[k];
    for (int i = 0; i < 200; ++i) {
      const Eigen::VectorXd d = rates::sample_ball(rng, h.size(), f.data.v[k]);
      const Eigen::VectorXd t = h + d;
      const double scale = std::max(1.0, std::abs(sol.z(vm.p_c[k])));
      worst = std::min(worst, (t.dot(a.phi * t) + s - sol.z(vm.p_c[k])) / scale);
      worst = std::min(worst, (sol.z(vm.q_c[k]) - s - t.dot(a.phi_bar * t)) / scale);
      worst = std::min(worst, (d.dot(a.r * d) + 2.0 * d.dot(a.q * h) + h.dot(a.q * h) + s - sol.z(vm.p_p[k])) / scale);
      worst = std::min(worst,
                       (sol.z(vm.q_p[k]) - s - (d.dot(a.r_bar * d) + 2.0 * d.dot(a.q_bar * h) + h.dot(a.q_bar * h))) /
                           scale);
    }
  }
  CHECK(worst >= -1e-9);
}

TEST_CASE("zero radius users get scalar rows") {
  auto cfg = testing::preset("convergence_4led_4user.cfg");
  cfg.scenario.user_radius = 0.0;
  const auto pr = driver::make_problem(cfg.scenario);
  const auto data = lifting::normalize(pr.estimates, pr.model, pr.amplitude, pr.total_power, pr.optical_limit, true);
  const auto start = driver::initialize(data);
  const auto sub = lifting::assemble(data, {start.y_c, start.y_p, start.u_max, -0.01});
  CHECK(sub.counts.lmis == 0);
  CHECK(sub.counts.robust_rows == 4 * data.num_users());
  CHECK(sub.counts.multiplier_rows == 0);
  const Eigen::VectorXd z = lifting::complete_start(sub, start.matrices);
  double phi = 0.0;
  CHECK(ipm::barrier_value(sub.program, z, phi));

  // y_p at the start equals the log of the exact private denominator.
  Eigen::VectorXd yc;
  Eigen::VectorXd yp;
  lifting::worst_case_log_denominators(data, start.matrices, yc, yp);
  const double s = 2.0 * std::numbers::pi * data.noise;
  for (std::size_t k = 0; k < data.num_users(); ++k) {
    const auto a = lifting::aggregate_matrices(start.matrices, data.model, k);
    const Eigen::VectorXd& h = data.h_hat[k];
    CHECK(yp(static_cast<Eigen::Index>(k)) == Approx(std::log(s + h.dot(a.q_bar * h))).epsilon(1e-12));
  }
}

TEST_CASE("normalization keeps the rate ratios") {
  const auto pr = driver::make_problem(testing::preset("convergence_4led_4user.cfg").scenario);
  const auto d = lifting::normalize(pr.estimates, pr.model, pr.amplitude, pr.total_power, pr.optical_limit, true);
  const double g = d.gain_scale;
  CHECK(d.h_hat[0].cwiseAbs().maxCoeff() <= 1.0);
  CHECK(d.noise == Approx(pr.model.noise_power / (g * g)).epsilon(1e-14));
  CHECK(d.v[1] == Approx(pr.estimates[1].v / (g * g)).epsilon(1e-14));
  CHECK(d.total_power == pr.total_power);
}

TEST_CASE("the isotropic start has no interior once interference is present") {
  const auto f = preset_subproblem(true);
  CHECK(lifting::isotropic_delta(f.data) > 0.0);
  CHECK_THROWS_AS(ipm::strictly_feasible_start(f.sub), std::domain_error);
}

TEST_CASE("empty power budget is rejected") {
  const auto pr = driver::make_problem(testing::preset("convergence_4led_4user.cfg").scenario);
  CHECK_THROWS_AS(lifting::normalize(pr.estimates, pr.model, pr.amplitude, 0.0, pr.optical_limit, true),
                  std::domain_error);
}

}
