#include "rsvlc/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rsvlc::ipm {

namespace {

// Factor F; false when F is not positive definite.
bool factor(const Eigen::MatrixXd& f, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(f);
  if (llt.info() != Eigen::Success) {
    return false;
  }
  const auto d = llt.matrixLLT().diagonal();
  return (d.array() > 0.0).all() && d.allFinite();
}

// Entry (i, j) of the trace pairing <M, B_ij> for symmetric M.
inline double trace_pair(const Eigen::MatrixXd& m, int i, int j) {
  return i == j ? m(i, j) : m(i, j) + m(j, i);
}

struct Pieces {
  bool ok = false;
  Eigen::MatrixXd s;                      // F^{-1}
  std::vector<Eigen::MatrixXd> w;         // S G_s S per scalar term
  std::vector<Eigen::VectorXd> grad_mat;  // per lifted t: <E S E^T, B_ij>
  std::vector<Eigen::MatrixXd> pair;      // per (t1, t2): Tr(B_ij C B_kl C^T), C = E1 S E2^T
  std::vector<Eigen::VectorXd> cross;     // per (scalar s, lifted t): <E W_s E^T, B_ij>
};

Pieces lmi_pieces(const Program& prog, const LmiBlock& blk, const Eigen::VectorXd& z) {
  Pieces pc;
  const Eigen::MatrixXd f = prog.lmi_value(static_cast<std::size_t>(&blk - prog.lmis.data()), z);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factor(f, llt)) {
    return pc;
  }
  pc.ok = true;
  pc.s = llt.solve(Eigen::MatrixXd::Identity(blk.dim, blk.dim));
  pc.s = 0.5 * (pc.s + pc.s.transpose()).eval();
  const std::size_t ns = blk.scalar_terms.size();
  const std::size_t nt = blk.lifted.size();
  pc.w.resize(ns);
  for (std::size_t a = 0; a < ns; ++a) {
    pc.w[a] = pc.s * blk.scalar_terms[a].second * pc.s;
  }
  pc.grad_mat.resize(nt);
  pc.cross.resize(ns * nt);
  pc.pair.resize(nt * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const Eigen::MatrixXd& e = blk.lifted[t].e;
    const int n = static_cast<int>(e.rows());
    const Index len = static_cast<Index>(n) * (n + 1) / 2;
    const Eigen::MatrixXd c = e * pc.s * e.transpose();
    pc.grad_mat[t].resize(len);
    for (std::size_t a = 0; a < ns; ++a) {
      const Eigen::MatrixXd ew = e * pc.w[a] * e.transpose();
      Eigen::VectorXd& v = pc.cross[a * nt + t];
      v.resize(len);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          v(svec_index(n, i, j)) = trace_pair(ew, i, j);
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        pc.grad_mat[t](svec_index(n, i, j)) = trace_pair(c, i, j);
      }
    }
  }
  for (std::size_t t1 = 0; t1 < nt; ++t1) {
    for (std::size_t t2 = 0; t2 < nt; ++t2) {
      const Eigen::MatrixXd& e1 = blk.lifted[t1].e;
      const Eigen::MatrixXd& e2 = blk.lifted[t2].e;
      const int n1 = static_cast<int>(e1.rows());
      const int n2 = static_cast<int>(e2.rows());
      const Eigen::MatrixXd c = e1 * pc.s * e2.transpose();
      Eigen::MatrixXd& d = pc.pair[t1 * nt + t2];
      d.resize(static_cast<Index>(n1) * (n1 + 1) / 2, static_cast<Index>(n2) * (n2 + 1) / 2);
      // B_ij = sum over unit pairs (p, q); Tr(e_p e_q^T C e_r e_s^T C^T) = C_qr C_ps.
      for (int i = 0; i < n1; ++i) {
        for (int j = i; j < n1; ++j) {
          const int pq[2][2] = {{i, j}, {j, i}};
          const int npq = i == j ? 1 : 2;
          for (int k = 0; k < n2; ++k) {
            for (int l = k; l < n2; ++l) {
              const int rs[2][2] = {{k, l}, {l, k}};
              const int nrs = k == l ? 1 : 2;
              double acc = 0.0;
              for (int u = 0; u < npq; ++u) {
                for (int v = 0; v < nrs; ++v) {
                  acc += c(pq[u][1], rs[v][0]) * c(pq[u][0], rs[v][1]);
                }
              }
              d(svec_index(n1, i, j), svec_index(n2, k, l)) = acc;
            }
          }
        }
      }
    }
  }
  return pc;
}

// Everything except the matrix-matrix LMI blocks; shared by both kernels.
void scalar_parts(const Program& prog, const std::vector<Pieces>& pieces, Eigen::VectorXd& grad,
                  Eigen::MatrixXd& hess) {
  for (std::size_t b = 0; b < prog.lmis.size(); ++b) {
    const LmiBlock& blk = prog.lmis[b];
    const Pieces& pc = pieces[b];
    const std::size_t ns = blk.scalar_terms.size();
    const std::size_t nt = blk.lifted.size();
    for (std::size_t a = 0; a < ns; ++a) {
      const Index ia = blk.scalar_terms[a].first;
      grad(ia) -= (pc.s.cwiseProduct(blk.scalar_terms[a].second)).sum();
      for (std::size_t r = 0; r < ns; ++r) {
        hess(ia, blk.scalar_terms[r].first) += pc.w[a].cwiseProduct(blk.scalar_terms[r].second).sum();
      }
      for (std::size_t t = 0; t < nt; ++t) {
        const Eigen::VectorXd& v = pc.cross[a * nt + t];
        for (const auto& [mv, wt] : blk.lifted[t].weights) {
          const Index off = prog.matrices[static_cast<std::size_t>(mv)].offset;
          hess.row(ia).segment(off, v.size()) += wt * v.transpose();
          hess.col(ia).segment(off, v.size()) += wt * v;
        }
      }
    }
    for (std::size_t t = 0; t < nt; ++t) {
      for (const auto& [mv, wt] : blk.lifted[t].weights) {
        const Index off = prog.matrices[static_cast<std::size_t>(mv)].offset;
        grad.segment(off, pc.grad_mat[t].size()) -= wt * pc.grad_mat[t];
      }
    }
  }
}

void row_parts(const Program& prog, const Eigen::VectorXd& z, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  for (const AffineRow& row : prog.rows) {
    const double r = row.evaluate(z);
    const double inv = 1.0 / r;
    for (const auto& [i, a] : row.terms) {
      grad(i) -= a * inv;
    }
    for (const auto& [i, a] : row.terms) {
      for (const auto& [j, b] : row.terms) {
        hess(i, j) += a * b * inv * inv;
      }
    }
  }
  for (const ExpRow& e : prog.exps) {
    const double p = z(e.p);
    const double g = std::log(p) - z(e.x);
    grad(e.x) += 1.0 / g;
    grad(e.p) += -1.0 / (p * g) - 1.0 / p;
    hess(e.x, e.x) += 1.0 / (g * g);
    const double xp = -1.0 / (p * g * g);
    hess(e.x, e.p) += xp;
    hess(e.p, e.x) += xp;
    hess(e.p, e.p) += 1.0 / (p * p * g * g) + 1.0 / (p * p * g) + 1.0 / (p * p);
  }
}

bool pieces_ok(const std::vector<Pieces>& pieces) {
  return std::all_of(pieces.begin(), pieces.end(), [](const Pieces& p) { return p.ok; });
}

}  // namespace

Index svec_index(int dim, int i, int j) {
  if (i > j) {
    std::swap(i, j);
  }
  // Rows 0..i-1 hold dim + (dim-1) + ... + (dim-i+1) entries.
  return static_cast<Index>(i) * dim - static_cast<Index>(i) * (i - 1) / 2 + (j - i);
}

Eigen::MatrixXd matrix_from_z(const MatrixVar& var, const Eigen::VectorXd& z) {
  Eigen::MatrixXd m(var.dim, var.dim);
  Index k = var.offset;
  for (int i = 0; i < var.dim; ++i) {
    for (int j = i; j < var.dim; ++j) {
      m(i, j) = z(k);
      m(j, i) = z(k);
      ++k;
    }
  }
  return m;
}

void matrix_to_z(const MatrixVar& var, const Eigen::MatrixXd& m, Eigen::VectorXd& z) {
  Index k = var.offset;
  for (int i = 0; i < var.dim; ++i) {
    for (int j = i; j < var.dim; ++j) {
      z(k++) = 0.5 * (m(i, j) + m(j, i));
    }
  }
}

double AffineRow::evaluate(const Eigen::VectorXd& z) const {
  double v = constant;
  for (const auto& [i, a] : terms) {
    v += a * z(i);
  }
  return v;
}

double Program::barrier_parameter() const {
  double theta = static_cast<double>(rows.size()) + 2.0 * static_cast<double>(exps.size());
  for (const auto& b : lmis) {
    theta += b.dim;
  }
  return theta;
}

Eigen::MatrixXd Program::lmi_value(std::size_t block, const Eigen::VectorXd& z) const {
  const LmiBlock& b = lmis[block];
  Eigen::MatrixXd f = b.f0;
  for (const auto& [i, g] : b.scalar_terms) {
    f += z(i) * g;
  }
  for (const auto& t : b.lifted) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t.e.rows(), t.e.rows());
    for (const auto& [mv, w] : t.weights) {
      m += w * matrix_from_z(matrices[static_cast<std::size_t>(mv)], z);
    }
    f += t.e.transpose() * m * t.e;
  }
  return 0.5 * (f + f.transpose());
}

void Program::check() const {
  if (c.size() != num_vars) {
    throw std::invalid_argument("Program: objective length differs from num_vars");
  }
  auto check_index = [&](Index i) {
    if (i < 0 || i >= num_vars) {
      throw std::invalid_argument("Program: variable index out of range");
    }
  };
  for (const auto& m : matrices) {
    if (m.dim <= 0 || m.offset < 0 || m.offset + m.length() > num_vars) {
      throw std::invalid_argument("Program: matrix variable out of range");
    }
  }
  for (const auto& r : rows) {
    for (const auto& [i, a] : r.terms) {
      check_index(i);
    }
  }
  for (const auto& e : exps) {
    check_index(e.x);
    check_index(e.p);
  }
  for (const auto& b : lmis) {
    if (b.f0.rows() != b.dim || b.f0.cols() != b.dim) {
      throw std::invalid_argument("Program: LMI constant has the wrong size");
    }
    for (const auto& [i, g] : b.scalar_terms) {
      check_index(i);
      if (g.rows() != b.dim || g.cols() != b.dim) {
        throw std::invalid_argument("Program: LMI scalar term has the wrong size");
      }
    }
    for (const auto& t : b.lifted) {
      if (t.e.cols() != b.dim) {
        throw std::invalid_argument("Program: LMI lift has the wrong width");
      }
      for (const auto& [mv, w] : t.weights) {
        if (mv < 0 || static_cast<std::size_t>(mv) >= matrices.size() ||
            matrices[static_cast<std::size_t>(mv)].dim != t.e.rows()) {
          throw std::invalid_argument("Program: LMI lift references a bad matrix variable");
        }
      }
    }
  }
}

void SolverConfig::validate() const {
  if (!(barrier_increase > 1.0) || !(initial_mu > 0.0) || !(newton_tol > 0.0) || !(duality_gap_tol > 0.0) ||
      max_newton <= 0 || max_path_steps <= 0 || !(slope_fraction > 0.0 && slope_fraction < 0.5) ||
      !(shrink > 0.0 && shrink < 1.0)) {
    throw std::invalid_argument("SolverConfig: invalid tolerance or line-search parameter");
  }
}

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal:
      return "optimal";
    case Status::newton_cap:
      return "newton iteration cap";
    case Status::path_cap:
      return "path step cap";
    case Status::line_search_failed:
      return "line search failed";
  }
  return "unknown";
}

bool barrier_value(const Program& prog, const Eigen::VectorXd& z, double& value) {
  double v = 0.0;
  for (const AffineRow& row : prog.rows) {
    const double r = row.evaluate(z);
    if (!(r > 0.0)) {
      return false;
    }
    v -= std::log(r);
  }
  for (const ExpRow& e : prog.exps) {
    const double p = z(e.p);
    if (!(p > 0.0)) {
      return false;
    }
    const double g = std::log(p) - z(e.x);
    if (!(g > 0.0)) {
      return false;
    }
    v -= std::log(g) + std::log(p);
  }
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (std::size_t b = 0; b < prog.lmis.size(); ++b) {
    if (!factor(prog.lmi_value(b, z), llt)) {
      return false;
    }
    v -= 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  value = v;
  return std::isfinite(v);
}

void barrier_derivatives(const Program& prog, const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                         Eigen::MatrixXd& hess, bool parallel) {
  const std::size_t nb = prog.lmis.size();
  std::vector<Pieces> pieces(nb);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    pieces[static_cast<std::size_t>(b)] = lmi_pieces(prog, prog.lmis[static_cast<std::size_t>(b)], z);
  }
  if (!pieces_ok(pieces)) {
    throw std::domain_error("barrier_derivatives: point is not interior");
  }
  grad = Eigen::VectorXd::Zero(prog.num_vars);
  hess = Eigen::MatrixXd::Zero(prog.num_vars, prog.num_vars);
  scalar_parts(prog, pieces, grad, hess);

  // Each (a, b) block of the matrix-matrix Hessian is owned by one task and summed
  // over blocks, lifts in the fixed serial order.
  const auto nm = static_cast<std::ptrdiff_t>(prog.matrices.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t ab = 0; ab < nm * nm; ++ab) {
    const int ma = static_cast<int>(ab / nm);
    const int mb = static_cast<int>(ab % nm);
    const MatrixVar& va = prog.matrices[static_cast<std::size_t>(ma)];
    const MatrixVar& vb = prog.matrices[static_cast<std::size_t>(mb)];
    auto block = hess.block(va.offset, vb.offset, va.length(), vb.length());
    for (std::size_t b = 0; b < nb; ++b) {
      const LmiBlock& blk = prog.lmis[b];
      const std::size_t nt = blk.lifted.size();
      for (std::size_t t1 = 0; t1 < nt; ++t1) {
        for (const auto& [m1, w1] : blk.lifted[t1].weights) {
          if (m1 != ma) {
            continue;
          }
          for (std::size_t t2 = 0; t2 < nt; ++t2) {
            for (const auto& [m2, w2] : blk.lifted[t2].weights) {
              if (m2 == mb) {
                block += (w1 * w2) * pieces[b].pair[t1 * nt + t2];
              }
            }
          }
        }
      }
    }
  }
  row_parts(prog, z, grad, hess);
}

void barrier_derivatives_serial(const Program& prog, const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                                Eigen::MatrixXd& hess) {
  const std::size_t nb = prog.lmis.size();
  std::vector<Pieces> pieces(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    pieces[b] = lmi_pieces(prog, prog.lmis[b], z);
  }
  if (!pieces_ok(pieces)) {
    throw std::domain_error("barrier_derivatives: point is not interior");
  }
  grad = Eigen::VectorXd::Zero(prog.num_vars);
  hess = Eigen::MatrixXd::Zero(prog.num_vars, prog.num_vars);
  scalar_parts(prog, pieces, grad, hess);
  for (std::size_t b = 0; b < nb; ++b) {
    const LmiBlock& blk = prog.lmis[b];
    const std::size_t nt = blk.lifted.size();
    for (std::size_t t1 = 0; t1 < nt; ++t1) {
      for (const auto& [m1, w1] : blk.lifted[t1].weights) {
        const MatrixVar& va = prog.matrices[static_cast<std::size_t>(m1)];
        for (std::size_t t2 = 0; t2 < nt; ++t2) {
          for (const auto& [m2, w2] : blk.lifted[t2].weights) {
            const MatrixVar& vb = prog.matrices[static_cast<std::size_t>(m2)];
            hess.block(va.offset, vb.offset, va.length(), vb.length()) += (w1 * w2) * pieces[b].pair[t1 * nt + t2];
          }
        }
      }
    }
  }
  row_parts(prog, z, grad, hess);
}

namespace {

constexpr double kStallDecrement = 1e-3;

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& rhs) {
  // Jacobi scaling first: variables differ by many orders of magnitude near the
  // rank-one boundary.
  const Eigen::VectorXd d = hess.diagonal().cwiseAbs().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd scaled = d.asDiagonal() * hess * d.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(scaled);
  double reg = 1e-12;
  while (llt.info() != Eigen::Success) {
    if (reg > 1e-2) {
      throw std::runtime_error("ipm: Newton system is not positive definite");
    }
    scaled.diagonal().array() += reg;
    llt.compute(scaled);
    reg *= 10.0;
  }
  return d.asDiagonal() * llt.solve(d.asDiagonal() * rhs);
}

void fill_slacks(const Program& prog, Solution& sol) {
  const Eigen::VectorXd& z = sol.z;
  double row_min = std::numeric_limits<double>::infinity();
  for (const auto& r : prog.rows) {
    row_min = std::min(row_min, r.evaluate(z));
  }
  double exp_min = std::numeric_limits<double>::infinity();
  for (const auto& e : prog.exps) {
    exp_min = std::min(exp_min, z(e.p) > 0.0 ? std::log(z(e.p)) - z(e.x) : -std::numeric_limits<double>::infinity());
  }
  double eig_min = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < prog.lmis.size(); ++b) {
    const Eigen::MatrixXd f = prog.lmi_value(b, z);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f, Eigen::EigenvaluesOnly);
    eig_min = std::min(eig_min, es.eigenvalues()(0) / std::max(1.0, std::abs(f.trace())));
  }
  sol.min_row_slack = prog.rows.empty() ? 0.0 : row_min;
  sol.min_exp_slack = prog.exps.empty() ? 0.0 : exp_min;
  sol.min_lmi_eig = prog.lmis.empty() ? 0.0 : eig_min;
}

}  // namespace

Solution solve(const Program& prog, const Eigen::VectorXd& start, const SolverConfig& config) {
  config.validate();
  prog.check();
  if (start.size() != prog.num_vars) {
    throw std::invalid_argument("ipm::solve: start has the wrong length");
  }
  double phi = 0.0;
  if (!barrier_value(prog, start, phi)) {
    throw std::invalid_argument("ipm::solve: start is not strictly feasible");
  }
  const double theta = prog.barrier_parameter();
  Solution sol;
  sol.z = start;
  double mu = config.initial_mu;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;

  for (int path = 0;; ++path) {
    const double tau = 1.0 / mu;
    // Centering: minimize tau * (-c^T z) + barrier(z).
    bool centered = false;
    double best_dec2 = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 0; it < config.max_newton; ++it) {
      barrier_derivatives(prog, sol.z, grad, hess, config.parallel);
      const Eigen::VectorXd g = grad - tau * prog.c;
      const Eigen::VectorXd dz = newton_direction(hess, -g);
      const double dec2 = std::max(0.0, -g.dot(dz));
      ++sol.newton_steps;
      if (0.5 * dec2 <= config.newton_tol) {
        centered = true;
        break;
      }
      // Rounding floor: deep in the quadratic region the decrement stops shrinking.
      stalled = dec2 < 0.5 * best_dec2 ? 0 : stalled + 1;
      best_dec2 = std::min(best_dec2, dec2);
      if (stalled >= 4 && dec2 < kStallDecrement) {
        centered = true;
        break;
      }
      const double f0 = phi - tau * prog.c.dot(sol.z);
      const double slope = g.dot(dz);
      // Inside the quadratic region only feasibility is enforced; the Armijo test
      // loses meaning once f differences approach rounding level.
      const bool quadratic = dec2 < 0.0625;
      double step = 1.0;
      bool accepted = false;
      Eigen::VectorXd trial;
      double phi_trial = 0.0;
      for (int ls = 0; ls < 80; ++ls) {
        trial = sol.z + step * dz;
        if (barrier_value(prog, trial, phi_trial)) {
          const double f1 = phi_trial - tau * prog.c.dot(trial);
          if (quadratic || f1 <= f0 + config.slope_fraction * step * slope) {
            accepted = true;
            break;
          }
        }
        step *= config.shrink;
      }
      if (config.trace != nullptr) {
        *config.trace << "mu " << mu << " obj " << prog.c.dot(sol.z) << " step " << (accepted ? step : 0.0)
                      << " dec2 " << dec2 << '\n';
      }
      if (!accepted) {
        if (dec2 < 1e-6) {
          centered = true;
          break;
        }
        sol.status = Status::line_search_failed;
        sol.mu = mu;
        sol.path_steps = path;
        sol.objective = prog.c.dot(sol.z);
        sol.gap = theta * mu;
        fill_slacks(prog, sol);
        return sol;
      }
      sol.z = trial;
      phi = phi_trial;
    }
    sol.mu = mu;
    sol.path_steps = path + 1;
    sol.objective = prog.c.dot(sol.z);
    sol.gap = theta * mu;
    if (!centered) {
      sol.status = Status::newton_cap;
      break;
    }
    if (theta * mu <= config.duality_gap_tol * std::max(1.0, std::abs(sol.objective))) {
      sol.status = Status::optimal;
      break;
    }
    if (path + 1 >= config.max_path_steps) {
      sol.status = Status::path_cap;
      break;
    }
    mu /= config.barrier_increase;
  }
  fill_slacks(prog, sol);
  return sol;
}

KktReport kkt_residuals(const Program& prog, const Solution& sol) {
  KktReport rep;
  rep.scale = std::max({1.0, std::abs(prog.c.dot(sol.z)), prog.c.size() > 0 ? prog.c.cwiseAbs().maxCoeff() : 0.0});
  double phi = 0.0;
  const bool interior = barrier_value(prog, sol.z, phi);
  double viol = 0.0;
  for (const auto& r : prog.rows) {
    viol = std::max(viol, -r.evaluate(sol.z));
  }
  for (const auto& e : prog.exps) {
    viol = std::max(viol, std::exp(sol.z(e.x)) - sol.z(e.p));
  }
  for (std::size_t b = 0; b < prog.lmis.size(); ++b) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prog.lmi_value(b, sol.z), Eigen::EigenvaluesOnly);
    viol = std::max(viol, -es.eigenvalues()(0));
  }
  rep.primal = viol;
  rep.complementarity = prog.barrier_parameter() * sol.mu;
  if (interior) {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    barrier_derivatives(prog, sol.z, grad, hess, false);
    // The barrier gradient scaled by mu is the dual estimate on the central path.
    const Eigen::VectorXd r = prog.c - sol.mu * grad;
    rep.stationarity_euclidean = r.cwiseAbs().maxCoeff();
    rep.stationarity = std::sqrt(std::max(0.0, r.dot(newton_direction(hess, r))));
  } else {
    rep.stationarity = std::numeric_limits<double>::infinity();
    rep.stationarity_euclidean = std::numeric_limits<double>::infinity();
  }
  return rep;
}

}  // namespace rsvlc::ipm
