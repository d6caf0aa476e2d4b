#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rsvlc::lifting {
struct ConvexSubproblem;
}

namespace rsvlc::ipm {

using Index = Eigen::Index;

/// Symmetric n x n matrix variable stored as its upper triangle (row-major) at
/// z[offset, offset + n(n+1)/2).
struct MatrixVar {
  Index offset = 0;
  int dim = 0;
  Index length() const { return static_cast<Index>(dim) * (dim + 1) / 2; }
};

Index svec_index(int dim, int i, int j);
Eigen::MatrixXd matrix_from_z(const MatrixVar& var, const Eigen::VectorXd& z);
void matrix_to_z(const MatrixVar& var, const Eigen::MatrixXd& m, Eigen::VectorXd& z);

/// sum coeff * z + constant >= 0
struct AffineRow {
  std::vector<std::pair<Index, double>> terms;
  double constant = 0.0;
  double evaluate(const Eigen::VectorXd& z) const;
};

/// exp(z[x]) <= z[p]
struct ExpRow {
  Index x = 0;
  Index p = 0;
};

/// F(z) = F0 + sum_s z_s G_s + sum_t E_t^T (sum_a w_ta P_a) E_t  >= 0,
/// with E_t of size (matrix dim) x (block dim).
struct LmiBlock {
  struct Lifted {
    Eigen::MatrixXd e;
    std::vector<std::pair<int, double>> weights;  // (matrix var id, weight)
  };
  int dim = 0;
  Eigen::MatrixXd f0;
  std::vector<std::pair<Index, Eigen::MatrixXd>> scalar_terms;
  std::vector<Lifted> lifted;
};

/// maximize c^T z over the interior of all rows, exponential rows and LMIs.
struct Program {
  Index num_vars = 0;
  Eigen::VectorXd c;
  std::vector<MatrixVar> matrices;
  std::vector<AffineRow> rows;
  std::vector<ExpRow> exps;
  std::vector<LmiBlock> lmis;

  double barrier_parameter() const;
  Eigen::MatrixXd lmi_value(std::size_t block, const Eigen::VectorXd& z) const;
  void check() const;
};

struct SolverConfig {
  double barrier_increase = 10.0;
  double initial_mu = 1.0;
  double newton_tol = 1e-9;
  double duality_gap_tol = 1e-7;  // stop once theta * mu <= tol * theta, i.e. mu <= tol
  int max_newton = 100;
  int max_path_steps = 60;
  double slope_fraction = 0.01;
  double shrink = 0.5;
  std::ostream* trace = nullptr;  // one line per Newton step when set
  bool parallel = true;

  void validate() const;
};

enum class Status { optimal, newton_cap, path_cap, line_search_failed };

const char* to_string(Status s);

struct Solution {
  Eigen::VectorXd z;
  double objective = 0.0;
  double gap = 0.0;  // theta * mu at return
  double mu = 0.0;
  int newton_steps = 0;
  int path_steps = 0;
  double min_row_slack = 0.0;
  double min_exp_slack = 0.0;   // min over rows of log p - x
  double min_lmi_eig = 0.0;     // min over blocks of lambda_min(F) / max(1, tr F)
  Status status = Status::optimal;
};

struct KktReport {
  // ||c - mu grad(barrier)|| in the dual local norm of the barrier, sqrt(r^T H^-1 r);
  // equals mu times the Newton decrement of the centering problem.
  double stationarity = 0.0;
  // Same residual in the infinity norm. Near a rank-one P the Hessian spans ~25
  // orders of magnitude and this sits at a rounding floor; informational only.
  double stationarity_euclidean = 0.0;
  double primal = 0.0;          // largest constraint violation
  double complementarity = 0.0; // mu * theta
  double scale = 1.0;           // max(1, |objective|, ||c||_inf)
  bool ok(double rel = 1e-6) const {
    return stationarity <= rel * scale && primal <= rel * scale && complementarity <= rel * scale;
  }
};

/// Value of the barrier at z; false if z is not strictly interior.
bool barrier_value(const Program& prog, const Eigen::VectorXd& z, double& value);

/// Gradient and Hessian of the barrier. The parallel kernel splits the LMI work
/// into per-block pieces and a per-(matrix, matrix) scatter, so its result equals
/// the serial reference bit for bit.
void barrier_derivatives(const Program& prog, const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                         Eigen::MatrixXd& hess, bool parallel);
void barrier_derivatives_serial(const Program& prog, const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                                Eigen::MatrixXd& hess);

/// Path-following from a strictly interior start. Throws std::invalid_argument if
/// the start is not interior; other failures are reported through `status`.
Solution solve(const Program& prog, const Eigen::VectorXd& start, const SolverConfig& config = {});

KktReport kkt_residuals(const Program& prog, const Solution& sol);

/// Interior point of a lifted subproblem: P_i = delta I and the scalar slacks and
/// multipliers chosen analytically around it.
Eigen::VectorXd strictly_feasible_start(const lifting::ConvexSubproblem& sub);

}  // namespace rsvlc::ipm
