#ifndef POLYTRAJ_OBJECTIVE_HPP
#define POLYTRAJ_OBJECTIVE_HPP

#include <Eigen/Dense>

#include <vector>

#include "polytraj/spline.hpp"

namespace polytraj {

// Per-problem weights of the smoothing-spline objective
//   sum_k( |x_k - x_goal_k|^2_Q + eta_k * int |p^(m)|^2 + w_k t_k^2 )
//   + |x_N - x_goal_N|^2_Q_terminal.
// eta_lower optionally adds energy terms on derivative orders 1..m-1
// (entry i-1 weights order i); it is either empty or one vector per stage.
struct Weights {
  std::vector<Eigen::MatrixXd> q;
  std::vector<Eigen::VectorXd> x_goal;
  std::vector<double> eta;
  std::vector<double> w_time;
  Eigen::MatrixXd q_terminal;
  Eigen::VectorXd x_goal_terminal;
  std::vector<Eigen::VectorXd> eta_lower;

  // Checks symmetry/PSD of all weight matrices (eigenvalue floor -1e-10),
  // nonnegativity of eta/w, and dimensional consistency.  Throws.
  void validate(const SplineShape& shape) const;
};

// Stage cost with analytic first and second derivatives.  grad_u/hess_uu are
// sized m*d in fixed-time mode and m*d+1 in joint-time mode (trailing entry
// is the duration).
struct StageCostEval {
  double value = 0.0;
  Eigen::VectorXd grad_x, grad_u;
  Eigen::MatrixXd hess_xx, hess_uu, hess_ux;
};

// Closed form of int_0^t sigma(s) sigma(s)^T ds where sigma holds the nonzero
// entries of the m-th basis derivative; entry (i,j) (1-based) is
// Psi_i Psi_j t^(i+j-1) / ((i-1)! (j-1)! (i+j-1)) with Psi_i = (m+i-1)!.
// Symmetric positive definite for every t > 0.
Eigen::MatrixXd rv_integral(double t, int half_order);

// Entrywise d/dt (order 1) or d^2/dt^2 (order 2) of rv_integral.
Eigen::MatrixXd rv_integral_deriv(double t, int half_order, int order);

// Input weight R_k: eta * (rv_integral kron I_d) in fixed-time mode, the same
// with a trailing diagonal w entry in joint-time mode.
Eigen::MatrixXd input_weight(double t, double eta, double w, int half_order,
                             int dim, TimeMode mode);

StageCostEval stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                         double t, int k, const Weights& weights,
                         TimeMode mode, const SplineShape& shape);

struct TerminalCostEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};
TerminalCostEval terminal_cost(const Eigen::VectorXd& x_final,
                               const Weights& weights);

// Per-term cost decomposition; `energy` is the benchmark's control effort.
struct CostBreakdown {
  double waypoint = 0.0;
  double energy = 0.0;
  double time = 0.0;
  double terminal = 0.0;
  double total() const { return waypoint + energy + time + terminal; }
};

CostBreakdown total_cost(const Eigen::VectorXd& x0,
                         const std::vector<ControlInput>& inputs,
                         const Weights& weights, TimeMode mode,
                         const SplineShape& shape);

}  // namespace polytraj

#endif
