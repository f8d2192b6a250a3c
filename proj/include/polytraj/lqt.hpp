#ifndef POLYTRAJ_LQT_HPP
#define POLYTRAJ_LQT_HPP

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "polytraj/problem.hpp"

namespace polytraj {

// Stagewise matrices of the unconstrained fixed-time tracking problem.
struct LqtDynamics {
  std::vector<Eigen::MatrixXd> a, b, r;

  static LqtDynamics from_times(const std::vector<double>& times,
                                const Weights& weights,
                                const SplineShape& shape);
};

// Backward tape: value function V_k(x) = x^T P_k x - 2 q_k^T x + const with
// feedback u_k = -K_k x_k + k_k.
struct LqtBackwardTape {
  std::vector<Eigen::MatrixXd> feedback;     // K_k
  std::vector<Eigen::VectorXd> feedforward;  // k_k
  std::vector<Eigen::MatrixXd> cost_to_go;   // P_k, N+1 entries
  std::vector<Eigen::VectorXd> cost_linear;  // q_k, N+1 entries
};

// Riccati-style recursion P_N = Q_N, q_N = Q_N x_goal_N,
//   K_k = (B^T P+ B + R)^-1 B^T P+ A,   k_k = (B^T P+ B + R)^-1 B^T q+,
//   P_k = A^T P+ (A - B K_k) + Q_k,     q_k = (A - B K_k)^T q+ + Q_k x_goal_k.
// Throws when an inversion block fails positive definiteness, naming the stage.
LqtBackwardTape lqt_backward(const Weights& weights, const LqtDynamics& dyn);

std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>>
lqt_forward(const Eigen::VectorXd& x0, const LqtBackwardTape& tape,
            const LqtDynamics& dyn);

// Exact solution of the unconstrained fixed-time problem in one backward
// recursion plus one rollout.
SolveResult lqt_solve(const Problem& problem, const std::vector<double>& times);

// Scaled dual-infeasibility measure: the objective gradient with respect to
// the stacked inputs (adjoint sweep), normalized by the magnitude of its
// constituent terms; zero at the exact optimum.
double lqt_kkt_residual(const Problem& problem, const std::vector<double>& times,
                        const std::vector<ControlInput>& inputs);

}  // namespace polytraj

#endif
