#ifndef POLYTRAJ_IPDDP_HPP
#define POLYTRAJ_IPDDP_HPP

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "polytraj/problem.hpp"

namespace polytraj {

enum class StartMode { Feasible, Infeasible };

struct SolverConfig {
  double mu_init = 0.0;  // 0 selects max(1, initial cost / constraint rows)
  double mu_shrink = 0.2;
  double mu_min = 1e-8;
  int max_iterations = 500;
  double opt_tol = 1e-6;
  double reg_init = 0.0;
  double reg_max = 1e6;
  double ls_backtrack = 0.5;
  int ls_max_steps = 24;
  double t_min = 0.0;  // 0 inherits the problem's t_min
  TimeMode mode = TimeMode::JointTime;
  StartMode start = StartMode::Feasible;
  // Infeasible-start solves return as soon as the trajectory is strictly
  // feasible (margin kStrictFeasibilityMargin) with primal residual <= 1e-8,
  // instead of polishing to full stationarity.
  bool stop_at_feasible = true;
};

// Interior-point DDP over the polynomial state-space system.  In joint-time
// mode the stage control is u = [v; t]; in fixed-time mode u = v with
// durations taken from the initial inputs.  Feasible mode maintains g < 0
// with the slack identified as -g; infeasible mode carries explicit slacks
// with the residual g + s driven to zero through the barrier.
class IpddpSolver {
 public:
  IpddpSolver(Problem problem, SolverConfig config);

  struct Iterate {
    std::vector<Eigen::VectorXd> states;  // N+1
    std::vector<Eigen::VectorXd> inputs;  // stacked controls, md or md+1
    std::vector<Eigen::VectorXd> duals;   // one per stage, may be empty
    std::vector<Eigen::VectorXd> slacks;  // infeasible mode only
    std::vector<double> fixed_times;      // fixed-time mode only
    double cost = 0.0;
    double merit = 0.0;
    double primal_error = 0.0;  // max |g + s| (zero in feasible mode)
  };

  struct Gains {
    std::vector<Eigen::VectorXd> ku, klambda, kslack;
    std::vector<Eigen::MatrixXd> Ku, Klambda, Kslack;
    double dv1 = 0.0, dv2 = 0.0;  // expected-decrease model
    double hessian_scale = 0.0;   // max diagonal of the reduced Hessians
    double stationarity = 0.0;    // max_k |L_u|_inf
    double stationarity_reduced = 0.0;  // same through the slack-eliminated gradient
    double comp_residual = 0.0;   // max_k |Lambda g + mu 1|_inf
  };

  // Rolls out states and initializes duals/slacks for the barrier value mu.
  Iterate make_iterate(const std::vector<ControlInput>& inputs,
                       double mu) const;

  // Perturbed-KKT backward pass.  Returns std::nullopt when the regularized
  // control Hessian fails factorization at this `reg`.  With
  // `via_block_solve` the stage gains come from solving the full primal-dual
  // block system instead of the slack-eliminated form (feasible mode only;
  // used as an internal cross-check).
  std::optional<Gains> backward_pass(const Iterate& it, double mu, double reg,
                                     bool via_block_solve = false) const;

  // Line-searched rollout applying the gains; std::nullopt when every
  // backtracking step is rejected.
  struct StepResult {
    Iterate iterate;
    double step = 1.0;
  };
  std::optional<StepResult> forward_pass(const Iterate& it, const Gains& gains,
                                         double mu) const;

  SolveResult solve(const std::vector<ControlInput>& initial_inputs);

  const Problem& problem() const { return problem_; }
  const SolverConfig& config() const { return config_; }
  double duration_of(const Iterate& it, int k) const;
  int control_dim() const { return dim_u_; }
  int constraint_rows(int k) const { return rows_[k]; }

  // Stage constraint at the iterate's current (x, u); empty when the stage is
  // unconstrained.
  StageConstraint stage_constraint(const Iterate& it, int k) const;

 private:
  struct StageEval;
  StageEval eval_stage(const Iterate& it, int k) const;
  void refresh_metrics(Iterate& it, double mu) const;
  void recenter_duals(Iterate& it, double mu) const;

  Problem problem_;
  SolverConfig config_;
  int dim_u_ = 0;
  std::vector<int> rows_;
  std::vector<double> fixed_times_;
  Polyhedron empty_poly_;
};

// Algorithm entry points mirroring the two start modes.
SolveResult solve_ipddp(const Problem& problem, const SolverConfig& config,
                        const std::vector<ControlInput>& initial_inputs);
SolveResult solve_ipddp_infeasible(const Problem& problem,
                                   const SolverConfig& config,
                                   const std::vector<ControlInput>& initial_inputs);

// Three-stage schedule: infeasible-start feasibility pass (w = 1, Q_N = I),
// joint energy-time optimization (w = 20, Q_N = 100 I), then a fixed-time
// polish of the coefficients at the optimized durations.
struct PipelineConfig {
  SolverConfig solver;
  double stage1_w = 1.0;
  double stage1_q_terminal = 1.0;
  double stage2_w = 20.0;
  double stage2_q_terminal = 100.0;
};

struct PipelineResult {
  SolveResult feasibility, joint, polish;
  int failed_stage = 0;  // 0 when all stages succeeded
  double initial_total_time = 0.0;
  double optimized_total_time = 0.0;
  double reduction_rate = 0.0;

  bool succeeded() const { return failed_stage == 0; }
  const SolveResult& final_result() const { return polish; }
};

PipelineResult pipeline_three_stage(const Problem& problem,
                                    const std::vector<ControlInput>& initial_inputs,
                                    const PipelineConfig& config);

}  // namespace polytraj

#endif
