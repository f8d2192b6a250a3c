#ifndef POLYTRAJ_PROBLEM_HPP
#define POLYTRAJ_PROBLEM_HPP

#include <Eigen/Dense>

#include <vector>

#include "polytraj/constraints.hpp"
#include "polytraj/objective.hpp"
#include "polytraj/spline.hpp"

namespace polytraj {

// A full trajectory-generation instance.  The corridor is either empty
// (unconstrained) or holds one polyhedron per segment; bounds may constrain
// any subset of derivative orders 1..m-1.
struct Problem {
  SplineShape shape;
  Eigen::VectorXd x0;
  Weights weights;
  std::vector<Polyhedron> corridor;
  DerivBounds bounds;
  ControlPointBasis basis;
  double t_min = 0.1;

  bool constrained() const { return !corridor.empty() || !bounds.by_order.empty(); }

  // Throws std::invalid_argument on dimension or corridor-length mismatch.
  void validate() const;
};

enum class SolveStatus {
  Converged,
  MaxIterations,
  LineSearchFailed,
  RegularizationFailed,
  InfeasibleInput,
};

const char* to_string(SolveStatus status);

struct IterationRecord {
  double cost = 0.0;
  double stationarity = 0.0;          // max_k |L_u|_inf
  double constraint_violation = 0.0;  // max g (feasible) or max |g+s| (infeasible)
  double min_slack = 0.0;
  double mu = 0.0;
  double step_length = 0.0;
  double regularization = 0.0;
};

struct SolveResult {
  PiecewiseTrajectory trajectory;
  std::vector<ControlInput> inputs;
  std::vector<Eigen::VectorXd> duals;
  SolveStatus status = SolveStatus::InfeasibleInput;
  std::vector<IterationRecord> trace;
  CostBreakdown cost_breakdown;

  bool converged() const { return status == SolveStatus::Converged; }
};

}  // namespace polytraj

#endif
