#include "polytraj/lqt.hpp"

#include <stdexcept>
#include <string>

namespace polytraj {

LqtDynamics LqtDynamics::from_times(const std::vector<double>& times,
                                    const Weights& weights,
                                    const SplineShape& shape) {
  if (static_cast<int>(times.size()) != shape.segments)
    throw std::invalid_argument("LqtDynamics: need one duration per segment");
  LqtDynamics dyn;
  dyn.a.reserve(times.size());
  dyn.b.reserve(times.size());
  dyn.r.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] <= 0.0)
      throw std::invalid_argument("LqtDynamics: duration must be > 0 at stage " +
                                  std::to_string(k));
    const StateMatrices ab = state_matrices(times[k], shape);
    dyn.a.push_back(ab.A);
    dyn.b.push_back(ab.B);
    dyn.r.push_back(input_weight(times[k], weights.eta[k], 0.0,
                                 shape.half_order(), shape.dim,
                                 TimeMode::FixedTime));
  }
  return dyn;
}

LqtBackwardTape lqt_backward(const Weights& weights, const LqtDynamics& dyn) {
  const std::size_t n = dyn.a.size();
  LqtBackwardTape tape;
  tape.feedback.resize(n);
  tape.feedforward.resize(n);
  tape.cost_to_go.resize(n + 1);
  tape.cost_linear.resize(n + 1);

  tape.cost_to_go[n] = weights.q_terminal;
  tape.cost_linear[n] = weights.q_terminal * weights.x_goal_terminal;

  for (int k = static_cast<int>(n) - 1; k >= 0; --k) {
    const Eigen::MatrixXd& a = dyn.a[k];
    const Eigen::MatrixXd& b = dyn.b[k];
    const Eigen::MatrixXd& p_next = tape.cost_to_go[k + 1];
    const Eigen::VectorXd& q_next = tape.cost_linear[k + 1];

    const Eigen::MatrixXd gram = b.transpose() * p_next * b + dyn.r[k];
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "lqt_backward: inversion block not positive definite at stage " +
          std::to_string(k));

    tape.feedback[k] = llt.solve(b.transpose() * p_next * a);
    tape.feedforward[k] = llt.solve(b.transpose() * q_next);

    const Eigen::MatrixXd closed = a - b * tape.feedback[k];
    Eigen::MatrixXd p = a.transpose() * p_next * closed + weights.q[k];
    tape.cost_to_go[k] = 0.5 * (p + p.transpose());
    tape.cost_linear[k] =
        closed.transpose() * q_next + weights.q[k] * weights.x_goal[k];
  }
  return tape;
}

std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>>
lqt_forward(const Eigen::VectorXd& x0, const LqtBackwardTape& tape,
            const LqtDynamics& dyn) {
  const std::size_t n = dyn.a.size();
  std::vector<Eigen::VectorXd> inputs(n), states(n + 1);
  states[0] = x0;
  for (std::size_t k = 0; k < n; ++k) {
    inputs[k] = -tape.feedback[k] * states[k] + tape.feedforward[k];
    states[k + 1] = dyn.a[k] * states[k] + dyn.b[k] * inputs[k];
  }
  return {inputs, states};
}

double lqt_kkt_residual(const Problem& problem, const std::vector<double>& times,
                        const std::vector<ControlInput>& inputs) {
  const LqtDynamics dyn =
      LqtDynamics::from_times(times, problem.weights, problem.shape);
  const std::size_t n = dyn.a.size();
  std::vector<Eigen::VectorXd> states(n + 1);
  states[0] = problem.x0;
  for (std::size_t k = 0; k < n; ++k)
    states[k + 1] = dyn.a[k] * states[k] + dyn.b[k] * inputs[k].v;

  Eigen::VectorXd adjoint =
      2.0 * problem.weights.q_terminal *
      (states[n] - problem.weights.x_goal_terminal);
  double residual = 0.0;
  double scale = 1.0;
  for (int k = static_cast<int>(n) - 1; k >= 0; --k) {
    const Eigen::VectorXd effort = 2.0 * dyn.r[k] * inputs[k].v;
    const Eigen::VectorXd pull = dyn.b[k].transpose() * adjoint;
    residual = std::max(residual, (effort + pull).lpNorm<Eigen::Infinity>());
    // normalize by the no-cancellation magnitude of the products
    scale = std::max(
        {scale, effort.lpNorm<Eigen::Infinity>(),
         (dyn.b[k].cwiseAbs().transpose() * adjoint.cwiseAbs())
             .maxCoeff()});
    adjoint = 2.0 * problem.weights.q[k] *
                  (states[k] - problem.weights.x_goal[k]) +
              dyn.a[k].transpose() * adjoint;
  }
  return residual / scale;
}

SolveResult lqt_solve(const Problem& problem, const std::vector<double>& times) {
  problem.validate();
  for (std::size_t k = 0; k < problem.weights.eta.size(); ++k)
    if (problem.weights.eta[k] <= 0.0)
      throw std::invalid_argument("lqt_solve: eta must be > 0 at stage " +
                                  std::to_string(k));

  const LqtDynamics dyn =
      LqtDynamics::from_times(times, problem.weights, problem.shape);
  const LqtBackwardTape tape = lqt_backward(problem.weights, dyn);
  auto [raw_inputs, states] = lqt_forward(problem.x0, tape, dyn);

  SolveResult result;
  result.inputs.reserve(raw_inputs.size());
  for (std::size_t k = 0; k < raw_inputs.size(); ++k)
    result.inputs.push_back({raw_inputs[k], times[k]});
  result.trajectory = rollout(problem.x0, result.inputs, problem.shape);
  result.status = SolveStatus::Converged;
  result.cost_breakdown = total_cost(problem.x0, result.inputs, problem.weights,
                                     TimeMode::FixedTime, problem.shape);
  IterationRecord rec;
  rec.cost = result.cost_breakdown.total();
  rec.step_length = 1.0;
  result.trace.push_back(rec);
  return result;
}

}  // namespace polytraj
