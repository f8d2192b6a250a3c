#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "polytraj/lqt.hpp"
#include "support/dense_qp.hpp"
#include "support/oracles.hpp"

using namespace polytraj;

TEST_CASE("zero weights give zero gains and zero cost-to-go") {
  SplineShape shape{5, 2, 4};
  const int md = shape.state_dim();
  Weights weights;
  for (int k = 0; k < 4; ++k) {
    weights.q.push_back(Eigen::MatrixXd::Zero(md, md));
    weights.x_goal.push_back(Eigen::VectorXd::Zero(md));
    weights.eta.push_back(1e-3);
    weights.w_time.push_back(0.0);
  }
  weights.q_terminal = Eigen::MatrixXd::Zero(md, md);
  weights.x_goal_terminal = Eigen::VectorXd::Zero(md);

  const LqtDynamics dyn =
      LqtDynamics::from_times({1.0, 0.8, 1.2, 0.5}, weights, shape);
  const LqtBackwardTape tape = lqt_backward(weights, dyn);
  for (int k = 0; k < 4; ++k) {
    CHECK(tape.feedback[k].isZero(1e-14));
    CHECK(tape.feedforward[k].isZero(1e-14));
    CHECK(tape.cost_to_go[k].isZero(1e-14));
  }

  // zero tape rolls out freely with zero inputs
  std::mt19937_64 rng(73);
  const Eigen::VectorXd x0 = test::uniform_vector(rng, md, -1, 1);
  const auto [inputs, states] = lqt_forward(x0, tape, dyn);
  for (int k = 0; k < 4; ++k) {
    CHECK(inputs[k].isZero(1e-14));
    CHECK(states[k + 1].isApprox(dyn.a[k] * states[k], 1e-12));
  }
}

TEST_CASE("single-stage gain matches direct substitution") {
  SplineShape shape{5, 1, 1};
  const int md = 3;
  Weights weights;
  weights.q.push_back(Eigen::MatrixXd::Zero(md, md));
  weights.x_goal.push_back(Eigen::VectorXd::Zero(md));
  weights.eta.push_back(0.5);
  weights.w_time.push_back(0.0);
  weights.q_terminal = Eigen::MatrixXd::Identity(md, md);
  weights.x_goal_terminal = Eigen::VectorXd::Zero(md);

  const LqtDynamics dyn = LqtDynamics::from_times({1.3}, weights, shape);
  const LqtBackwardTape tape = lqt_backward(weights, dyn);
  const Eigen::MatrixXd& a = dyn.a[0];
  const Eigen::MatrixXd& b = dyn.b[0];
  const Eigen::MatrixXd expected =
      (b.transpose() * b + dyn.r[0]).ldlt().solve(b.transpose() * a);
  CHECK(tape.feedback[0].isApprox(expected, 1e-10));
}

TEST_CASE("lqt matches the dense QP oracle") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    const int degree = trial % 2 ? 5 : 7;
    const int segments = 2 + trial % 5;
    auto rp = test::random_unconstrained(rng, degree, 3, segments);
    const SolveResult result = lqt_solve(rp.problem, rp.times);
    REQUIRE(result.converged());

    const test::DenseQp qp = test::stack_fixed_time(rp.problem, rp.times);
    const test::QpSolution oracle = test::solve_unconstrained(qp);

    const double got = result.cost_breakdown.total();
    CHECK(std::abs(got - oracle.objective) <=
          1e-9 * std::max(1.0, std::abs(oracle.objective)));

    const int md = rp.problem.shape.state_dim();
    for (int k = 0; k < segments; ++k)
      CHECK((result.inputs[k].v - oracle.v.segment(k * md, md))
                .lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("lqt output satisfies the stacked KKT conditions") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    auto rp = test::random_unconstrained(rng, 5, 3, 5);
    const SolveResult result = lqt_solve(rp.problem, rp.times);

    // oracle route: gradient of the dense objective at the solution
    const test::DenseQp qp = test::stack_fixed_time(rp.problem, rp.times);
    const int md = rp.problem.shape.state_dim();
    Eigen::VectorXd stacked(5 * md);
    for (int k = 0; k < 5; ++k) stacked.segment(k * md, md) = result.inputs[k].v;
    const Eigen::VectorXd grad = 2.0 * qp.h * stacked + 2.0 * qp.f;
    CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-8 * std::max(1.0, qp.objective(stacked)));

    // library-side scaled adjoint residual agrees
    CHECK(lqt_kkt_residual(rp.problem, rp.times, result.inputs) < 1e-8);
  }
}

TEST_CASE("lqt cost is a global minimum under random perturbations") {
  std::mt19937_64 rng(89);
  auto rp = test::random_unconstrained(rng, 5, 3, 4);
  const SolveResult result = lqt_solve(rp.problem, rp.times);
  const double best = result.cost_breakdown.total();
  const int md = rp.problem.shape.state_dim();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ControlInput> perturbed = result.inputs;
    for (auto& u : perturbed)
      u.v += test::uniform_vector(rng, md, -1e-2, 1e-2);
    const double cost = total_cost(rp.problem.x0, perturbed,
                                   rp.problem.weights, TimeMode::FixedTime,
                                   rp.problem.shape)
                            .total();
    CHECK(cost >= best - 1e-12 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("cost-to-go stays positive semidefinite along the tape") {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 10; ++trial) {
    auto rp = test::random_unconstrained(rng, trial % 2 ? 5 : 7, 3, 6);
    const LqtDynamics dyn =
        LqtDynamics::from_times(rp.times, rp.problem.weights, rp.problem.shape);
    const LqtBackwardTape tape = lqt_backward(rp.problem.weights, dyn);
    for (const auto& p : tape.cost_to_go) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
  }
}

TEST_CASE("goal-consistent stationary start stays near the waypoint") {
  // all goals equal and the start matches them: residual pull is tiny
  SplineShape shape{5, 3, 3};
  const int md = shape.state_dim();
  Weights weights;
  Eigen::VectorXd goal = Eigen::VectorXd::Zero(md);
  goal.head(3) << 1.0, -2.0, 0.5;
  for (int k = 0; k < 3; ++k) {
    weights.q.push_back(100.0 * Eigen::MatrixXd::Identity(md, md));
    weights.x_goal.push_back(goal);
    weights.eta.push_back(1e-5);
    weights.w_time.push_back(0.0);
  }
  weights.q_terminal = 100.0 * Eigen::MatrixXd::Identity(md, md);
  weights.x_goal_terminal = goal;

  Problem problem;
  problem.shape = shape;
  problem.x0 = goal;
  problem.weights = weights;
  const SolveResult result = lqt_solve(problem, {1.0, 1.0, 1.0});
  CHECK(result.cost_breakdown.total() < 1e-15);

  // residual pull bounded by what the dense oracle computes for the same data
  const test::DenseQp qp = test::stack_fixed_time(problem, {1.0, 1.0, 1.0});
  const test::QpSolution oracle = test::solve_unconstrained(qp);
  for (int k = 0; k < 3; ++k) {
    CHECK((result.inputs[k].v - oracle.v.segment(k * md, md))
              .lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(result.inputs[k].v.lpNorm<Eigen::Infinity>() <
          oracle.v.lpNorm<Eigen::Infinity>() + 1e-8);
  }
}

TEST_CASE("minimum-jerk and minimum-snap benchmark settings run") {
  // eta = 1e-5, Q = 100 I, Q_N = 100 I
  std::mt19937_64 rng(101);
  for (const int degree : {5, 7}) {
    SplineShape shape{degree, 3, 10};
    const int md = shape.state_dim();
    Weights weights;
    Eigen::VectorXd position = Eigen::VectorXd::Zero(3);
    std::vector<double> times;
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd goal = Eigen::VectorXd::Zero(md);
      goal.head(3) = position;
      weights.q.push_back(100.0 * Eigen::MatrixXd::Identity(md, md));
      weights.x_goal.push_back(goal);
      weights.eta.push_back(1e-5);
      weights.w_time.push_back(0.0);
      position += test::uniform_vector(rng, 3, -1.0, 1.0);
      times.push_back(test::uniform(rng, 0.5, 1.5));
    }
    weights.q_terminal = 100.0 * Eigen::MatrixXd::Identity(md, md);
    weights.x_goal_terminal = Eigen::VectorXd::Zero(md);
    weights.x_goal_terminal.head(3) = position;

    Problem problem;
    problem.shape = shape;
    problem.x0 = weights.x_goal[0];
    problem.weights = weights;
    const SolveResult result = lqt_solve(problem, times);
    CHECK(result.converged());
    CHECK(max_junction_mismatch(result.trajectory) < 1e-9);
    // the benchmark weights are deliberately stiff; the scaled residual
    // cannot reach the well-conditioned 1e-8 level here
    CHECK(lqt_kkt_residual(problem, times, result.inputs) < 1e-6);
  }
}

TEST_CASE("degenerate weights are rejected with the failing stage") {
  SplineShape shape{5, 1, 2};
  const int md = 3;
  Weights weights;
  for (int k = 0; k < 2; ++k) {
    weights.q.push_back(Eigen::MatrixXd::Zero(md, md));
    weights.x_goal.push_back(Eigen::VectorXd::Zero(md));
    weights.eta.push_back(0.0);  // R = 0
    weights.w_time.push_back(0.0);
  }
  weights.q_terminal = Eigen::MatrixXd::Zero(md, md);
  weights.x_goal_terminal = Eigen::VectorXd::Zero(md);

  const LqtDynamics dyn = LqtDynamics::from_times({1.0, 1.0}, weights, shape);
  CHECK_THROWS_WITH_AS(lqt_backward(weights, dyn), doctest::Contains("stage"),
                       std::runtime_error);

  Problem problem;
  problem.shape = shape;
  problem.x0 = Eigen::VectorXd::Zero(md);
  problem.weights = weights;
  CHECK_THROWS_AS(lqt_solve(problem, {1.0, 1.0}), std::invalid_argument);
}
