#include "polytraj/ipddp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polytraj {

namespace {

constexpr double kFractionToBoundary = 0.995;
constexpr double kArmijo = 1e-4;
constexpr double kPrimalTol = 1e-8;
constexpr double kCompFactor = 5.0;
constexpr double kMeritSlack = 1e-12;

double safe_log_sum(const Eigen::VectorXd& s) {
  double sum = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) <= 0.0) return -std::numeric_limits<double>::infinity();
    sum += std::log(s(i));
  }
  return sum;
}

bool fraction_to_boundary_ok(const Eigen::VectorXd& candidate,
                             const Eigen::VectorXd& previous) {
  return (candidate.array() >= (1.0 - kFractionToBoundary) * previous.array())
      .all();
}

}  // namespace

struct IpddpSolver::StageEval {
  double cost = 0.0;
  Eigen::VectorXd lx, lu;
  Eigen::MatrixXd lxx, luu, lux;
  Eigen::MatrixXd fx, fu;
  Eigen::VectorXd x_next;
  Eigen::MatrixXd da, db, d2a, d2b;  // joint-time only
  StageConstraint con;
  ConstraintTimeCurvature curv;
};

IpddpSolver::IpddpSolver(Problem problem, SolverConfig config)
    : problem_(std::move(problem)), config_(config) {
  problem_.validate();
  if (config_.t_min <= 0.0) config_.t_min = problem_.t_min;
  if (config_.mu_min <= 0.0 || config_.mu_shrink <= 0.0 ||
      config_.mu_shrink >= 1.0 || config_.ls_backtrack <= 0.0 ||
      config_.ls_backtrack >= 1.0)
    throw std::invalid_argument("SolverConfig: parameter out of range");
  if (config_.mu_init != 0.0 && config_.mu_init <= config_.mu_min)
    throw std::invalid_argument("SolverConfig: mu_init must exceed mu_min");

  const int md = problem_.shape.state_dim();
  dim_u_ = config_.mode == TimeMode::JointTime ? md + 1 : md;
  empty_poly_.w.resize(0, problem_.shape.dim);
  empty_poly_.h.resize(0);
  rows_.resize(problem_.shape.segments);
  for (int k = 0; k < problem_.shape.segments; ++k) {
    const Polyhedron& poly =
        problem_.corridor.empty() ? empty_poly_ : problem_.corridor[k];
    rows_[k] = stage_constraint_rows(problem_.shape, poly, problem_.bounds,
                                     config_.mode);
  }
}

double IpddpSolver::duration_of(const Iterate& it, int k) const {
  if (config_.mode == TimeMode::JointTime)
    return it.inputs[k](problem_.shape.state_dim());
  return it.fixed_times[k];
}

StageConstraint IpddpSolver::stage_constraint(const Iterate& it, int k) const {
  if (rows_[k] == 0) return {};
  const int md = problem_.shape.state_dim();
  const Polyhedron& poly =
      problem_.corridor.empty() ? empty_poly_ : problem_.corridor[k];
  return assemble_stage_constraint(it.states[k], it.inputs[k].head(md),
                                   duration_of(it, k), poly, problem_.bounds,
                                   config_.t_min, problem_.basis,
                                   problem_.shape, config_.mode);
}

IpddpSolver::Iterate IpddpSolver::make_iterate(
    const std::vector<ControlInput>& inputs, double mu) const {
  const int n_seg = problem_.shape.segments;
  const int md = problem_.shape.state_dim();
  if (static_cast<int>(inputs.size()) != n_seg)
    throw std::invalid_argument("make_iterate: need one input per segment");

  Iterate it;
  it.states.resize(n_seg + 1);
  it.inputs.resize(n_seg);
  it.duals.resize(n_seg);
  if (config_.start == StartMode::Infeasible) it.slacks.resize(n_seg);
  if (config_.mode == TimeMode::FixedTime) it.fixed_times.resize(n_seg);

  it.states[0] = problem_.x0;
  for (int k = 0; k < n_seg; ++k) {
    if (inputs[k].v.size() != md)
      throw std::invalid_argument("make_iterate: control dimension mismatch");
    if (inputs[k].duration <= 0.0)
      throw std::invalid_argument("make_iterate: nonpositive duration");
    if (config_.mode == TimeMode::JointTime) {
      it.inputs[k].resize(md + 1);
      it.inputs[k] << inputs[k].v, inputs[k].duration;
    } else {
      it.inputs[k] = inputs[k].v;
      it.fixed_times[k] = inputs[k].duration;
    }
    it.states[k + 1] = propagate(it.states[k], inputs[k], problem_.shape);
  }

  for (int k = 0; k < n_seg; ++k) {
    if (rows_[k] == 0) continue;
    const Eigen::VectorXd g = stage_constraint(it, k).g;
    if (config_.start == StartMode::Feasible) {
      it.duals[k] = (mu * ((-g).cwiseMax(1e-12)).cwiseInverse())
                        .cwiseMax(1e-10)
                        .cwiseMin(1e10);
    } else {
      it.duals[k] = Eigen::VectorXd::Ones(rows_[k]);
      it.slacks[k] = (-g).cwiseMax(1e-2);
    }
  }
  refresh_metrics(it, mu);
  return it;
}

void IpddpSolver::refresh_metrics(Iterate& it, double mu) const {
  const int n_seg = problem_.shape.segments;
  const int md = problem_.shape.state_dim();
  double cost = 0.0;
  double barrier = 0.0;
  double err = 0.0;
  for (int k = 0; k < n_seg; ++k) {
    cost += stage_cost(it.states[k], it.inputs[k].head(md), duration_of(it, k),
                       k, problem_.weights, config_.mode, problem_.shape)
                .value;
    if (rows_[k] == 0) continue;
    const Eigen::VectorXd g = stage_constraint(it, k).g;
    if (config_.start == StartMode::Feasible) {
      barrier += safe_log_sum(-g);
    } else {
      barrier += safe_log_sum(it.slacks[k]);
      err = std::max(err, (g + it.slacks[k]).cwiseAbs().maxCoeff());
    }
  }
  cost += terminal_cost(it.states[n_seg], problem_.weights).value;
  it.cost = cost;
  it.merit = cost - mu * barrier;
  it.primal_error = err;
}

void IpddpSolver::recenter_duals(Iterate& it, double mu) const {
  // exact centering lambda = mu / slack at the new barrier level; stale
  // duals carried across levels put a noise floor on the stationarity
  for (int k = 0; k < problem_.shape.segments; ++k) {
    if (rows_[k] == 0) continue;
    const Eigen::VectorXd slack = config_.start == StartMode::Infeasible
                                      ? it.slacks[k]
                                      : Eigen::VectorXd(-stage_constraint(it, k).g);
    it.duals[k] = (mu * slack.cwiseMax(1e-16).cwiseInverse())
                      .cwiseMax(1e-12)
                      .cwiseMin(1e16);
  }
}

IpddpSolver::StageEval IpddpSolver::eval_stage(const Iterate& it,
                                               int k) const {
  const int md = problem_.shape.state_dim();
  const bool joint = config_.mode == TimeMode::JointTime;
  const Eigen::VectorXd& x = it.states[k];
  const Eigen::VectorXd v = it.inputs[k].head(md);
  const double t = duration_of(it, k);

  StageEval ev;
  const StageCostEval c =
      stage_cost(x, v, t, k, problem_.weights, config_.mode, problem_.shape);
  ev.cost = c.value;
  ev.lx = c.grad_x;
  ev.lu = c.grad_u;
  ev.lxx = c.hess_xx;
  ev.luu = c.hess_uu;
  ev.lux = c.hess_ux;

  const StateMatrices ab = state_matrices(t, problem_.shape);
  ev.fx = ab.A;
  ev.x_next = ab.A * x + ab.B * v;
  if (joint) {
    const StateMatrices d1 = state_matrix_time_derivs(t, problem_.shape, 1);
    const StateMatrices d2 = state_matrix_time_derivs(t, problem_.shape, 2);
    ev.da = d1.A;
    ev.db = d1.B;
    ev.d2a = d2.A;
    ev.d2b = d2.B;
    ev.fu.resize(md, md + 1);
    ev.fu << ab.B, d1.A * x + d1.B * v;
  } else {
    ev.fu = ab.B;
  }

  if (rows_[k] > 0) {
    const Polyhedron& poly =
        problem_.corridor.empty() ? empty_poly_ : problem_.corridor[k];
    ev.con = assemble_stage_constraint(x, v, t, poly, problem_.bounds,
                                       config_.t_min, problem_.basis,
                                       problem_.shape, config_.mode);
    if (joint)
      ev.curv = stage_constraint_time_curvature(x, v, t, poly, problem_.bounds,
                                                problem_.basis, problem_.shape);
  }
  return ev;
}

std::optional<IpddpSolver::Gains> IpddpSolver::backward_pass(
    const Iterate& it, double mu, double reg, bool via_block_solve) const {
  const int n_seg = problem_.shape.segments;
  const int md = problem_.shape.state_dim();
  const int du = dim_u_;
  const bool joint = config_.mode == TimeMode::JointTime;
  const bool infeasible = config_.start == StartMode::Infeasible;
  if (via_block_solve && infeasible)
    throw std::invalid_argument(
        "backward_pass: block solve applies to feasible mode only");

  Gains gains;
  gains.ku.resize(n_seg);
  gains.Ku.resize(n_seg);
  gains.klambda.resize(n_seg);
  gains.Klambda.resize(n_seg);
  if (infeasible) {
    gains.kslack.resize(n_seg);
    gains.Kslack.resize(n_seg);
  }

  const TerminalCostEval tc =
      terminal_cost(it.states[n_seg], problem_.weights);
  Eigen::VectorXd vx = tc.grad;
  Eigen::MatrixXd vxx = tc.hess;

  for (int k = n_seg - 1; k >= 0; --k) {
    const StageEval ev = eval_stage(it, k);
    const int rows = rows_[k];

    Eigen::VectorXd lu = ev.lu + ev.fu.transpose() * vx;
    Eigen::VectorXd lx = ev.lx + ev.fx.transpose() * vx;
    Eigen::MatrixXd lxx = ev.lxx + ev.fx.transpose() * vxx * ev.fx;
    Eigen::MatrixXd lux = ev.lux + ev.fu.transpose() * vxx * ev.fx;
    Eigen::MatrixXd luu = ev.luu + ev.fu.transpose() * vxx * ev.fu;
    if (joint) {
      // V_x-contracted dynamics curvature: f is linear in (x, v), so only
      // the t column/row carries second-order terms.
      const Eigen::VectorXd x = it.states[k];
      const Eigen::VectorXd v = it.inputs[k].head(md);
      lux.row(md) += vx.transpose() * ev.da;
      const Eigen::VectorXd cross = ev.db.transpose() * vx;
      luu.col(md).head(md) += cross;
      luu.row(md).head(md) += cross.transpose();
      luu(md, md) += vx.dot(ev.d2a * x + ev.d2b * v);
    }

    Eigen::VectorXd hat_lu = lu, hat_lx = lx;
    Eigen::MatrixXd hat_luu = luu, hat_lux = lux, hat_lxx = lxx;
    Eigen::VectorXd r, slack, sinv_lambda;

    if (rows > 0) {
      const Eigen::VectorXd& lambda = it.duals[k];
      if ((lambda.array() <= 0.0).any())
        throw std::invalid_argument("backward_pass: nonpositive dual");
      slack = infeasible ? it.slacks[k] : Eigen::VectorXd(-ev.con.g);
      if ((slack.array() <= 0.0).any())
        throw std::invalid_argument("backward_pass: nonpositive slack");

      lx += ev.con.jac_x.transpose() * lambda;
      lu += ev.con.jac_u.transpose() * lambda;
      if (joint) {
        // lambda-contracted constraint curvature (t-dependent rows only)
        luu(md, md) += lambda.dot(ev.curv.g_tt);
        const Eigen::VectorXd gtv = ev.curv.g_tv.transpose() * lambda;
        luu.col(md).head(md) += gtv;
        luu.row(md).head(md) += gtv.transpose();
        lux.row(md) += lambda.transpose() * ev.curv.g_tx;
      }

      r = lambda.cwiseProduct(ev.con.g) + mu * Eigen::VectorXd::Ones(rows);
      const Eigen::VectorXd sinv_r = r.cwiseQuotient(slack);
      sinv_lambda = lambda.cwiseQuotient(slack);

      hat_lu = lu + ev.con.jac_u.transpose() * sinv_r;
      hat_lx = lx + ev.con.jac_x.transpose() * sinv_r;
      const Eigen::MatrixXd scaled_gu =
          sinv_lambda.asDiagonal() * ev.con.jac_u;
      const Eigen::MatrixXd scaled_gx =
          sinv_lambda.asDiagonal() * ev.con.jac_x;
      hat_luu = luu + ev.con.jac_u.transpose() * scaled_gu;
      hat_lux = lux + ev.con.jac_u.transpose() * scaled_gx;
      hat_lxx = lxx + ev.con.jac_x.transpose() * scaled_gx;
    } else {
      hat_lu = lu;
      hat_lx = lx;
    }

    Eigen::MatrixXd h = hat_luu + reg * Eigen::MatrixXd::Identity(du, du);
    h = 0.5 * (h + h.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) return std::nullopt;

    if (via_block_solve && rows > 0) {
      // Primal-dual KKT block system with the right-hand side as printed;
      // must agree with the slack-eliminated path to round-off.
      const int dim = du + rows;
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
      kkt.topLeftCorner(du, du) =
          luu + reg * Eigen::MatrixXd::Identity(du, du);
      kkt.topRightCorner(du, rows) = ev.con.jac_u.transpose();
      kkt.bottomLeftCorner(rows, du) =
          it.duals[k].asDiagonal() * ev.con.jac_u;
      kkt.bottomRightCorner(rows, rows) =
          Eigen::MatrixXd(ev.con.g.asDiagonal());
      Eigen::MatrixXd rhs(dim, 1 + md);
      rhs.topLeftCorner(du, 1) = lu;
      rhs.topRightCorner(du, md) = lux;
      rhs.bottomLeftCorner(rows, 1) = r;
      rhs.bottomRightCorner(rows, md) = it.duals[k].asDiagonal() * ev.con.jac_x;
      const Eigen::MatrixXd sol = -kkt.partialPivLu().solve(rhs);
      gains.ku[k] = sol.topLeftCorner(du, 1);
      gains.Ku[k] = sol.topRightCorner(du, md);
      gains.klambda[k] = sol.bottomLeftCorner(rows, 1);
      gains.Klambda[k] = sol.bottomRightCorner(rows, md);
    } else {
      gains.ku[k] = -llt.solve(hat_lu);
      gains.Ku[k] = -llt.solve(hat_lux);
      if (rows > 0) {
        gains.klambda[k] =
            (r + it.duals[k].cwiseProduct(ev.con.jac_u * gains.ku[k]))
                .cwiseQuotient(slack);
        gains.Klambda[k] =
            sinv_lambda.asDiagonal() *
            (ev.con.jac_x + ev.con.jac_u * gains.Ku[k]);
      }
    }
    if (rows > 0 && infeasible) {
      const Eigen::VectorXd rp = ev.con.g + it.slacks[k];
      gains.kslack[k] = -(rp + ev.con.jac_u * gains.ku[k]);
      gains.Kslack[k] = -(ev.con.jac_x + ev.con.jac_u * gains.Ku[k]);
    }

    const Eigen::VectorXd& ku = gains.ku[k];
    const Eigen::MatrixXd& Ku = gains.Ku[k];
    vx = hat_lx + Ku.transpose() * (h * ku) + Ku.transpose() * hat_lu +
         hat_lux.transpose() * ku;
    vxx = hat_lxx + Ku.transpose() * hat_lux + hat_lux.transpose() * Ku +
          Ku.transpose() * h * Ku;
    vxx = 0.5 * (vxx + vxx.transpose());

    gains.hessian_scale =
        std::max(gains.hessian_scale, hat_luu.diagonal().maxCoeff());
    gains.stationarity =
        std::max(gains.stationarity, lu.lpNorm<Eigen::Infinity>());
    gains.stationarity_reduced =
        std::max(gains.stationarity_reduced, hat_lu.lpNorm<Eigen::Infinity>());
    if (rows > 0)
      gains.comp_residual =
          std::max(gains.comp_residual, r.lpNorm<Eigen::Infinity>());
    gains.dv1 += hat_lu.dot(ku);
    gains.dv2 += 0.5 * ku.dot(h * ku);
  }
  return gains;
}

std::optional<IpddpSolver::StepResult> IpddpSolver::forward_pass(
    const Iterate& it, const Gains& gains, double mu) const {
  const int n_seg = problem_.shape.segments;
  const int md = problem_.shape.state_dim();
  const bool joint = config_.mode == TimeMode::JointTime;
  const bool infeasible = config_.start == StartMode::Infeasible;
  const double expected_dec = std::max(-gains.dv1, 0.0);

  double alpha = 1.0;
  for (int trial = 0; trial < config_.ls_max_steps;
       ++trial, alpha *= config_.ls_backtrack) {
    Iterate cand = it;
    cand.states[0] = it.states[0];
    double cost = 0.0;
    double barrier = 0.0;
    double err = 0.0;
    bool rejected = false;

    for (int k = 0; k < n_seg && !rejected; ++k) {
      const Eigen::VectorXd dx = cand.states[k] - it.states[k];
      cand.inputs[k] = it.inputs[k] + alpha * gains.ku[k] + gains.Ku[k] * dx;
      double t;
      if (joint) {
        t = cand.inputs[k](md);
        if (t <= 1e-9 || !std::isfinite(t)) {
          rejected = true;
          break;
        }
      } else {
        t = it.fixed_times[k];
      }
      const Eigen::VectorXd v = cand.inputs[k].head(md);

      if (rows_[k] > 0) {
        cand.duals[k] =
            it.duals[k] + alpha * gains.klambda[k] + gains.Klambda[k] * dx;
        if (!fraction_to_boundary_ok(cand.duals[k], it.duals[k])) {
          rejected = true;
          break;
        }
        const Eigen::VectorXd g = stage_constraint(cand, k).g;
        if (infeasible) {
          cand.slacks[k] =
              it.slacks[k] + alpha * gains.kslack[k] + gains.Kslack[k] * dx;
          if (!fraction_to_boundary_ok(cand.slacks[k], it.slacks[k])) {
            rejected = true;
            break;
          }
          barrier += safe_log_sum(cand.slacks[k]);
          err = std::max(err, (g + cand.slacks[k]).cwiseAbs().maxCoeff());
        } else {
          if (!fraction_to_boundary_ok(-g, -stage_constraint(it, k).g)) {
            rejected = true;
            break;
          }
          barrier += safe_log_sum(-g);
        }
      }

      cost += stage_cost(cand.states[k], v, t, k, problem_.weights,
                         config_.mode, problem_.shape)
                  .value;
      const StateMatrices ab = state_matrices(t, problem_.shape);
      cand.states[k + 1] = ab.A * cand.states[k] + ab.B * v;
    }
    if (rejected) continue;

    cost += terminal_cost(cand.states[n_seg], problem_.weights).value;
    const double merit = cost - mu * barrier;
    if (!std::isfinite(merit)) continue;

    const double merit_threshold =
        it.merit - kArmijo * alpha * expected_dec +
        kMeritSlack * (1.0 + std::abs(it.merit));
    bool accept;
    if (!infeasible) {
      accept = merit <= merit_threshold;
    } else {
      const bool merit_ok =
          merit <= merit_threshold &&
          err <= it.primal_error + kMeritSlack * (1.0 + it.primal_error);
      const bool err_ok = err <= (1.0 - kArmijo * alpha) * it.primal_error;
      accept = merit_ok || err_ok;
    }
    if (!accept) continue;

    cand.cost = cost;
    cand.merit = merit;
    cand.primal_error = err;
    return StepResult{std::move(cand), alpha};
  }
  return std::nullopt;
}

SolveResult IpddpSolver::solve(const std::vector<ControlInput>& initial_inputs) {
  const int n_seg = problem_.shape.segments;
  const int md = problem_.shape.state_dim();
  const bool infeasible = config_.start == StartMode::Infeasible;

  SolveResult result;
  int total_rows = 0;
  for (int k = 0; k < n_seg; ++k) total_rows += rows_[k];

  double mu = config_.mu_min;
  Iterate it;
  try {
    it = make_iterate(initial_inputs, config_.mu_min);
  } catch (const std::invalid_argument&) {
    result.status = SolveStatus::InfeasibleInput;
    return result;
  }
  if (total_rows > 0) {
    mu = config_.mu_init > 0.0
             ? config_.mu_init
             : std::max(1.0, it.cost / static_cast<double>(total_rows));
    it = make_iterate(initial_inputs, mu);
  }

  if (!infeasible && total_rows > 0) {
    for (int k = 0; k < n_seg; ++k) {
      if (rows_[k] == 0) continue;
      if (stage_constraint(it, k).g.maxCoeff() >= 0.0) {
        result.status = SolveStatus::InfeasibleInput;
        return result;
      }
    }
  }

  double reg = config_.reg_init;
  result.status = SolveStatus::MaxIterations;

  for (int iter = 0; iter < config_.max_iterations; ++iter) {
    std::optional<Gains> gains;
    while (true) {
      gains = backward_pass(it, mu, reg);
      if (gains) break;
      if (reg >= config_.reg_max) {
        result.status = SolveStatus::RegularizationFailed;
        gains.reset();
        break;
      }
      reg = std::max(10.0 * reg, 1e-6);
    }
    if (!gains) break;

    const bool comp_ok =
        total_rows == 0 || gains->comp_residual <= kCompFactor * mu;
    const bool mu_done = total_rows == 0 || mu <= config_.mu_min * (1.0 + 1e-12);
    const bool primal_done = !infeasible || it.primal_error <= kPrimalTol;
    const double measure =
        std::min(gains->stationarity, gains->stationarity_reduced);
    // Newton decrement in the curvature metric: active-set Schur terms of
    // size lambda^2/mu put an eps-level absolute floor under |L_u| that the
    // step itself is far below.
    const bool decrement_ok =
        reg <= 1e-10 * std::max(1.0, gains->hessian_scale) &&
        std::abs(gains->dv1) <=
            config_.opt_tol * config_.opt_tol * std::max(1.0, std::abs(it.cost));
    if ((measure <= config_.opt_tol || decrement_ok) && comp_ok && mu_done &&
        primal_done) {
      result.status = SolveStatus::Converged;
      break;
    }

    const bool inner_done =
        (measure <= std::max(config_.opt_tol, 10.0 * mu) || decrement_ok) &&
        comp_ok;
    if (inner_done && total_rows > 0 && !mu_done) {
      mu = std::max(config_.mu_min,
                    std::min(config_.mu_shrink * mu, std::pow(mu, 1.2)));
      recenter_duals(it, mu);
      refresh_metrics(it, mu);
      continue;
    }

    const auto step = forward_pass(it, *gains, mu);
    if (!step) {
      if (reg >= config_.reg_max) {
        result.status = SolveStatus::LineSearchFailed;
        break;
      }
      reg = std::max(10.0 * reg, 1e-6);
      continue;
    }
    it = step->iterate;
    reg = reg <= 1e-6 ? 0.0 : 0.1 * reg;

    IterationRecord rec;
    rec.cost = it.cost;
    rec.stationarity = gains->stationarity;
    rec.mu = mu;
    rec.step_length = step->step;
    rec.regularization = reg;
    double min_slack = std::numeric_limits<double>::infinity();
    double violation = 0.0;
    for (int k = 0; k < n_seg; ++k) {
      if (rows_[k] == 0) continue;
      const Eigen::VectorXd g = stage_constraint(it, k).g;
      if (infeasible) {
        min_slack = std::min(min_slack, it.slacks[k].minCoeff());
        violation = std::max(violation,
                             (g + it.slacks[k]).cwiseAbs().maxCoeff());
      } else {
        min_slack = std::min(min_slack, (-g).minCoeff());
        violation = std::max(violation, g.maxCoeff());
      }
    }
    rec.min_slack = std::isfinite(min_slack) ? min_slack : 0.0;
    rec.constraint_violation = violation;
    result.trace.push_back(rec);

    if (infeasible && config_.stop_at_feasible &&
        it.primal_error <= kPrimalTol) {
      double max_g = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < n_seg; ++k)
        if (rows_[k] > 0)
          max_g = std::max(max_g, stage_constraint(it, k).g.maxCoeff());
      if (max_g <= -kStrictFeasibilityMargin) {
        result.status = SolveStatus::Converged;
        break;
      }
    }
  }

  result.inputs.resize(n_seg);
  for (int k = 0; k < n_seg; ++k) {
    result.inputs[k].v = it.inputs[k].head(md);
    result.inputs[k].duration = duration_of(it, k);
  }
  result.trajectory = rollout(problem_.x0, result.inputs, problem_.shape);
  result.duals = it.duals;
  result.cost_breakdown = total_cost(problem_.x0, result.inputs,
                                     problem_.weights, config_.mode,
                                     problem_.shape);
  return result;
}

SolveResult solve_ipddp(const Problem& problem, const SolverConfig& config,
                        const std::vector<ControlInput>& initial_inputs) {
  SolverConfig cfg = config;
  cfg.start = StartMode::Feasible;
  try {
    IpddpSolver solver(problem, cfg);
    return solver.solve(initial_inputs);
  } catch (const std::invalid_argument&) {
    SolveResult result;
    result.status = SolveStatus::InfeasibleInput;
    return result;
  }
}

SolveResult solve_ipddp_infeasible(const Problem& problem,
                                   const SolverConfig& config,
                                   const std::vector<ControlInput>& initial_inputs) {
  SolverConfig cfg = config;
  cfg.start = StartMode::Infeasible;
  try {
    IpddpSolver solver(problem, cfg);
    return solver.solve(initial_inputs);
  } catch (const std::invalid_argument&) {
    SolveResult result;
    result.status = SolveStatus::InfeasibleInput;
    return result;
  }
}

PipelineResult pipeline_three_stage(const Problem& problem,
                                    const std::vector<ControlInput>& initial_inputs,
                                    const PipelineConfig& config) {
  PipelineResult out;
  for (const auto& u : initial_inputs) out.initial_total_time += u.duration;

  const int md = problem.shape.state_dim();
  const auto with_weights = [&](double w, double q_terminal) {
    Problem p = problem;
    for (auto& wk : p.weights.w_time) wk = w;
    p.weights.q_terminal =
        q_terminal * Eigen::MatrixXd::Identity(md, md);
    return p;
  };

  // Feasibility is recovered at the heuristic time allocation; the stage
  // constraints are then linear in (x, v) and the slack Newton steps close
  // the residual in a handful of iterations.  Durations start moving in the
  // joint stage, which begins strictly feasible.
  SolverConfig stage1 = config.solver;
  stage1.mode = TimeMode::FixedTime;
  stage1.stop_at_feasible = true;
  out.feasibility = solve_ipddp_infeasible(
      with_weights(config.stage1_w, config.stage1_q_terminal), stage1,
      initial_inputs);
  if (!out.feasibility.converged()) {
    out.failed_stage = 1;
    return out;
  }

  SolverConfig stage2 = config.solver;
  stage2.mode = TimeMode::JointTime;
  out.joint = solve_ipddp(with_weights(config.stage2_w, config.stage2_q_terminal),
                          stage2, out.feasibility.inputs);
  if (!out.joint.converged()) {
    out.failed_stage = 2;
    return out;
  }

  SolverConfig stage3 = config.solver;
  stage3.mode = TimeMode::FixedTime;
  // warm start: the joint stage hands over a barrier-central point, so the
  // polish resumes at a small perturbation instead of the cold-start value
  if (stage3.mu_init == 0.0) stage3.mu_init = 1e-6;
  out.polish = solve_ipddp(with_weights(config.stage2_w, config.stage2_q_terminal),
                           stage3, out.joint.inputs);
  if (!out.polish.converged()) {
    out.failed_stage = 3;
    return out;
  }

  for (const auto& u : out.polish.inputs)
    out.optimized_total_time += u.duration;
  out.reduction_rate =
      (out.initial_total_time - out.optimized_total_time) /
      out.initial_total_time;
  return out;
}

}  // namespace polytraj
