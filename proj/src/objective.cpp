#include "polytraj/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "internal.hpp"

namespace polytraj {

using detail::factorial;
using detail::kron_identity;
using detail::monomial_deriv;

namespace {

void check_psd(const Eigen::MatrixXd& q, const std::string& name) {
  if (q.rows() != q.cols())
    throw std::invalid_argument(name + ": matrix must be square");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument(name + ": matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument(name + ": matrix must be positive semidefinite");
}

// sum_i eta(i-1) * d^order/dt^order int_0^t b^(i)(s) b^(i)(s)^T ds over the
// lower derivative orders i = 1..m-1.  Entries are monomials in t.
Eigen::MatrixXd lower_energy_gram(double t, const Eigen::VectorXd& eta_lower,
                                  int degree, int order) {
  const int nc = degree + 1;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nc, nc);
  for (int i = 1; i <= eta_lower.size(); ++i) {
    const double eta = eta_lower(i - 1);
    if (eta == 0.0) continue;
    for (int r = i; r <= degree; ++r)
      for (int c = i; c <= degree; ++c) {
        const int p = r + c - 2 * i + 1;
        const double coeff = factorial(r) / factorial(r - i) * factorial(c) /
                             factorial(c - i) / p;
        g(r, c) += eta * coeff * monomial_deriv(p, order, t);
      }
  }
  return g;
}

bool has_lower_energy(const Weights& weights, int k) {
  return !weights.eta_lower.empty() && weights.eta_lower[k].size() > 0 &&
         weights.eta_lower[k].cwiseAbs().maxCoeff() > 0.0;
}

}  // namespace

void Weights::validate(const SplineShape& shape) const {
  const std::size_t n = static_cast<std::size_t>(shape.segments);
  const int md = shape.state_dim();
  if (q.size() != n || x_goal.size() != n || eta.size() != n ||
      w_time.size() != n)
    throw std::invalid_argument("Weights: per-stage vectors must have length N");
  for (std::size_t k = 0; k < n; ++k) {
    if (q[k].rows() != md)
      throw std::invalid_argument("Weights: Q[" + std::to_string(k) +
                                  "] dimension mismatch");
    check_psd(q[k], "Weights: Q[" + std::to_string(k) + "]");
    if (x_goal[k].size() != md)
      throw std::invalid_argument("Weights: x_goal[" + std::to_string(k) +
                                  "] dimension mismatch");
    if (eta[k] < 0.0 || w_time[k] < 0.0)
      throw std::invalid_argument("Weights: eta and w must be >= 0");
  }
  if (q_terminal.rows() != md || x_goal_terminal.size() != md)
    throw std::invalid_argument("Weights: terminal dimension mismatch");
  check_psd(q_terminal, "Weights: Q_terminal");
  if (!eta_lower.empty()) {
    if (eta_lower.size() != n)
      throw std::invalid_argument("Weights: eta_lower must have length N");
    for (const auto& e : eta_lower)
      if (e.size() > shape.half_order() - 1 || e.minCoeff() < 0.0)
        throw std::invalid_argument("Weights: invalid eta_lower entry");
  }
}

Eigen::MatrixXd rv_integral(double t, int half_order) {
  if (t <= 0.0) throw std::invalid_argument("rv_integral: t must be > 0");
  if (half_order < 1)
    throw std::invalid_argument("rv_integral: half_order must be >= 1");
  const int m = half_order;
  Eigen::MatrixXd r(m, m);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j) {
      const double psi = factorial(m + i - 1) * factorial(m + j - 1);
      r(i - 1, j - 1) = psi / (factorial(i - 1) * factorial(j - 1)) *
                        std::pow(t, i + j - 1) / (i + j - 1);
    }
  return r;
}

Eigen::MatrixXd rv_integral_deriv(double t, int half_order, int order) {
  if (t <= 0.0)
    throw std::invalid_argument("rv_integral_deriv: t must be > 0");
  if (order != 1 && order != 2)
    throw std::invalid_argument("rv_integral_deriv: order must be 1 or 2");
  const int m = half_order;
  Eigen::MatrixXd r(m, m);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j) {
      const int p = i + j - 1;
      const double psi = factorial(m + i - 1) * factorial(m + j - 1);
      const double coeff = psi / (factorial(i - 1) * factorial(j - 1)) / p;
      r(i - 1, j - 1) = coeff * monomial_deriv(p, order, t);
    }
  return r;
}

Eigen::MatrixXd input_weight(double t, double eta, double w, int half_order,
                             int dim, TimeMode mode) {
  const Eigen::MatrixXd rv = eta * kron_identity(rv_integral(t, half_order), dim);
  if (mode == TimeMode::FixedTime) return rv;
  const int md = half_order * dim;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(md + 1, md + 1);
  r.topLeftCorner(md, md) = rv;
  r(md, md) = w;
  return r;
}

StageCostEval stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                         double t, int k, const Weights& weights,
                         TimeMode mode, const SplineShape& shape) {
  const int md = shape.state_dim();
  const int m = shape.half_order();
  const int d = shape.dim;
  if (x.size() != md || v.size() != md)
    throw std::invalid_argument("stage_cost: dimension mismatch");
  const bool joint = mode == TimeMode::JointTime;
  const int du = joint ? md + 1 : md;

  StageCostEval eval;
  eval.grad_x = Eigen::VectorXd::Zero(md);
  eval.grad_u = Eigen::VectorXd::Zero(du);
  eval.hess_xx = Eigen::MatrixXd::Zero(md, md);
  eval.hess_uu = Eigen::MatrixXd::Zero(du, du);
  eval.hess_ux = Eigen::MatrixXd::Zero(du, md);

  const Eigen::VectorXd dx = x - weights.x_goal[k];
  eval.value += dx.dot(weights.q[k] * dx);
  eval.grad_x += 2.0 * weights.q[k] * dx;
  eval.hess_xx += 2.0 * weights.q[k];

  const Eigen::MatrixXd rv =
      weights.eta[k] * kron_identity(rv_integral(t, m), d);
  eval.value += v.dot(rv * v);
  eval.grad_u.head(md) += 2.0 * rv * v;
  eval.hess_uu.topLeftCorner(md, md) += 2.0 * rv;

  if (joint) {
    const Eigen::MatrixXd rv1 =
        weights.eta[k] * kron_identity(rv_integral_deriv(t, m, 1), d);
    const Eigen::MatrixXd rv2 =
        weights.eta[k] * kron_identity(rv_integral_deriv(t, m, 2), d);
    eval.grad_u(md) += v.dot(rv1 * v);
    eval.hess_uu(md, md) += v.dot(rv2 * v);
    const Eigen::VectorXd cross = 2.0 * rv1 * v;
    eval.hess_uu.col(md).head(md) += cross;
    eval.hess_uu.row(md).head(md) += cross.transpose();

    const double w = weights.w_time[k];
    eval.value += w * t * t;
    eval.grad_u(md) += 2.0 * w * t;
    eval.hess_uu(md, md) += 2.0 * w;
  }

  if (has_lower_energy(weights, k)) {
    // Remark-1 terms: energy of orders i < m couples x and v through
    // z = vect(C^T) = [diag(1/i!) x-blocks; v].
    const int nc = shape.degree + 1;
    Eigen::VectorXd z(nc * d);
    for (int i = 0; i < m; ++i)
      z.segment(i * d, d) = x.segment(i * d, d) / factorial(i);
    z.tail(md) = v;

    const auto gram = [&](int order) {
      return kron_identity(
          lower_energy_gram(t, weights.eta_lower[k], shape.degree, order), d);
    };
    const Eigen::MatrixXd e0 = gram(0);
    const Eigen::VectorXd y = e0 * z;

    eval.value += z.dot(y);
    for (int i = 0; i < m; ++i) {
      eval.grad_x.segment(i * d, d) += 2.0 * y.segment(i * d, d) / factorial(i);
      for (int j = 0; j < m; ++j)
        eval.hess_xx.block(i * d, j * d, d, d) +=
             2.0 * e0.block(i * d, j * d, d, d) / (factorial(i) * factorial(j));
      for (int j = 0; j < m; ++j)
        eval.hess_ux.block(j * d, i * d, d, d) +=
            2.0 * e0.block((m + j) * d, i * d, d, d) / factorial(i);
    }
    eval.grad_u.head(md) += 2.0 * y.tail(md);
    eval.hess_uu.topLeftCorner(md, md) +=
        2.0 * e0.bottomRightCorner(md, md);

    if (joint) {
      const Eigen::MatrixXd e1 = gram(1);
      const Eigen::MatrixXd e2 = gram(2);
      const Eigen::VectorXd y1 = e1 * z;
      eval.grad_u(md) += z.dot(y1);
      eval.hess_uu(md, md) += z.dot(e2 * z);
      eval.hess_uu.col(md).head(md) += 2.0 * y1.tail(md);
      eval.hess_uu.row(md).head(md) += 2.0 * y1.tail(md).transpose();
      for (int i = 0; i < m; ++i)
        eval.hess_ux.row(md).segment(i * d, d) +=
            2.0 * y1.segment(i * d, d).transpose() / factorial(i);
    }
  }

  return eval;
}

TerminalCostEval terminal_cost(const Eigen::VectorXd& x_final,
                               const Weights& weights) {
  TerminalCostEval eval;
  const Eigen::VectorXd dx = x_final - weights.x_goal_terminal;
  eval.value = dx.dot(weights.q_terminal * dx);
  eval.grad = 2.0 * weights.q_terminal * dx;
  eval.hess = 2.0 * weights.q_terminal;
  return eval;
}

CostBreakdown total_cost(const Eigen::VectorXd& x0,
                         const std::vector<ControlInput>& inputs,
                         const Weights& weights, TimeMode mode,
                         const SplineShape& shape) {
  const int m = shape.half_order();
  const int d = shape.dim;
  CostBreakdown sum;
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Eigen::VectorXd& v = inputs[k].v;
    const double t = inputs[k].duration;
    const Eigen::VectorXd dx = x - weights.x_goal[k];
    sum.waypoint += dx.dot(weights.q[k] * dx);
    sum.energy += v.dot(weights.eta[k] *
                        (kron_identity(rv_integral(t, m), d) * v));
    if (has_lower_energy(weights, static_cast<int>(k))) {
      const int nc = shape.degree + 1;
      Eigen::VectorXd z(nc * d);
      for (int i = 0; i < m; ++i)
        z.segment(i * d, d) = x.segment(i * d, d) / factorial(i);
      z.tail(m * d) = v;
      sum.energy += z.dot(
          kron_identity(lower_energy_gram(t, weights.eta_lower[k],
                                          shape.degree, 0), d) * z);
    }
    if (mode == TimeMode::JointTime) sum.time += weights.w_time[k] * t * t;
    x = propagate(x, inputs[k], shape);
  }
  sum.terminal = terminal_cost(x, weights).value;
  return sum;
}

}  // namespace polytraj
