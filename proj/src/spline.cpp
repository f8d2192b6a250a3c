#include "polytraj/spline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "internal.hpp"

namespace polytraj {

using detail::factorial;
using detail::kron_identity;
using detail::monomial_deriv;

void SplineShape::validate() const {
  if (degree < 3 || degree % 2 == 0)
    throw std::invalid_argument("SplineShape: degree must be odd and >= 3");
  if (dim < 1) throw std::invalid_argument("SplineShape: dim must be >= 1");
  if (segments < 1)
    throw std::invalid_argument("SplineShape: segments must be >= 1");
}

Eigen::VectorXd monomial_basis(double t, int degree, int order) {
  if (t < 0.0) throw std::invalid_argument("monomial_basis: t must be >= 0");
  if (order < 0) throw std::invalid_argument("monomial_basis: order < 0");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(degree + 1);
  for (int r = order; r <= degree; ++r) b(r) = monomial_deriv(r, order, t);
  return b;
}

FBlocks f_blocks(double t, int half_order) {
  const int m = half_order;
  if (m < 1) throw std::invalid_argument("f_blocks: half_order must be >= 1");
  FBlocks f;
  f.f11 = Eigen::MatrixXd::Zero(m, m);
  f.f21 = Eigen::MatrixXd::Zero(m, m);
  f.f22 = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i <= m; ++i) {
    f.f11(i - 1, i - 1) = factorial(i - 1);
    for (int j = 1; j <= m; ++j) {
      if (i <= j)
        f.f21(i - 1, j - 1) =
            factorial(j - 1) / factorial(j - i) * std::pow(t, j - i);
      f.f22(i - 1, j - 1) = factorial(m + j - 1) / factorial(m + j - i) *
                            std::pow(t, m + j - i);
    }
  }
  return f;
}

StateMatrices state_matrices(double t, const SplineShape& shape) {
  shape.validate();
  if (t <= 0.0)
    throw std::invalid_argument("state_matrices: t must be > 0");
  const int m = shape.half_order();
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd f22 = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j) {
      if (i <= j) chain(i - 1, j - 1) = std::pow(t, j - i) / factorial(j - i);
      f22(i - 1, j - 1) = factorial(m + j - 1) / factorial(m + j - i) *
                          std::pow(t, m + j - i);
    }
  return {kron_identity(chain, shape.dim), kron_identity(f22, shape.dim)};
}

StateMatrices state_matrix_time_derivs(double t, const SplineShape& shape,
                                       int order) {
  shape.validate();
  if (t <= 0.0)
    throw std::invalid_argument("state_matrix_time_derivs: t must be > 0");
  if (order != 1 && order != 2)
    throw std::invalid_argument("state_matrix_time_derivs: order must be 1 or 2");
  const int m = shape.half_order();
  Eigen::MatrixXd dchain = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd df22 = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j) {
      if (i <= j)
        dchain(i - 1, j - 1) = monomial_deriv(j - i, order, t) / factorial(j - i);
      df22(i - 1, j - 1) = factorial(m + j - 1) / factorial(m + j - i) *
                           monomial_deriv(m + j - i, order, t);
    }
  return {kron_identity(dchain, shape.dim), kron_identity(df22, shape.dim)};
}

Eigen::VectorXd propagate(const Eigen::VectorXd& x, const ControlInput& u,
                          const SplineShape& shape) {
  const int md = shape.state_dim();
  if (x.size() != md || u.v.size() != md)
    throw std::invalid_argument("propagate: state/control dimension mismatch");
  if (u.duration <= 0.0)
    throw std::invalid_argument("propagate: duration must be > 0");
  const StateMatrices ab = state_matrices(u.duration, shape);
  return ab.A * x + ab.B * u.v;
}

SegmentCoeffs coeffs_from(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                          double t, const SplineShape& shape) {
  const int m = shape.half_order();
  const int d = shape.dim;
  if (x.size() != m * d || v.size() != m * d)
    throw std::invalid_argument("coeffs_from: dimension mismatch");
  SegmentCoeffs seg;
  seg.coeffs = Eigen::MatrixXd::Zero(shape.degree + 1, d);
  for (int i = 0; i < m; ++i) {
    seg.coeffs.row(i) = x.segment(i * d, d).transpose() / factorial(i);
    seg.coeffs.row(m + i) = v.segment(i * d, d).transpose();
  }
  seg.duration = t;
  return seg;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> state_control_from(
    const SegmentCoeffs& seg, const SplineShape& shape) {
  const int m = shape.half_order();
  const int d = shape.dim;
  if (seg.coeffs.rows() != shape.degree + 1 || seg.coeffs.cols() != d)
    throw std::invalid_argument("state_control_from: coefficient shape mismatch");
  Eigen::VectorXd x(m * d), v(m * d);
  for (int i = 0; i < m; ++i) {
    x.segment(i * d, d) = seg.coeffs.row(i).transpose() * factorial(i);
    v.segment(i * d, d) = seg.coeffs.row(m + i).transpose();
  }
  return {x, v};
}

PiecewiseTrajectory rollout(const Eigen::VectorXd& x0,
                            const std::vector<ControlInput>& inputs,
                            const SplineShape& shape,
                            std::vector<Eigen::VectorXd>* states) {
  shape.validate();
  if (inputs.empty()) throw std::invalid_argument("rollout: no inputs");
  if (static_cast<int>(inputs.size()) != shape.segments)
    throw std::invalid_argument("rollout: input count does not match shape");
  PiecewiseTrajectory traj;
  traj.shape = shape;
  traj.segments.reserve(inputs.size());
  if (states) {
    states->clear();
    states->push_back(x0);
  }
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].duration <= 0.0)
      throw std::invalid_argument("rollout: invalid duration at segment " +
                                  std::to_string(k));
    traj.segments.push_back(coeffs_from(x, inputs[k].v, inputs[k].duration, shape));
    x = propagate(x, inputs[k], shape);
    if (states) states->push_back(x);
  }
  return traj;
}

double PiecewiseTrajectory::total_duration() const {
  double total = 0.0;
  for (const auto& seg : segments) total += seg.duration;
  return total;
}

double max_junction_mismatch(const PiecewiseTrajectory& traj) {
  const int m = traj.shape.half_order();
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < traj.segments.size(); ++k) {
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd left =
          traj.segments[k].coeffs.transpose() *
          monomial_basis(traj.segments[k].duration, traj.shape.degree, i);
      const Eigen::VectorXd right =
          traj.segments[k + 1].coeffs.transpose() *
          monomial_basis(0.0, traj.shape.degree, i);
      worst = std::max(worst, (left - right).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

Eigen::VectorXd PiecewiseTrajectory::evaluate(double t, int order) const {
  const double total = total_duration();
  if (t < 0.0 || t > total + 1e-12)
    throw std::invalid_argument("evaluate: time outside trajectory range");
  std::size_t k = 0;
  double local = t;
  while (k + 1 < segments.size() && local >= segments[k].duration) {
    local -= segments[k].duration;
    ++k;
  }
  local = std::min(local, segments[k].duration);
  return segments[k].coeffs.transpose() *
         monomial_basis(local, shape.degree, order);
}

}  // namespace polytraj
