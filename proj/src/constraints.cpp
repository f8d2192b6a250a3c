#include "polytraj/constraints.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "internal.hpp"

namespace polytraj {

using detail::factorial;
using detail::monomial_deriv;

namespace {

double binomial(int a, int b) {
  return factorial(a) / (factorial(b) * factorial(a - b));
}

Eigen::MatrixXd bernstein_table(int degree) {
  // Monomial s^r expands as sum_{l>=r} C(l,r)/C(q,r) B_{l,q}(s).
  const int q = degree;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(q + 1, q + 1);
  for (int l = 0; l <= q; ++l)
    for (int r = 0; r <= l; ++r) t(l, r) = binomial(l, r) / binomial(q, r);
  return t;
}

// Coefficient map from segment coefficients to the monomial coefficients of
// q(s) = p^(i)(s t) on s in [0,1]; t_deriv differentiates entrywise in t.
Eigen::MatrixXd deriv_rescale_map(double t, int degree, int order,
                                  int t_deriv) {
  const int rows = degree + 1 - order;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, degree + 1);
  for (int r = 0; r < rows; ++r)
    d(r, r + order) = factorial(r + order) / factorial(r) *
                      monomial_deriv(r, t_deriv, t);
  return d;
}

struct RowMap {
  Eigen::MatrixXd m;       // rows x (n+1)d acting on vect(C^T)
  Eigen::VectorXd offset;  // subtracted from m*z; only meaningful at t_deriv 0
  std::vector<std::string> labels;
};

RowMap build_row_map(double t, int t_deriv, const Polyhedron& poly,
                     const DerivBounds& bounds,
                     const ControlPointBasis& basis,
                     const SplineShape& shape) {
  const int n = shape.degree;
  const int d = shape.dim;
  const int s = static_cast<int>(poly.w.rows());

  int rows = (n + 1) * s;
  for (const auto& [order, range] : bounds.by_order)
    rows += 2 * d * (n + 1 - order);

  RowMap map;
  map.m = Eigen::MatrixXd::Zero(rows, (n + 1) * d);
  map.offset = Eigen::VectorXd::Zero(rows);
  map.labels.reserve(rows);

  const Eigen::MatrixXd t0 =
      basis.conversion(n) * deriv_rescale_map(t, n, 0, t_deriv);
  int row = 0;
  for (int l = 0; l <= n; ++l)
    for (int f = 0; f < s; ++f) {
      for (int col = 0; col <= n; ++col)
        map.m.block(row, col * d, 1, d) = t0(l, col) * poly.w.row(f);
      map.offset(row) = poly.h(f);
      map.labels.push_back("corridor[point=" + std::to_string(l) +
                           ",face=" + std::to_string(f) + "]");
      ++row;
    }

  for (const auto& [order, range] : bounds.by_order) {
    const Eigen::MatrixXd ti = basis.conversion(n - order) *
                               deriv_rescale_map(t, n, order, t_deriv);
    const int npts = n + 1 - order;
    for (int sign = 0; sign < 2; ++sign) {
      const double dir = sign == 0 ? -1.0 : 1.0;
      for (int l = 0; l < npts; ++l)
        for (int axis = 0; axis < d; ++axis) {
          for (int col = 0; col <= n; ++col)
            map.m(row, col * d + axis) = dir * ti(l, col);
          map.offset(row) = sign == 0 ? -range.lower : range.upper;
          map.labels.push_back(
              "deriv[order=" + std::to_string(order) +
              (sign == 0 ? ",lower" : ",upper") +
              ",point=" + std::to_string(l) + ",axis=" + std::to_string(axis) +
              "]");
          ++row;
        }
    }
  }
  return map;
}

// vect(C^T) as a function of (x, v): low-order blocks are x blocks scaled by
// 1/i!, high-order blocks are v.
Eigen::VectorXd coefficient_vector(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& v,
                                   const SplineShape& shape) {
  const int m = shape.half_order();
  const int d = shape.dim;
  Eigen::VectorXd z((shape.degree + 1) * d);
  for (int i = 0; i < m; ++i)
    z.segment(i * d, d) = x.segment(i * d, d) / factorial(i);
  z.tail(m * d) = v;
  return z;
}

Eigen::MatrixXd x_block_scaling(const SplineShape& shape) {
  const int m = shape.half_order();
  const int d = shape.dim;
  Eigen::MatrixXd sx = Eigen::MatrixXd::Zero(m * d, m * d);
  for (int i = 0; i < m; ++i)
    sx.block(i * d, i * d, d, d) =
        Eigen::MatrixXd::Identity(d, d) / factorial(i);
  return sx;
}

}  // namespace

void Polyhedron::validate(int dim) const {
  if (w.rows() < 1 || w.rows() != h.size())
    throw std::invalid_argument("Polyhedron: need s >= 1 rows with offsets");
  if (w.cols() != dim)
    throw std::invalid_argument("Polyhedron: normal dimension mismatch");
  for (int f = 0; f < w.rows(); ++f)
    if (w.row(f).norm() < 1e-12)
      throw std::invalid_argument("Polyhedron: zero normal in row " +
                                  std::to_string(f));
}

bool Polyhedron::contains(const Eigen::VectorXd& p, double margin) const {
  return ((w * p - h).array() <= -margin).all();
}

bool Polyhedron::likely_degenerate() const {
  for (int i = 0; i < w.rows(); ++i)
    for (int j = i + 1; j < w.rows(); ++j) {
      const double ni = w.row(i).norm(), nj = w.row(j).norm();
      if ((w.row(i) / ni + w.row(j) / nj).norm() < 1e-9 &&
          h(i) / ni + h(j) / nj < 1e-9)
        return true;
    }
  return false;
}

void DerivBounds::validate(int half_order) const {
  for (const auto& [order, range] : by_order) {
    if (order < 1 || order > half_order - 1)
      throw std::invalid_argument("DerivBounds: order " +
                                  std::to_string(order) +
                                  " outside [1, m-1]");
    if (!(range.lower < 0.0) || !(range.upper > 0.0))
      throw std::invalid_argument(
          "DerivBounds: bounds must satisfy lower < 0 < upper");
  }
}

ControlPointBasis ControlPointBasis::bernstein(int max_degree) {
  ControlPointBasis basis;
  basis.kind_ = BasisKind::Bernstein;
  for (int q = 0; q <= max_degree; ++q) {
    Eigen::MatrixXd table = bernstein_table(q);
    if (q >= 1) certify_convex_hull(table, q, 2000, 0x5eedu + q);
    basis.tables_[q] = std::move(table);
  }
  return basis;
}

ControlPointBasis ControlPointBasis::load_minvo(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("ControlPointBasis: cannot open table file " +
                                path);
  ControlPointBasis basis;
  basis.kind_ = BasisKind::Minvo;
  std::string line;
  int pending_degree = -1;
  std::vector<double> values;
  auto flush = [&]() {
    if (pending_degree < 0) return;
    const int q = pending_degree;
    const int side = q + 1;
    if (static_cast<int>(values.size()) != side * side)
      throw std::invalid_argument(
          "ControlPointBasis: degree " + std::to_string(q) + " table needs " +
          std::to_string(side * side) + " entries");
    Eigen::MatrixXd table(side, side);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) table(r, c) = values[r * side + c];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(table);
    if (!lu.isInvertible())
      throw std::invalid_argument("ControlPointBasis: degree " +
                                  std::to_string(q) + " table is singular");
    if (q >= 1) certify_convex_hull(table, q, 10000, 0x5eedu + q);
    basis.tables_[q] = std::move(table);
    values.clear();
  };
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "degree") {
      flush();
      if (!(ls >> pending_degree) || pending_degree < 0)
        throw std::invalid_argument("ControlPointBasis: malformed degree line");
    } else {
      if (pending_degree < 0)
        throw std::invalid_argument(
            "ControlPointBasis: data before any degree header");
      std::istringstream vs(line);
      double v;
      while (vs >> v) values.push_back(v);
    }
  }
  flush();
  if (basis.tables_.empty())
    throw std::invalid_argument("ControlPointBasis: table file has no entries");
  return basis;
}

bool ControlPointBasis::has_degree(int degree) const {
  return tables_.count(degree) > 0;
}

const Eigen::MatrixXd& ControlPointBasis::conversion(int degree) const {
  const auto it = tables_.find(degree);
  if (it == tables_.end())
    throw std::invalid_argument("ControlPointBasis: no table for degree " +
                                std::to_string(degree));
  return it->second;
}

void ControlPointBasis::certify_convex_hull(const Eigen::MatrixXd& table,
                                            int degree, int count,
                                            unsigned seed) {
  if (table.rows() != degree + 1 || table.cols() != degree + 1)
    throw std::invalid_argument("certify_convex_hull: table shape mismatch");
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng]() {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  };
  constexpr int kSamples = 33;
  Eigen::VectorXd a(degree + 1);
  for (int trial = 0; trial < count; ++trial) {
    for (int r = 0; r <= degree; ++r) a(r) = uniform();
    const Eigen::VectorXd points = table * a;
    const double lo = points.minCoeff() - 1e-9;
    const double hi = points.maxCoeff() + 1e-9;
    for (int j = 0; j < kSamples; ++j) {
      const double s = static_cast<double>(j) / (kSamples - 1);
      double val = 0.0;
      for (int r = degree; r >= 0; --r) val = val * s + a(r);
      if (val < lo || val > hi)
        throw std::invalid_argument(
            "certify_convex_hull: degree " + std::to_string(degree) +
            " table violates the convex-hull property");
    }
  }
}

Eigen::MatrixXd control_points(const SegmentCoeffs& seg, int order,
                               const ControlPointBasis& basis) {
  const int n = static_cast<int>(seg.coeffs.rows()) - 1;
  const int m = (n + 1) / 2;
  if (order < 0 || order >= m)
    throw std::invalid_argument("control_points: order must be in [0, m-1]");
  return basis.conversion(n - order) *
         (deriv_rescale_map(seg.duration, n, order, 0) * seg.coeffs);
}

int stage_constraint_rows(const SplineShape& shape, const Polyhedron& poly,
                          const DerivBounds& bounds, TimeMode mode) {
  int rows = (shape.degree + 1) * static_cast<int>(poly.w.rows());
  for (const auto& [order, range] : bounds.by_order)
    rows += 2 * shape.dim * (shape.degree + 1 - order);
  if (mode == TimeMode::JointTime) rows += 1;
  return rows;
}

StageConstraint assemble_stage_constraint(
    const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t,
    const Polyhedron& poly, const DerivBounds& bounds, double t_min,
    const ControlPointBasis& basis, const SplineShape& shape, TimeMode mode) {
  const int md = shape.state_dim();
  if (x.size() != md || v.size() != md)
    throw std::invalid_argument("assemble_stage_constraint: dimension mismatch");
  poly.validate(shape.dim);
  bounds.validate(shape.half_order());

  const RowMap map = build_row_map(t, 0, poly, bounds, basis, shape);
  const Eigen::VectorXd z = coefficient_vector(x, v, shape);
  const int core = static_cast<int>(map.m.rows());
  const bool joint = mode == TimeMode::JointTime;
  const int rows = core + (joint ? 1 : 0);
  const int du = joint ? md + 1 : md;

  StageConstraint sc;
  sc.g = Eigen::VectorXd::Zero(rows);
  sc.jac_x = Eigen::MatrixXd::Zero(rows, md);
  sc.jac_u = Eigen::MatrixXd::Zero(rows, du);
  sc.row_labels = map.labels;

  sc.g.head(core) = map.m * z - map.offset;
  sc.jac_x.topRows(core) = map.m.leftCols(md) * x_block_scaling(shape);
  sc.jac_u.topLeftCorner(core, md) = map.m.rightCols(md);
  if (joint) {
    const RowMap dmap = build_row_map(t, 1, poly, bounds, basis, shape);
    sc.jac_u.col(md).head(core) = dmap.m * z;
    sc.g(core) = t_min - t;
    sc.jac_u(core, md) = -1.0;
    sc.row_labels.push_back("time");
  }
  return sc;
}

ConstraintTimeCurvature stage_constraint_time_curvature(
    const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t,
    const Polyhedron& poly, const DerivBounds& bounds,
    const ControlPointBasis& basis, const SplineShape& shape) {
  const int md = shape.state_dim();
  const RowMap d1 = build_row_map(t, 1, poly, bounds, basis, shape);
  const RowMap d2 = build_row_map(t, 2, poly, bounds, basis, shape);
  const Eigen::VectorXd z = coefficient_vector(x, v, shape);
  const int core = static_cast<int>(d1.m.rows());

  ConstraintTimeCurvature cc;  // trailing zero row is the duration row
  cc.g_tt = Eigen::VectorXd::Zero(core + 1);
  cc.g_tx = Eigen::MatrixXd::Zero(core + 1, md);
  cc.g_tv = Eigen::MatrixXd::Zero(core + 1, md);
  cc.g_tt.head(core) = d2.m * z;
  cc.g_tx.topRows(core) = d1.m.leftCols(md) * x_block_scaling(shape);
  cc.g_tv.topRows(core) = d1.m.rightCols(md);
  return cc;
}

FeasibilityReport check_feasibility(const PiecewiseTrajectory& traj,
                                    const std::vector<Polyhedron>& corridor,
                                    const DerivBounds& bounds,
                                    const ControlPointBasis& basis,
                                    int samples) {
  if (!corridor.empty() && corridor.size() != traj.segments.size())
    throw std::invalid_argument(
        "check_feasibility: corridor length must equal segment count");
  if (samples < 2)
    throw std::invalid_argument("check_feasibility: need at least 2 samples");
  const int n = traj.shape.degree;
  const bool has_corridor = !corridor.empty();

  FeasibilityReport report;
  report.control_point_margin = -std::numeric_limits<double>::infinity();
  report.corridor_sample_margin = -std::numeric_limits<double>::infinity();
  report.bound_sample_margin = -std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < traj.segments.size(); ++k) {
    const SegmentCoeffs& seg = traj.segments[k];

    if (has_corridor) {
      const Polyhedron& poly = corridor[k];
      const Eigen::MatrixXd pos = control_points(seg, 0, basis);
      for (int l = 0; l <= n; ++l)
        report.control_point_margin =
            std::max(report.control_point_margin,
                     (poly.w * pos.row(l).transpose() - poly.h).maxCoeff());
    }
    for (const auto& [order, range] : bounds.by_order) {
      const Eigen::MatrixXd pts = control_points(seg, order, basis);
      report.control_point_margin = std::max(
          {report.control_point_margin, (range.lower - pts.minCoeff()),
           (pts.maxCoeff() - range.upper)});
    }

    for (int j = 0; j < samples; ++j) {
      const double local = seg.duration * j / (samples - 1);
      if (has_corridor) {
        const Polyhedron& poly = corridor[k];
        const Eigen::VectorXd p =
            seg.coeffs.transpose() * monomial_basis(local, n, 0);
        report.corridor_sample_margin = std::max(
            report.corridor_sample_margin, (poly.w * p - poly.h).maxCoeff());
      }
      for (const auto& [order, range] : bounds.by_order) {
        const Eigen::VectorXd val =
            seg.coeffs.transpose() * monomial_basis(local, n, order);
        report.bound_sample_margin =
            std::max({report.bound_sample_margin, range.lower - val.minCoeff(),
                      val.maxCoeff() - range.upper});
      }
    }
  }
  if (bounds.by_order.empty()) report.bound_sample_margin = 0.0;
  if (!has_corridor) report.corridor_sample_margin = 0.0;
  if (!has_corridor && bounds.by_order.empty())
    report.control_point_margin = 0.0;
  report.sample_margin =
      std::max(report.corridor_sample_margin, report.bound_sample_margin);
  return report;
}

}  // namespace polytraj
