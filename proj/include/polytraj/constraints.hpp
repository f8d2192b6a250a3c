#ifndef POLYTRAJ_CONSTRAINTS_HPP
#define POLYTRAJ_CONSTRAINTS_HPP

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "polytraj/spline.hpp"

namespace polytraj {

// A point is treated as strictly interior when every constraint row satisfies
// g <= -kStrictFeasibilityMargin; interior-point solves in feasible mode
// require this of their initial trajectory.
inline constexpr double kStrictFeasibilityMargin = 1e-6;

// Convex polyhedron {p : w p <= h}; each row of w is one hyperplane normal.
struct Polyhedron {
  Eigen::MatrixXd w;
  Eigen::VectorXd h;

  void validate(int dim) const;
  bool contains(const Eigen::VectorXd& p, double margin = 0.0) const;
  // Heuristic degeneracy check: opposing normals whose offsets leave no slab
  // thickness.  Degenerate corridors are legal input, callers may warn.
  bool likely_degenerate() const;
};

// Per-axis bounds on derivative orders 1..m-1; orders without an entry are
// unconstrained and produce no rows.
struct DerivBounds {
  struct Range {
    double lower = 0.0;
    double upper = 0.0;
  };
  std::map<int, Range> by_order;

  void validate(int half_order) const;
};

enum class BasisKind { Bernstein, Minvo };

// Degree-indexed tables converting monomial coefficients on s in [0,1] to
// control points whose convex hull contains the curve.  The Bernstein tables
// are generated in closed form; MINVO tables are loaded from a data file and
// certified for the convex-hull property before use.
class ControlPointBasis {
 public:
  static ControlPointBasis bernstein(int max_degree);
  static ControlPointBasis load_minvo(const std::string& path);

  BasisKind kind() const { return kind_; }
  bool has_degree(int degree) const;
  const Eigen::MatrixXd& conversion(int degree) const;

  // Samples `count` random degree-`degree` polynomials and verifies every
  // curve sample lies within [min, max] of its control points (tolerance
  // 1e-9).  Throws on failure.
  static void certify_convex_hull(const Eigen::MatrixXd& table, int degree,
                                  int count, unsigned seed);

 private:
  BasisKind kind_ = BasisKind::Bernstein;
  std::map<int, Eigen::MatrixXd> tables_;
};

// Control points of the i-th derivative of the segment, reparametrized on
// s in [0,1] (q(s) = p^(i)(s * duration)), so the hull bounds physical
// derivative values.  (n+1-i) rows by d columns.
Eigen::MatrixXd control_points(const SegmentCoeffs& seg, int order,
                               const ControlPointBasis& basis);

// Stacked inequality g(x, u) <= 0 of one stage with exact Jacobians.  Rows
// are ordered corridor faces (point-major), then per derivative order all
// lower rows followed by all upper rows (point-major, axis-minor), then the
// duration row t_min - t in joint-time mode.
struct StageConstraint {
  Eigen::VectorXd g;
  Eigen::MatrixXd jac_x;
  Eigen::MatrixXd jac_u;
  std::vector<std::string> row_labels;
};

// Exact second-order time terms of the same rows, used by the joint-time
// backward pass: d2g/dt2 and the mixed d2g/dt dx, d2g/dt dv.
struct ConstraintTimeCurvature {
  Eigen::VectorXd g_tt;
  Eigen::MatrixXd g_tx;
  Eigen::MatrixXd g_tv;
};

int stage_constraint_rows(const SplineShape& shape, const Polyhedron& poly,
                          const DerivBounds& bounds, TimeMode mode);

StageConstraint assemble_stage_constraint(
    const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t,
    const Polyhedron& poly, const DerivBounds& bounds, double t_min,
    const ControlPointBasis& basis, const SplineShape& shape, TimeMode mode);

ConstraintTimeCurvature stage_constraint_time_curvature(
    const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t,
    const Polyhedron& poly, const DerivBounds& bounds,
    const ControlPointBasis& basis, const SplineShape& shape);

// Safety/feasibility audit of a full trajectory: worst control-point margin
// (certificate side) and worst margin over dense time samples (ground truth
// side).  Margins are <= 0 when satisfied.
struct FeasibilityReport {
  double control_point_margin = 0.0;
  double sample_margin = 0.0;
  double corridor_sample_margin = 0.0;
  double bound_sample_margin = 0.0;

  bool certified() const { return control_point_margin <= 0.0; }
};

FeasibilityReport check_feasibility(const PiecewiseTrajectory& traj,
                                    const std::vector<Polyhedron>& corridor,
                                    const DerivBounds& bounds,
                                    const ControlPointBasis& basis,
                                    int samples);

}  // namespace polytraj

#endif
