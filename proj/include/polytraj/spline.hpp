#ifndef POLYTRAJ_SPLINE_HPP
#define POLYTRAJ_SPLINE_HPP

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace polytraj {

// Shape of an N-segment polynomial trajectory of odd degree n in d dimensions.
// m = (n+1)/2 is the number of endpoint derivatives (0..m-1) carried between
// segments; the phase state of a segment is x = [p; p'; ...; p^(m-1)] at its
// proximal end, stacked derivative-major (block i holds the d components of
// the i-th derivative).  Degrees 3, 5 and 7 (minimum acceleration / jerk /
// snap) are the validated envelope; higher odd degrees are accepted untested.
struct SplineShape {
  int degree = 5;    // n, odd and >= 3
  int dim = 3;       // d >= 1
  int segments = 1;  // N >= 1

  int half_order() const { return (degree + 1) / 2; }
  int state_dim() const { return half_order() * dim; }

  // Throws std::invalid_argument on a malformed shape.
  void validate() const;
};

// One polynomial segment p(t) = coeffs^T * [1, t, ..., t^n]^T on [0, duration].
// Row r of coeffs holds the d-dimensional coefficient of t^r.
struct SegmentCoeffs {
  Eigen::MatrixXd coeffs;
  double duration = 0.0;
};

// Control of one segment: v stacks the high-order coefficients (block j is the
// d-vector coefficient of t^(m+j), j = 0..m-1); duration is a decision
// variable in joint-time mode and a fixed parameter otherwise.
struct ControlInput {
  Eigen::VectorXd v;
  double duration = 0.0;
};

// Whether segment durations are decision variables (u = [v; t]) or fixed
// parameters (u = v).
enum class TimeMode { FixedTime, JointTime };

struct PiecewiseTrajectory {
  SplineShape shape;
  std::vector<SegmentCoeffs> segments;

  double total_duration() const;

  // Derivative `order` at global time t in [0, total_duration()].  The right
  // segment is used at interior junctions, the left one at the final endpoint.
  Eigen::VectorXd evaluate(double t, int order) const;
};

// order-th derivative of the monomial basis [1, t, ..., t^degree]^T.
// Entries below `order` are zero; order > degree yields the zero vector.
Eigen::VectorXd monomial_basis(double t, int degree, int order);

// Blocks of F(t) = [b^[m](0), b^[m](t)]^T: f11 = diag((i-1)!),
// [f21]_ij = (j-1)!/(j-i)! t^(j-i) for i <= j,
// [f22]_ij = (m+j-1)!/(m+j-i)! t^(m+j-i).
struct FBlocks {
  Eigen::MatrixXd f11, f21, f22;
};
FBlocks f_blocks(double t, int half_order);

// Segment transition x+ = A(t) x + B(t) v with A = (F21 F11^-1) kron I_d and
// B = F22 kron I_d.  F21 F11^-1 equals the m-integrator chain transition
// matrix exp(S t), entries t^(j-i)/(j-i)!.
struct StateMatrices {
  Eigen::MatrixXd A, B;
};
StateMatrices state_matrices(double t, const SplineShape& shape);

// Entrywise analytic d/dt or d^2/dt^2 of A(t), B(t); order must be 1 or 2.
StateMatrices state_matrix_time_derivs(double t, const SplineShape& shape,
                                       int order);

// Endpoint derivatives of the segment at its distal end; equals the proximal
// state of the following segment.
Eigen::VectorXd propagate(const Eigen::VectorXd& x, const ControlInput& u,
                          const SplineShape& shape);

// Coefficients of the segment with proximal state x and high-order block v:
// low-order rows are p^(r)(0)/r!, high-order rows reshape v.
SegmentCoeffs coeffs_from(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                          double t, const SplineShape& shape);

// Exact inverse of coeffs_from: (proximal state, high-order block).
std::pair<Eigen::VectorXd, Eigen::VectorXd> state_control_from(
    const SegmentCoeffs& seg, const SplineShape& shape);

// Builds the full trajectory from x0 and per-segment inputs.  When `states`
// is non-null it receives the N+1 phase states along the rollout.
PiecewiseTrajectory rollout(const Eigen::VectorXd& x0,
                            const std::vector<ControlInput>& inputs,
                            const SplineShape& shape,
                            std::vector<Eigen::VectorXd>* states = nullptr);

// Worst junction mismatch over derivative orders 0..m-1, evaluating the left
// segment at its end against the right segment at zero.
double max_junction_mismatch(const PiecewiseTrajectory& traj);

}  // namespace polytraj

#endif
