#ifndef POLYTRAJ_PROBLEM_IO_HPP
#define POLYTRAJ_PROBLEM_IO_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "polytraj/problem.hpp"

namespace polytraj {

// On-disk instance: everything needed to pose one trajectory-generation
// problem.  Serialized as a single JSON document with canonical key order
// (shape, x0, goals, weights, corridor, bounds, t_min, times, basis), arrays
// row-major and floats printed with 17 significant digits, so save/load/save
// is byte-identical.
struct Instance {
  SplineShape shape;
  Eigen::VectorXd x0;
  Weights weights;
  std::vector<Polyhedron> corridor;
  DerivBounds bounds;
  double t_min = 0.1;
  std::vector<double> times;
  BasisKind basis = BasisKind::Bernstein;

  // Builds the solver-side problem; MINVO instances need the table path
  // (typically from the POLYTRAJ_MINVO_TABLE environment variable).
  Problem to_problem(const std::string& minvo_table_path = "") const;

  // Zero-curvature initial inputs at the instance times (or the given ones).
  std::vector<ControlInput> initial_inputs() const;
};

// Throws std::runtime_error with line/field context on parse errors and
// std::invalid_argument naming the offending field on invariant violations.
Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);
std::string instance_to_string(const Instance& instance);

struct CorridorGeometry {
  int degree = 5;
  double segment_min = 1.5;
  double segment_max = 3.0;
  double clearance = 0.8;        // box padding around each walk segment
  double waypoint_margin = 0.25; // interior margin kept at the waypoints
  double axis_bias = 0.7;        // forward drift of the random walk
  int facets_min = 6;
  int facets_max = 117;
  double v_max = 2.0;
  double a_max = 2.0;
  double t_min = 0.1;
  double eta = 1e-5;
  double w_time = 20.0;
  double q_terminal = 100.0;
};

// Deterministic random corridor instance: an axis-biased walk of overlapping
// polytopes (axis box plus random extra halfspaces), waypoints strictly
// interior to adjacent polyhedra, trapezoidal initial time allocation.
Instance generate_random_corridor(unsigned seed, int segments, int dim,
                                  const CorridorGeometry& geometry = {});

// Rest-to-rest trapezoidal (or triangular) profile per segment under the
// given velocity/acceleration limits; never below t_min.
std::vector<double> initial_time_allocation(
    const std::vector<Eigen::VectorXd>& waypoints, double v_max, double a_max,
    double t_min);

}  // namespace polytraj

#endif
