#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "polytraj/constraints.hpp"
#include "support/oracles.hpp"

using namespace polytraj;

namespace {

Polyhedron unit_box(int dim, double half) {
  Polyhedron poly;
  poly.w.resize(2 * dim, dim);
  poly.h.resize(2 * dim);
  for (int i = 0; i < dim; ++i) {
    poly.w.row(2 * i) = Eigen::VectorXd::Unit(dim, i).transpose();
    poly.h(2 * i) = half;
    poly.w.row(2 * i + 1) = -Eigen::VectorXd::Unit(dim, i).transpose();
    poly.h(2 * i + 1) = half;
  }
  return poly;
}

std::string bernstein_table_file(int max_degree) {
  // A Bernstein-valued data file: exercises the table-loading path with
  // matrices whose hull property is known to hold.
  const ControlPointBasis reference = ControlPointBasis::bernstein(max_degree);
  std::string path = "minvo_table_test.txt";
  std::ofstream out(path);
  out.precision(17);
  out << "# monomial -> control point tables\n";
  for (int q = 1; q <= max_degree; ++q) {
    out << "degree " << q << "\n";
    const Eigen::MatrixXd& t = reference.conversion(q);
    for (int r = 0; r <= q; ++r) {
      for (int c = 0; c <= q; ++c) out << " " << t(r, c);
      out << "\n";
    }
  }
  return path;
}

}  // namespace

TEST_CASE("bernstein control points of simple segments") {
  const ControlPointBasis basis = ControlPointBasis::bernstein(5);

  SegmentCoeffs constant;
  constant.coeffs = Eigen::MatrixXd::Zero(6, 2);
  constant.coeffs.row(0) << 1.5, -0.25;
  constant.duration = 2.0;
  const Eigen::MatrixXd pts = control_points(constant, 0, basis);
  CHECK(pts.rows() == 6);
  for (int l = 0; l < 6; ++l) {
    CHECK(pts(l, 0) == doctest::Approx(1.5));
    CHECK(pts(l, 1) == doctest::Approx(-0.25));
  }

  // linear segment: points interpolate evenly between a and a + b
  SegmentCoeffs linear;
  linear.coeffs = Eigen::MatrixXd::Zero(6, 1);
  linear.coeffs(0, 0) = 0.5;  // a
  linear.coeffs(1, 0) = 2.0;  // b
  linear.duration = 1.0;
  const Eigen::MatrixXd lp = control_points(linear, 0, basis);
  for (int l = 0; l < 6; ++l)
    CHECK(lp(l, 0) == doctest::Approx(0.5 + 2.0 * l / 5.0));

  CHECK_THROWS_AS(control_points(linear, 3, basis), std::invalid_argument);
}

TEST_CASE("derivative control points carry physical scaling") {
  // p(t) = t^3 on [0, 2]: p'(2) = 12 must lie in the order-1 hull
  const ControlPointBasis basis = ControlPointBasis::bernstein(5);
  SegmentCoeffs seg;
  seg.coeffs = Eigen::MatrixXd::Zero(6, 1);
  seg.coeffs(3, 0) = 1.0;
  seg.duration = 2.0;
  const Eigen::MatrixXd vel = control_points(seg, 1, basis);
  CHECK(vel.minCoeff() <= 0.0 + 1e-12);
  CHECK(vel.maxCoeff() >= 12.0 - 1e-12);
  // endpoint control points equal the endpoint derivative values
  CHECK(vel(0, 0) == doctest::Approx(0.0));
  CHECK(vel(vel.rows() - 1, 0) == doctest::Approx(12.0));
}

TEST_CASE("sampled curves stay in the control-point hull") {
  std::mt19937_64 rng(61);
  const ControlPointBasis basis = ControlPointBasis::bernstein(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 2 + trial % 3;
    const int d = 1 + trial % 3;
    SegmentCoeffs seg;
    seg.coeffs = Eigen::MatrixXd::Random(2 * m, d);
    seg.duration = test::uniform(rng, 0.3, 2.5);
    for (int order = 0; order < m; ++order) {
      const Eigen::MatrixXd pts = control_points(seg, order, basis);
      // random supporting directions certify hull membership
      for (int dir_trial = 0; dir_trial < 8; ++dir_trial) {
        const Eigen::VectorXd dir = test::uniform_vector(rng, d, -1, 1);
        const double support = (pts * dir).maxCoeff();
        double worst = -1e300;
        for (int s = 0; s <= 1000; ++s) {
          const double t = seg.duration * s / 1000.0;
          worst = std::max(
              worst, dir.dot(test::poly_eval_deriv(seg.coeffs, t, order)));
        }
        CHECK(worst <= support + 1e-9);
      }
    }
  }
}

TEST_CASE("certification accepts bernstein tables and rejects corrupt ones") {
  const ControlPointBasis basis = ControlPointBasis::bernstein(7);
  for (int q = 1; q <= 7; ++q)
    CHECK_NOTHROW(ControlPointBasis::certify_convex_hull(basis.conversion(q),
                                                         q, 10000, 0xabcd));

  Eigen::MatrixXd bad = basis.conversion(3);
  bad(1, 2) += 0.4;  // break the hull property
  CHECK_THROWS_AS(ControlPointBasis::certify_convex_hull(bad, 3, 10000, 1),
                  std::invalid_argument);
}

TEST_CASE("table files load through the minvo path") {
  const std::string path = bernstein_table_file(5);
  const ControlPointBasis loaded = ControlPointBasis::load_minvo(path);
  CHECK(loaded.kind() == BasisKind::Minvo);
  CHECK(loaded.has_degree(5));
  CHECK(loaded.conversion(4).isApprox(
      ControlPointBasis::bernstein(5).conversion(4), 1e-12));

  // a shrunken hull row must fail certification on load
  {
    std::ofstream out(path, std::ios::app);
    out << "degree 2\n1 0 0\n1 0.1 0\n1 1 1\n";
  }
  CHECK_THROWS_AS(ControlPointBasis::load_minvo(path), std::invalid_argument);
  std::remove(path.c_str());

  CHECK_THROWS_AS(ControlPointBasis::load_minvo("missing_table.txt"),
                  std::invalid_argument);
}

TEST_CASE("stage constraint rows, ordering and simple values") {
  SplineShape shape{5, 3, 1};
  const ControlPointBasis basis = ControlPointBasis::bernstein(5);
  const Polyhedron box = unit_box(3, 1.0);
  DerivBounds bounds;
  bounds.by_order[1] = {-2.0, 2.0};
  bounds.by_order[2] = {-2.0, 2.0};

  // row count: (n+1) s + 2 d sum(n+1-i) + 1 = 6*6 + 2*3*(5+4) + 1 = 91
  CHECK(stage_constraint_rows(shape, box, bounds, TimeMode::JointTime) == 91);
  CHECK(stage_constraint_rows(shape, box, bounds, TimeMode::FixedTime) == 90);

  // stationary interior state, v = 0, t = 2 t_min: strictly negative rows
  Eigen::VectorXd x = Eigen::VectorXd::Zero(9);
  x.head(3) << 0.2, -0.1, 0.3;
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(9);
  const StageConstraint sc = assemble_stage_constraint(
      x, v, 0.2, box, bounds, 0.1, basis, shape, TimeMode::JointTime);
  CHECK(sc.g.size() == 91);
  CHECK(sc.g.maxCoeff() < 0.0);
  CHECK(sc.row_labels.size() == 91);
  CHECK(sc.row_labels.front() == "corridor[point=0,face=0]");
  CHECK(sc.row_labels.back() == "time");

  // position control point exactly on a face gives an exactly active row
  Eigen::VectorXd on_face = Eigen::VectorXd::Zero(9);
  on_face.head(3) << 1.0, 0.0, 0.0;
  const StageConstraint active = assemble_stage_constraint(
      on_face, v, 0.2, box, bounds, 0.1, basis, shape, TimeMode::JointTime);
  CHECK(active.g.maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));

  // missing bound orders drop their rows
  DerivBounds only_velocity;
  only_velocity.by_order[1] = {-2.0, 2.0};
  CHECK(stage_constraint_rows(shape, box, only_velocity,
                              TimeMode::JointTime) == 6 * 6 + 2 * 3 * 5 + 1);
}

TEST_CASE("stage constraint jacobians match finite differences") {
  std::mt19937_64 rng(67);
  const ControlPointBasis basis = ControlPointBasis::bernstein(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + trial % 3;
    const int d = 1 + trial % 3;
    SplineShape shape{2 * m - 1, d, 1};
    const int md = m * d;
    const Polyhedron box = unit_box(d, test::uniform(rng, 1.0, 3.0));
    DerivBounds bounds;
    bounds.by_order[1] = {-3.0, 3.0};
    if (m >= 3 && trial % 2) bounds.by_order[2] = {-5.0, 5.0};
    const TimeMode mode =
        trial % 2 ? TimeMode::JointTime : TimeMode::FixedTime;

    const Eigen::VectorXd x = test::uniform_vector(rng, md, -0.5, 0.5);
    const Eigen::VectorXd v = test::uniform_vector(rng, md, -0.5, 0.5);
    const double t = test::uniform(rng, 0.4, 1.8);
    const StageConstraint sc = assemble_stage_constraint(
        x, v, t, box, bounds, 0.1, basis, shape, mode);

    const auto g_of_x = [&](const Eigen::VectorXd& xx) {
      return Eigen::VectorXd(assemble_stage_constraint(xx, v, t, box, bounds,
                                                       0.1, basis, shape, mode)
                                 .g);
    };
    const Eigen::MatrixXd jx = test::fd_jacobian(g_of_x, x, 1e-5);
    CHECK((jx - sc.jac_x).cwiseAbs().maxCoeff() <=
          1e-6 * std::max(1.0, sc.jac_x.cwiseAbs().maxCoeff()));

    const int du = mode == TimeMode::JointTime ? md + 1 : md;
    Eigen::VectorXd u(du);
    u.head(md) = v;
    if (mode == TimeMode::JointTime) u(md) = t;
    const auto g_of_u = [&](const Eigen::VectorXd& uu) {
      const double tt = mode == TimeMode::JointTime ? uu(md) : t;
      return Eigen::VectorXd(
          assemble_stage_constraint(x, uu.head(md), tt, box, bounds, 0.1,
                                    basis, shape, mode)
              .g);
    };
    const Eigen::MatrixXd ju = test::fd_jacobian(g_of_u, u, 1e-5);
    CHECK((ju - sc.jac_u).cwiseAbs().maxCoeff() <=
          1e-6 * std::max(1.0, sc.jac_u.cwiseAbs().maxCoeff()));

    if (mode == TimeMode::JointTime) {
      // second-order time terms against finite differences of the jacobians
      const ConstraintTimeCurvature cc = stage_constraint_time_curvature(
          x, v, t, box, bounds, basis, shape);
      const double h = 1e-5 * t;
      const auto jac_at = [&](double tt) {
        return assemble_stage_constraint(x, v, tt, box, bounds, 0.1, basis,
                                         shape, TimeMode::JointTime);
      };
      const StageConstraint hi = jac_at(t + h), lo = jac_at(t - h);
      const Eigen::VectorXd gtt_fd =
          (hi.jac_u.col(md) - lo.jac_u.col(md)) / (2 * h);
      CHECK((gtt_fd - cc.g_tt).lpNorm<Eigen::Infinity>() <=
            1e-5 * std::max(1.0, cc.g_tt.lpNorm<Eigen::Infinity>()));
      const Eigen::MatrixXd gtx_fd = (hi.jac_x - lo.jac_x) / (2 * h);
      CHECK((gtx_fd - cc.g_tx).cwiseAbs().maxCoeff() <=
            1e-5 * std::max(1.0, cc.g_tx.cwiseAbs().maxCoeff()));
      const Eigen::MatrixXd gtv_fd =
          (hi.jac_u.leftCols(md) - lo.jac_u.leftCols(md)) / (2 * h);
      CHECK((gtv_fd - cc.g_tv).cwiseAbs().maxCoeff() <=
            1e-5 * std::max(1.0, cc.g_tv.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("control-point feasibility implies sampled feasibility") {
  std::mt19937_64 rng(71);
  const ControlPointBasis basis = ControlPointBasis::bernstein(5);
  SplineShape shape{5, 3, 4};
  DerivBounds bounds;
  bounds.by_order[1] = {-2.0, 2.0};
  bounds.by_order[2] = {-2.0, 2.0};

  int certified = 0;
  for (int trial = 0; trial < 200 && certified < 20; ++trial) {
    PiecewiseTrajectory traj;
    traj.shape = shape;
    std::vector<Polyhedron> corridor;
    for (int k = 0; k < 4; ++k) {
      SegmentCoeffs seg;
      seg.coeffs = 0.05 * Eigen::MatrixXd::Random(6, 3);
      seg.duration = test::uniform(rng, 0.6, 1.0);
      traj.segments.push_back(seg);
      corridor.push_back(unit_box(3, 1.0));
    }
    const FeasibilityReport report =
        check_feasibility(traj, corridor, bounds, basis, 1000);
    if (!report.certified()) continue;
    ++certified;
    CHECK(report.sample_margin <= 1e-9);
  }
  CHECK(certified >= 20);
}

TEST_CASE("check_feasibility flags constructed violations") {
  const ControlPointBasis basis = ControlPointBasis::bernstein(5);
  SplineShape shape{5, 1, 1};
  DerivBounds bounds;
  bounds.by_order[1] = {-2.0, 2.0};

  // constant trajectory at an interior point is clean
  PiecewiseTrajectory constant;
  constant.shape = shape;
  SegmentCoeffs seg;
  seg.coeffs = Eigen::MatrixXd::Zero(6, 1);
  seg.coeffs(0, 0) = 0.5;
  seg.duration = 1.0;
  constant.segments.push_back(seg);
  const FeasibilityReport clean =
      check_feasibility(constant, {unit_box(1, 1.0)}, bounds, basis, 100);
  CHECK(clean.control_point_margin <= 0.0);
  CHECK(clean.sample_margin <= 0.0);

  // a ramp with slope 4 violates the velocity bound of 2
  PiecewiseTrajectory fast;
  fast.shape = shape;
  SegmentCoeffs ramp;
  ramp.coeffs = Eigen::MatrixXd::Zero(6, 1);
  ramp.coeffs(1, 0) = 4.0;
  ramp.duration = 0.25;
  fast.segments.push_back(ramp);
  const FeasibilityReport flagged =
      check_feasibility(fast, {unit_box(1, 2.0)}, bounds, basis, 100);
  CHECK(flagged.bound_sample_margin == doctest::Approx(2.0));
  CHECK(flagged.control_point_margin >= 2.0 - 1e-12);

  CHECK_THROWS_AS(
      check_feasibility(fast, {unit_box(1, 1.0), unit_box(1, 1.0)}, bounds,
                        basis, 100),
      std::invalid_argument);
}

TEST_CASE("polyhedron and bound validation") {
  Polyhedron poly = unit_box(3, 1.0);
  CHECK_NOTHROW(poly.validate(3));
  CHECK(poly.contains(Eigen::Vector3d(0.2, 0.2, -0.2), 0.5));
  CHECK_FALSE(poly.contains(Eigen::Vector3d(2.0, 0.0, 0.0)));
  CHECK_FALSE(poly.likely_degenerate());

  Polyhedron thin = unit_box(3, 1.0);
  thin.h(0) = -1.0;  // x <= -1 against -x <= 1: empty slab
  CHECK(thin.likely_degenerate());

  Polyhedron zero_row = poly;
  zero_row.w.row(2).setZero();
  CHECK_THROWS_AS(zero_row.validate(3), std::invalid_argument);

  DerivBounds bad;
  bad.by_order[1] = {0.5, 2.0};  // lower must be negative
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
  DerivBounds out_of_range;
  out_of_range.by_order[5] = {-1.0, 1.0};
  CHECK_THROWS_AS(out_of_range.validate(3), std::invalid_argument);
}
