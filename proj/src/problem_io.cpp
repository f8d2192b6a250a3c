#include "polytraj/problem_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json_io.hpp"

namespace polytraj {

namespace {

using detail::dump_document;
using detail::ordered_json;

Eigen::VectorXd to_vector(const ordered_json& j, const std::string& field) {
  return detail::json_to_vector(j, field);
}

ordered_json from_vector(const Eigen::VectorXd& v) {
  return detail::vector_to_json(v);
}

const ordered_json& require(const ordered_json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument("instance: missing field '" + key + "'");
  return *it;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, int dim) {
  Eigen::VectorXd v(dim);
  while (true) {
    for (int i = 0; i < dim; ++i) v(i) = uniform(rng, -1.0, 1.0);
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

}  // namespace

Problem Instance::to_problem(const std::string& minvo_table_path) const {
  Problem p;
  p.shape = shape;
  p.x0 = x0;
  p.weights = weights;
  p.corridor = corridor;
  p.bounds = bounds;
  p.t_min = t_min;
  if (basis == BasisKind::Bernstein) {
    p.basis = ControlPointBasis::bernstein(shape.degree);
  } else {
    if (minvo_table_path.empty())
      throw std::invalid_argument(
          "Instance: MINVO basis requested but no table path given");
    p.basis = ControlPointBasis::load_minvo(minvo_table_path);
  }
  p.validate();
  return p;
}

std::vector<ControlInput> Instance::initial_inputs() const {
  if (times.empty())
    throw std::invalid_argument("Instance: no time allocation present");
  std::vector<ControlInput> inputs;
  inputs.reserve(times.size());
  for (const double t : times)
    inputs.push_back({Eigen::VectorXd::Zero(shape.state_dim()), t});
  return inputs;
}

std::string instance_to_string(const Instance& instance) {
  const int md = instance.shape.state_dim();
  ordered_json j;
  j["shape"] = {{"degree", instance.shape.degree},
                {"dim", instance.shape.dim},
                {"segments", instance.shape.segments}};
  j["x0"] = from_vector(instance.x0);

  ordered_json stages = ordered_json::array();
  for (int k = 0; k < instance.shape.segments; ++k) {
    ordered_json stage;
    stage["x"] = from_vector(instance.weights.x_goal[k]);
    stage["q_diag"] = from_vector(instance.weights.q[k].diagonal());
    stages.push_back(stage);
  }
  ordered_json terminal;
  terminal["x"] = from_vector(instance.weights.x_goal_terminal);
  terminal["q_diag"] = from_vector(instance.weights.q_terminal.diagonal());
  j["goals"] = {{"stage", stages}, {"terminal", terminal}};

  ordered_json weights;
  weights["eta"] = instance.weights.eta;
  weights["w"] = instance.weights.w_time;
  if (!instance.weights.eta_lower.empty()) {
    ordered_json lower = ordered_json::array();
    for (const auto& e : instance.weights.eta_lower)
      lower.push_back(from_vector(e));
    weights["eta_lower"] = lower;
  }
  j["weights"] = weights;

  ordered_json corridor = ordered_json::array();
  for (const auto& poly : instance.corridor) {
    ordered_json entry;
    ordered_json rows = ordered_json::array();
    for (int f = 0; f < poly.w.rows(); ++f)
      rows.push_back(from_vector(poly.w.row(f).transpose()));
    entry["w"] = rows;
    entry["h"] = from_vector(poly.h);
    corridor.push_back(entry);
  }
  j["corridor"] = corridor;

  ordered_json bounds = ordered_json::array();
  for (const auto& [order, range] : instance.bounds.by_order)
    bounds.push_back({{"order", order},
                      {"lower", range.lower},
                      {"upper", range.upper}});
  j["bounds"] = bounds;

  j["t_min"] = instance.t_min;
  j["times"] = instance.times;
  j["basis"] = instance.basis == BasisKind::Bernstein ? "bernstein" : "minvo";
  (void)md;

  return dump_document(j);
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("save_instance: cannot open " + path);
  out << instance_to_string(instance);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_instance: " + path + ": " + e.what());
  }

  Instance inst;
  const ordered_json& shape = require(j, "shape");
  inst.shape.degree = require(shape, "degree").get<int>();
  inst.shape.dim = require(shape, "dim").get<int>();
  inst.shape.segments = require(shape, "segments").get<int>();
  inst.shape.validate();
  const int md = inst.shape.state_dim();
  const int n_seg = inst.shape.segments;

  inst.x0 = to_vector(require(j, "x0"), "x0");
  if (inst.x0.size() != md)
    throw std::invalid_argument("x0: expected length " + std::to_string(md));

  const ordered_json& goals = require(j, "goals");
  const ordered_json& stage_goals = require(goals, "stage");
  if (static_cast<int>(stage_goals.size()) != n_seg)
    throw std::invalid_argument("goals.stage: expected " +
                                std::to_string(n_seg) + " entries");
  for (int k = 0; k < n_seg; ++k) {
    const std::string field = "goals.stage[" + std::to_string(k) + "]";
    const Eigen::VectorXd x = to_vector(require(stage_goals[k], "x"), field + ".x");
    const Eigen::VectorXd qd =
        to_vector(require(stage_goals[k], "q_diag"), field + ".q_diag");
    if (x.size() != md || qd.size() != md)
      throw std::invalid_argument(field + ": expected length " +
                                  std::to_string(md));
    inst.weights.x_goal.push_back(x);
    inst.weights.q.push_back(qd.asDiagonal());
  }
  const ordered_json& terminal = require(goals, "terminal");
  inst.weights.x_goal_terminal =
      to_vector(require(terminal, "x"), "goals.terminal.x");
  inst.weights.q_terminal = Eigen::MatrixXd(
      to_vector(require(terminal, "q_diag"), "goals.terminal.q_diag")
          .asDiagonal());

  const ordered_json& weights = require(j, "weights");
  const Eigen::VectorXd eta = to_vector(require(weights, "eta"), "weights.eta");
  const Eigen::VectorXd wt = to_vector(require(weights, "w"), "weights.w");
  if (eta.size() != n_seg || wt.size() != n_seg)
    throw std::invalid_argument("weights: eta and w need one entry per stage");
  inst.weights.eta.assign(eta.data(), eta.data() + eta.size());
  inst.weights.w_time.assign(wt.data(), wt.data() + wt.size());
  if (weights.contains("eta_lower")) {
    const ordered_json& lower = weights["eta_lower"];
    if (static_cast<int>(lower.size()) != n_seg)
      throw std::invalid_argument("weights.eta_lower: need one row per stage");
    for (int k = 0; k < n_seg; ++k)
      inst.weights.eta_lower.push_back(
          to_vector(lower[k], "weights.eta_lower[" + std::to_string(k) + "]"));
  }

  const ordered_json& corridor = require(j, "corridor");
  if (!corridor.empty() && static_cast<int>(corridor.size()) != n_seg)
    throw std::invalid_argument(
        "corridor: length " + std::to_string(corridor.size()) +
        " does not match shape.segments " + std::to_string(n_seg));
  for (std::size_t k = 0; k < corridor.size(); ++k) {
    const std::string field = "corridor[" + std::to_string(k) + "]";
    Polyhedron poly;
    const ordered_json& rows = require(corridor[k], "w");
    poly.w.resize(rows.size(), inst.shape.dim);
    for (std::size_t f = 0; f < rows.size(); ++f) {
      const Eigen::VectorXd row =
          to_vector(rows[f], field + ".w[" + std::to_string(f) + "]");
      if (row.size() != inst.shape.dim)
        throw std::invalid_argument(field + ".w: normals must have length d");
      poly.w.row(f) = row.transpose();
    }
    poly.h = to_vector(require(corridor[k], "h"), field + ".h");
    if (poly.h.size() != poly.w.rows())
      throw std::invalid_argument(field + ": offset count must match normals");
    poly.validate(inst.shape.dim);
    if (poly.likely_degenerate())
      std::fprintf(stderr, "warning: %s looks degenerate (empty slab)\n",
                   field.c_str());
    inst.corridor.push_back(std::move(poly));
  }

  for (const ordered_json& b : require(j, "bounds")) {
    const int order = require(b, "order").get<int>();
    DerivBounds::Range range{require(b, "lower").get<double>(),
                             require(b, "upper").get<double>()};
    if (inst.bounds.by_order.count(order))
      throw std::invalid_argument("bounds: duplicate order " +
                                  std::to_string(order));
    inst.bounds.by_order[order] = range;
  }
  inst.bounds.validate(inst.shape.half_order());

  inst.t_min = require(j, "t_min").get<double>();
  if (inst.t_min <= 0.0)
    throw std::invalid_argument("t_min: must be > 0");
  for (const auto& t : require(j, "times")) inst.times.push_back(t.get<double>());
  if (!inst.times.empty() && static_cast<int>(inst.times.size()) != n_seg)
    throw std::invalid_argument("times: need one entry per stage");

  const std::string basis = require(j, "basis").get<std::string>();
  if (basis == "bernstein")
    inst.basis = BasisKind::Bernstein;
  else if (basis == "minvo")
    inst.basis = BasisKind::Minvo;
  else
    throw std::invalid_argument("basis: expected 'bernstein' or 'minvo'");

  inst.weights.validate(inst.shape);
  return inst;
}

std::vector<double> initial_time_allocation(
    const std::vector<Eigen::VectorXd>& waypoints, double v_max, double a_max,
    double t_min) {
  if (waypoints.size() < 2)
    throw std::invalid_argument("initial_time_allocation: need >= 2 waypoints");
  if (v_max <= 0.0 || a_max <= 0.0)
    throw std::invalid_argument("initial_time_allocation: limits must be > 0");
  std::vector<double> times;
  times.reserve(waypoints.size() - 1);
  for (std::size_t k = 0; k + 1 < waypoints.size(); ++k) {
    const double length = (waypoints[k + 1] - waypoints[k]).norm();
    double t;
    if (length < v_max * v_max / a_max)
      t = 2.0 * std::sqrt(length / a_max);  // triangular profile
    else
      t = v_max / a_max + length / v_max;  // accelerate, cruise, decelerate
    times.push_back(std::max(t, t_min));
  }
  return times;
}

Instance generate_random_corridor(unsigned seed, int segments, int dim,
                                  const CorridorGeometry& geometry) {
  if (segments < 1)
    throw std::invalid_argument("generate_random_corridor: segments >= 1");
  if (geometry.facets_min < 2 * dim)
    throw std::invalid_argument(
        "generate_random_corridor: facets_min below the bounding box count");
  if (geometry.clearance < geometry.waypoint_margin)
    throw std::invalid_argument(
        "generate_random_corridor: clearance must cover waypoint_margin");

  std::mt19937_64 rng(seed);
  Instance inst;
  inst.shape = SplineShape{geometry.degree, dim, segments};
  inst.shape.validate();
  const int md = inst.shape.state_dim();
  const int m = inst.shape.half_order();

  std::vector<Eigen::VectorXd> waypoints;
  waypoints.push_back(Eigen::VectorXd::Zero(dim));
  for (int k = 0; k < segments; ++k) {
    Eigen::VectorXd dir = geometry.axis_bias * Eigen::VectorXd::Unit(dim, 0) +
                          (1.0 - geometry.axis_bias) * random_unit(rng, dim);
    dir.normalize();
    const double len = uniform(rng, geometry.segment_min, geometry.segment_max);
    waypoints.push_back(waypoints.back() + len * dir);
  }

  for (int k = 0; k < segments; ++k) {
    const Eigen::VectorXd& a = waypoints[k];
    const Eigen::VectorXd& b = waypoints[k + 1];
    const int extra = static_cast<int>(
        uniform(rng, 0.0,
                static_cast<double>(geometry.facets_max - 2 * dim) + 0.999));
    const int facets = 2 * dim + extra;

    Polyhedron poly;
    poly.w.resize(facets, dim);
    poly.h.resize(facets);
    for (int i = 0; i < dim; ++i) {
      poly.w.row(2 * i) = Eigen::VectorXd::Unit(dim, i).transpose();
      poly.h(2 * i) = std::max(a(i), b(i)) + geometry.clearance;
      poly.w.row(2 * i + 1) = -Eigen::VectorXd::Unit(dim, i).transpose();
      poly.h(2 * i + 1) = -(std::min(a(i), b(i)) - geometry.clearance);
    }
    for (int f = 2 * dim; f < facets; ++f) {
      const Eigen::VectorXd w = random_unit(rng, dim);
      const double slack =
          uniform(rng, geometry.waypoint_margin, geometry.clearance);
      poly.w.row(f) = w.transpose();
      poly.h(f) = std::max(w.dot(a), w.dot(b)) + slack;
    }
    inst.corridor.push_back(std::move(poly));
  }

  inst.x0 = Eigen::VectorXd::Zero(md);
  inst.x0.head(dim) = waypoints.front();
  for (int k = 0; k < segments; ++k) {
    Eigen::VectorXd goal = Eigen::VectorXd::Zero(md);
    goal.head(dim) = waypoints[k];
    inst.weights.x_goal.push_back(goal);
    inst.weights.q.push_back(Eigen::MatrixXd::Zero(md, md));
    inst.weights.eta.push_back(geometry.eta);
    inst.weights.w_time.push_back(geometry.w_time);
  }
  inst.weights.x_goal_terminal = Eigen::VectorXd::Zero(md);
  inst.weights.x_goal_terminal.head(dim) = waypoints.back();
  inst.weights.q_terminal =
      geometry.q_terminal * Eigen::MatrixXd::Identity(md, md);

  inst.bounds.by_order[1] = {-geometry.v_max, geometry.v_max};
  if (m >= 3) inst.bounds.by_order[2] = {-geometry.a_max, geometry.a_max};

  inst.t_min = geometry.t_min;
  inst.times = initial_time_allocation(waypoints, geometry.v_max,
                                       geometry.a_max, geometry.t_min);
  inst.basis = BasisKind::Bernstein;
  return inst;
}

}  // namespace polytraj
