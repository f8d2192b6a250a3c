#include "polytraj/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "polytraj/lqt.hpp"
#include "json_io.hpp"

namespace polytraj::cli {

namespace {

using detail::dump_document;
using detail::json_to_vector;
using detail::ordered_json;
using detail::vector_to_json;

constexpr double kValidationTol = 1e-9;

SolverConfig make_config(const CommonOptions& common, TimeMode mode) {
  SolverConfig config;
  config.mu_init = common.mu_init;
  config.opt_tol = common.tol;
  config.max_iterations = common.max_iter;
  config.t_min = common.t_min;
  config.mode = mode;
  return config;
}

void apply_basis_override(Instance& instance, const CommonOptions& common) {
  if (common.basis_override == "bernstein")
    instance.basis = BasisKind::Bernstein;
  else if (common.basis_override == "minvo")
    instance.basis = BasisKind::Minvo;
}

std::vector<ControlInput> build_initial_inputs(const Instance& instance) {
  if (!instance.times.empty()) return instance.initial_inputs();
  std::vector<Eigen::VectorXd> waypoints;
  for (const auto& goal : instance.weights.x_goal)
    waypoints.push_back(goal.head(instance.shape.dim));
  waypoints.push_back(
      instance.weights.x_goal_terminal.head(instance.shape.dim));
  double v_max = 1.0, a_max = 1.0;
  if (instance.bounds.by_order.count(1))
    v_max = instance.bounds.by_order.at(1).upper;
  if (instance.bounds.by_order.count(2))
    a_max = instance.bounds.by_order.at(2).upper;
  const auto times = initial_time_allocation(waypoints, v_max, a_max,
                                             instance.t_min);
  std::vector<ControlInput> inputs;
  for (const double t : times)
    inputs.push_back({Eigen::VectorXd::Zero(instance.shape.state_dim()), t});
  return inputs;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

ordered_json breakdown_json(const CostBreakdown& cost) {
  ordered_json j;
  j["waypoint"] = cost.waypoint;
  j["energy"] = cost.energy;
  j["time"] = cost.time;
  j["terminal"] = cost.terminal;
  j["total"] = cost.total();
  return j;
}

int failure_exit(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  return 2;
}

}  // namespace

void save_solution(const SolveResult& result, const SplineShape& shape,
                   const std::string& path) {
  ordered_json j;
  j["shape"] = {{"degree", shape.degree},
                {"dim", shape.dim},
                {"segments", shape.segments}};
  ordered_json segs = ordered_json::array();
  for (const auto& seg : result.trajectory.segments) {
    ordered_json entry;
    entry["duration"] = seg.duration;
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < seg.coeffs.rows(); ++r)
      rows.push_back(vector_to_json(seg.coeffs.row(r).transpose()));
    entry["coeffs"] = rows;
    segs.push_back(entry);
  }
  j["segments"] = segs;
  j["cost"] = breakdown_json(result.cost_breakdown);
  j["status"] = to_string(result.status);
  write_file(path, dump_document(j));
}

PiecewiseTrajectory load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_solution: cannot open " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_solution: " + path + ": " + e.what());
  }
  PiecewiseTrajectory traj;
  traj.shape.degree = j.at("shape").at("degree").get<int>();
  traj.shape.dim = j.at("shape").at("dim").get<int>();
  traj.shape.segments = j.at("shape").at("segments").get<int>();
  traj.shape.validate();
  for (const auto& entry : j.at("segments")) {
    SegmentCoeffs seg;
    seg.duration = entry.at("duration").get<double>();
    const auto& rows = entry.at("coeffs");
    seg.coeffs.resize(rows.size(), traj.shape.dim);
    for (std::size_t r = 0; r < rows.size(); ++r)
      seg.coeffs.row(r) = json_to_vector(rows[r], "coeffs").transpose();
    traj.segments.push_back(std::move(seg));
  }
  if (static_cast<int>(traj.segments.size()) != traj.shape.segments)
    throw std::runtime_error("load_solution: segment count mismatch");
  return traj;
}

void save_trace(
    const std::vector<std::pair<std::string, const SolveResult*>>& stages,
    const std::string& path) {
  std::string out =
      "stage,iteration,cost,stationarity,constraint_violation,min_slack,mu,"
      "step_length,regularization\n";
  char buf[256];
  for (const auto& [name, result] : stages) {
    for (std::size_t i = 0; i < result->trace.size(); ++i) {
      const IterationRecord& r = result->trace[i];
      std::snprintf(buf, sizeof(buf),
                    "%s,%zu,%.10g,%.4g,%.4g,%.4g,%.4g,%.4g,%.4g\n",
                    name.c_str(), i + 1, r.cost, r.stationarity,
                    r.constraint_violation, r.min_slack, r.mu, r.step_length,
                    r.regularization);
      out += buf;
    }
  }
  write_file(path, out);
}

ValidationSummary validate_trajectory(const PiecewiseTrajectory& traj,
                                      const Instance& instance,
                                      const ControlPointBasis& basis,
                                      int samples) {
  ValidationSummary summary;
  summary.continuity = max_junction_mismatch(traj);
  const FeasibilityReport report = check_feasibility(
      traj, instance.corridor, instance.bounds, basis, samples);
  summary.control_point_margin = report.control_point_margin;
  summary.corridor_sample_margin = report.corridor_sample_margin;
  summary.bound_sample_margin = report.bound_sample_margin;
  summary.clean = summary.continuity <= kValidationTol &&
                  summary.corridor_sample_margin <= kValidationTol &&
                  summary.bound_sample_margin <= kValidationTol;
  return summary;
}

void save_validation(const ValidationSummary& summary,
                     const std::string& path) {
  ordered_json j;
  j["continuity"] = summary.continuity;
  j["control_point_margin"] = summary.control_point_margin;
  j["corridor_sample_margin"] = summary.corridor_sample_margin;
  j["bound_sample_margin"] = summary.bound_sample_margin;
  j["clean"] = summary.clean;
  write_file(path, dump_document(j));
}

int cmd_generate(const GenerateOptions& options) {
  Instance instance;
  Problem problem;
  std::vector<ControlInput> initial;
  try {
    instance = load_instance(options.instance_path);
    apply_basis_override(instance, options.common);
    problem = instance.to_problem(options.common.minvo_table_path);
    initial = build_initial_inputs(instance);
  } catch (const std::exception& e) {
    return failure_exit(e.what());
  }

  namespace fs = std::filesystem;
  fs::create_directories(options.common.out_dir);
  const std::string base = options.common.out_dir + "/";

  std::vector<std::pair<std::string, const SolveResult*>> stages;
  const SolveResult* final_result = nullptr;
  PipelineResult pipeline;
  SolveResult fixed;

  if (options.mode == "joint") {
    PipelineConfig config;
    config.solver = make_config(options.common, TimeMode::JointTime);
    pipeline = pipeline_three_stage(problem, initial, config);
    stages = {{"feasibility", &pipeline.feasibility},
              {"joint", &pipeline.joint},
              {"polish", &pipeline.polish}};
    final_result = pipeline.failed_stage == 0 ? &pipeline.polish : nullptr;
    if (pipeline.failed_stage != 0)
      std::fprintf(stderr, "pipeline failed at stage %d\n",
                   pipeline.failed_stage);
  } else if (options.mode == "fixed-time") {
    SolverConfig config = make_config(options.common, TimeMode::FixedTime);
    config.stop_at_feasible = false;
    fixed = solve_ipddp_infeasible(problem, config, initial);
    stages = {{"fixed-time", &fixed}};
    final_result = fixed.converged() ? &fixed : nullptr;
  } else {
    return failure_exit("unknown mode '" + options.mode + "'");
  }

  save_trace(stages, base + "trace.csv");

  ordered_json report;
  for (const auto& [name, result] : stages)
    report["stages"][name] = to_string(result->status);

  if (!final_result) {
    report["converged"] = false;
    write_file(base + "report.json", dump_document(report));
    return 1;
  }

  const ValidationSummary summary = validate_trajectory(
      final_result->trajectory, instance, problem.basis,
      options.common.samples);
  report["converged"] = true;
  report["cost"] = breakdown_json(final_result->cost_breakdown);
  if (options.mode == "joint") {
    report["initial_total_time"] = pipeline.initial_total_time;
    report["optimized_total_time"] = pipeline.optimized_total_time;
    report["reduction_rate"] = pipeline.reduction_rate;
  }
  report["validation"] = {
      {"continuity", summary.continuity},
      {"control_point_margin", summary.control_point_margin},
      {"corridor_sample_margin", summary.corridor_sample_margin},
      {"bound_sample_margin", summary.bound_sample_margin},
      {"clean", summary.clean}};
  write_file(base + "report.json", dump_document(report));
  save_solution(*final_result, problem.shape, base + "solution.json");
  return summary.clean ? 0 : 1;
}

int cmd_lqt(const LqtOptions& options) {
  Instance instance;
  try {
    instance = load_instance(options.instance_path);
  } catch (const std::exception& e) {
    return failure_exit(e.what());
  }
  if (instance.times.empty())
    return failure_exit("lqt requires a time allocation in the instance");

  Problem problem;
  problem.shape = instance.shape;
  problem.x0 = instance.x0;
  problem.weights = instance.weights;
  problem.t_min = instance.t_min;

  SolveResult result;
  double kkt = 0.0;
  try {
    result = lqt_solve(problem, instance.times);
    kkt = lqt_kkt_residual(problem, instance.times, result.inputs);
  } catch (const std::exception& e) {
    return failure_exit(e.what());
  }

  namespace fs = std::filesystem;
  fs::create_directories(options.common.out_dir);
  const std::string base = options.common.out_dir + "/";
  save_solution(result, problem.shape, base + "solution.json");

  ordered_json report;
  report["status"] = to_string(result.status);
  report["cost"] = breakdown_json(result.cost_breakdown);
  report["kkt_residual"] = kkt;
  report["continuity"] = max_junction_mismatch(result.trajectory);
  write_file(base + "report.json", dump_document(report));
  return 0;
}

int cmd_validate(const ValidateOptions& options) {
  Instance instance;
  PiecewiseTrajectory traj;
  try {
    instance = load_instance(options.instance_path);
    apply_basis_override(instance, options.common);
    traj = load_solution(options.solution_path);
  } catch (const std::exception& e) {
    return failure_exit(e.what());
  }
  if (traj.shape.degree != instance.shape.degree ||
      traj.shape.dim != instance.shape.dim ||
      traj.shape.segments != instance.shape.segments)
    return failure_exit("solution shape does not match instance shape");

  ControlPointBasis basis;
  try {
    basis = instance.basis == BasisKind::Bernstein
                ? ControlPointBasis::bernstein(instance.shape.degree)
                : ControlPointBasis::load_minvo(options.common.minvo_table_path);
  } catch (const std::exception& e) {
    return failure_exit(e.what());
  }

  const ValidationSummary summary =
      validate_trajectory(traj, instance, basis, options.common.samples);
  save_validation(summary, options.common.out_dir + "/validation.json");
  std::printf("continuity %.3g  control_points %.3g  corridor %.3g  bounds %.3g  %s\n",
              summary.continuity, summary.control_point_margin,
              summary.corridor_sample_margin, summary.bound_sample_margin,
              summary.clean ? "clean" : "violated");
  return summary.clean ? 0 : 1;
}

int cmd_benchmark(const BenchmarkOptions& options) {
  struct Task {
    int n = 0;
    unsigned seed = 0;
  };
  std::vector<Task> tasks;
  for (const int n : options.n_list)
    for (int rep = 0; rep < options.repetitions; ++rep)
      tasks.push_back({n, options.seed + static_cast<unsigned>(rep)});

  struct Row {
    int n = 0;
    unsigned seed = 0;
    std::string status;
    double wall_ms = 0.0, t_ini = 0.0, t_opt = 0.0, reduction = 0.0,
           effort = 0.0;
    int iterations = 0;
    bool success = false;
  };

  std::ofstream table(options.table_path, std::ios::binary);
  if (!table)
    return failure_exit("cannot open " + options.table_path + " for writing");
  table << "n,seed,status,wall_ms,total_initial_time,total_optimized_time,"
           "reduction_rate,control_effort,iterations\n";

  std::mutex sink_mutex;
  std::vector<Row> rows;
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task task = tasks[i];

      Row row;
      row.n = task.n;
      row.seed = task.seed;
      try {
        const Instance instance =
            generate_random_corridor(task.seed, task.n, 3);
        const Problem problem = instance.to_problem();
        PipelineConfig config;
        config.solver = make_config(options.common, TimeMode::JointTime);

        const auto start = std::chrono::steady_clock::now();
        const PipelineResult result =
            pipeline_three_stage(problem, instance.initial_inputs(), config);
        const auto stop = std::chrono::steady_clock::now();
        row.wall_ms =
            std::chrono::duration<double, std::milli>(stop - start).count();

        row.t_ini = result.initial_total_time;
        for (const auto& stage :
             {result.feasibility, result.joint, result.polish})
          row.iterations += static_cast<int>(stage.trace.size());
        if (result.succeeded()) {
          row.t_opt = result.optimized_total_time;
          row.reduction = result.reduction_rate;
          row.effort = result.polish.cost_breakdown.energy;
          const ValidationSummary summary =
              validate_trajectory(result.polish.trajectory, instance,
                                  problem.basis, options.common.samples);
          row.success = summary.clean;
          row.status = summary.clean ? "converged" : "validator_violation";
        } else {
          row.status = "failed_stage_" + std::to_string(result.failed_stage);
        }
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }

      std::lock_guard<std::mutex> lock(sink_mutex);
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%d,%u,%s,%.3f,%.6g,%.6g,%.6g,%.6g,%d\n",
                    row.n, row.seed, row.status.c_str(), row.wall_ms,
                    row.t_ini, row.t_opt, row.reduction, row.effort,
                    row.iterations);
      table << buf;
      table.flush();
      rows.push_back(row);
    }
  };

  int n_workers = options.workers > 0
                      ? options.workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min<int>(n_workers, tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const int n : options.n_list) {
    int total = 0, ok = 0, iters = 0;
    double wall = 0.0, t_ini = 0.0, t_opt = 0.0, red = 0.0, eff = 0.0;
    for (const Row& row : rows) {
      if (row.n != n) continue;
      ++total;
      wall += row.wall_ms;
      iters += row.iterations;
      if (!row.success) continue;
      ++ok;
      t_ini += row.t_ini;
      t_opt += row.t_opt;
      red += row.reduction;
      eff += row.effort;
    }
    const double denom = ok > 0 ? ok : 1;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%d,summary,%d/%d,%.3f,%.6g,%.6g,%.6g,%.6g,%d\n", n, ok,
                  total, wall / std::max(total, 1), t_ini / denom,
                  t_opt / denom, red / denom, eff / denom,
                  iters / std::max(total, 1));
    table << buf;
  }
  return 0;
}

int cmd_random(const RandomOptions& options) {
  try {
    CorridorGeometry geometry;
    geometry.degree = options.degree;
    const Instance instance = generate_random_corridor(
        options.seed, options.segments, options.dim, geometry);
    save_instance(instance, options.out_path);
  } catch (const std::exception& e) {
    return failure_exit(e.what());
  }
  return 0;
}

}  // namespace polytraj::cli
