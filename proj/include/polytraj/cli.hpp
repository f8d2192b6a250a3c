#ifndef POLYTRAJ_CLI_HPP
#define POLYTRAJ_CLI_HPP

#include <string>
#include <vector>

#include "polytraj/ipddp.hpp"
#include "polytraj/problem_io.hpp"

// Command implementations behind the polytraj binary.  Each returns the
// process exit code: 0 success, 1 solver failure, 2 input error.
namespace polytraj::cli {

struct CommonOptions {
  std::string out_dir = ".";
  std::string basis_override;       // "", "bernstein" or "minvo"
  std::string minvo_table_path;     // from POLYTRAJ_MINVO_TABLE
  double mu_init = 0.0;
  double tol = 1e-6;
  int max_iter = 500;
  double t_min = 0.0;               // 0 keeps the instance value
  int samples = 1000;
};

struct GenerateOptions {
  std::string instance_path;
  std::string mode = "joint";  // "joint" or "fixed-time"
  CommonOptions common;
};
int cmd_generate(const GenerateOptions& options);

struct LqtOptions {
  std::string instance_path;
  CommonOptions common;
};
int cmd_lqt(const LqtOptions& options);

struct BenchmarkOptions {
  std::vector<int> n_list = {2, 4, 8, 16, 32, 64};
  unsigned seed = 1;
  int repetitions = 3;
  int workers = 0;  // 0 picks hardware concurrency
  std::string table_path = "benchmark.csv";
  CommonOptions common;
};
int cmd_benchmark(const BenchmarkOptions& options);

struct ValidateOptions {
  std::string solution_path;
  std::string instance_path;
  CommonOptions common;
};
int cmd_validate(const ValidateOptions& options);

struct RandomOptions {
  unsigned seed = 1;
  int segments = 8;
  int dim = 3;
  int degree = 5;
  std::string out_path = "instance.json";
};
int cmd_random(const RandomOptions& options);

// Solution-file helpers (JSON: shape, per-segment duration + row-major
// coefficients, cost breakdown, status).
void save_solution(const SolveResult& result, const SplineShape& shape,
                   const std::string& path);
PiecewiseTrajectory load_solution(const std::string& path);
void save_trace(const std::vector<std::pair<std::string, const SolveResult*>>& stages,
                const std::string& path);

struct ValidationSummary {
  double continuity = 0.0;
  double control_point_margin = 0.0;
  double corridor_sample_margin = 0.0;
  double bound_sample_margin = 0.0;
  bool clean = false;
};
ValidationSummary validate_trajectory(const PiecewiseTrajectory& traj,
                                      const Instance& instance,
                                      const ControlPointBasis& basis,
                                      int samples);
void save_validation(const ValidationSummary& summary, const std::string& path);

}  // namespace polytraj::cli

#endif
