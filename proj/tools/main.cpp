#include <CLI11.hpp>

#include <cstdlib>

#include "polytraj/cli.hpp"

namespace {

void add_common(CLI::App* app, polytraj::cli::CommonOptions* common) {
  app->add_option("--out-dir", common->out_dir, "Directory for result files");
  app->add_option("--basis", common->basis_override,
                  "Control-point basis override")
      ->check(CLI::IsMember({"bernstein", "minvo"}));
  app->add_option("--mu-init", common->mu_init,
                  "Initial barrier parameter (0 = automatic)");
  app->add_option("--tol", common->tol, "Stationarity tolerance");
  app->add_option("--max-iter", common->max_iter, "Iteration limit per solve");
  app->add_option("--t-min", common->t_min,
                  "Duration lower bound (0 = instance value)");
  app->add_option("--samples", common->samples,
                  "Validation samples per segment");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-polynomial trajectory generation via "
               "interior-point differential dynamic programming"};
  app.require_subcommand(1);

  polytraj::cli::GenerateOptions generate;
  polytraj::cli::LqtOptions lqt;
  polytraj::cli::BenchmarkOptions benchmark;
  polytraj::cli::ValidateOptions validate;
  polytraj::cli::RandomOptions random;

  if (const char* env = std::getenv("POLYTRAJ_MINVO_TABLE")) {
    generate.common.minvo_table_path = env;
    lqt.common.minvo_table_path = env;
    benchmark.common.minvo_table_path = env;
    validate.common.minvo_table_path = env;
  }

  CLI::App* gen_cmd = app.add_subcommand(
      "generate", "Solve a corridor instance (three-stage joint "
                  "energy-time schedule or fixed-time)");
  gen_cmd->add_option("instance", generate.instance_path, "Instance file")
      ->required();
  gen_cmd->add_option("--mode", generate.mode, "joint or fixed-time")
      ->check(CLI::IsMember({"joint", "fixed-time"}));
  add_common(gen_cmd, &generate.common);

  CLI::App* lqt_cmd = app.add_subcommand(
      "lqt", "Analytic unconstrained fixed-time solve");
  lqt_cmd->add_option("instance", lqt.instance_path, "Instance file")
      ->required();
  add_common(lqt_cmd, &lqt.common);

  CLI::App* bench_cmd =
      app.add_subcommand("benchmark", "Random-instance benchmark sweep");
  bench_cmd->add_option("--n-list", benchmark.n_list, "Segment counts");
  bench_cmd->add_option("--seed", benchmark.seed, "Base seed");
  bench_cmd->add_option("--repetitions", benchmark.repetitions,
                        "Instances per segment count");
  bench_cmd->add_option("--workers", benchmark.workers,
                        "Worker threads (0 = hardware)");
  bench_cmd->add_option("--table", benchmark.table_path, "Output table path");
  add_common(bench_cmd, &benchmark.common);

  CLI::App* val_cmd = app.add_subcommand(
      "validate", "Check a solution file against its instance");
  val_cmd->add_option("solution", validate.solution_path, "Solution file")
      ->required();
  val_cmd->add_option("instance", validate.instance_path, "Instance file")
      ->required();
  add_common(val_cmd, &validate.common);

  CLI::App* rand_cmd =
      app.add_subcommand("random", "Emit a random corridor instance");
  rand_cmd->add_option("--seed", random.seed, "Generator seed");
  rand_cmd->add_option("--segments", random.segments, "Segment count");
  rand_cmd->add_option("--dim", random.dim, "Spatial dimension");
  rand_cmd->add_option("--degree", random.degree, "Polynomial degree (odd)");
  rand_cmd->add_option("--out", random.out_path, "Output instance path");

  CLI11_PARSE(app, argc, argv);

  if (gen_cmd->parsed()) return polytraj::cli::cmd_generate(generate);
  if (lqt_cmd->parsed()) return polytraj::cli::cmd_lqt(lqt);
  if (bench_cmd->parsed()) return polytraj::cli::cmd_benchmark(benchmark);
  if (val_cmd->parsed()) return polytraj::cli::cmd_validate(validate);
  if (rand_cmd->parsed()) return polytraj::cli::cmd_random(random);
  return 2;
}
