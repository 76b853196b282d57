#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gnode/cli/commands.hpp"
#include "gnode/parallel.hpp"

using namespace gnode;

int main(int argc, char** argv) {
  CLI::App app{"Graph neural ODEs for constrained particle systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string dataset;
  int n_workers = 0;
  bool resume = false;
  bool oracle = false;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("-o,--out", out, "output directory (default: config output_dir)");
    sub->add_option("--workers", n_workers, "OpenMP threads (default: all)")->check(CLI::NonNegativeNumber);
  };
  auto* gen = app.add_subcommand("generate", "simulate ground-truth trajectories into a dataset");
  common(gen);
  gen->add_option("--dataset", dataset, "dataset file to write");
  auto* train = app.add_subcommand("train", "fit a model to a dataset");
  common(train);
  train->add_option("--dataset", dataset, "dataset file to read");
  train->add_option("--checkpoint", checkpoint, "checkpoint file to write (and resume from)");
  train->add_flag("--resume", resume, "continue from the checkpoint's training state");
  auto* eval = app.add_subcommand("evaluate", "rollout metrics on the configured target sizes");
  common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");
  auto* roll = app.add_subcommand("rollout", "one predicted trajectory next to its ground truth");
  common(roll);
  roll->add_option("--checkpoint", checkpoint, "checkpoint to roll out");
  roll->add_flag("--oracle", oracle, "use the ground-truth acceleration instead of a model");
  auto* report = app.add_subcommand("report", "summarise train/eval outputs as markdown");
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }

  try {
    set_workers(n_workers);
    auto cfg = cli::load_config(config_path);
    if (seed) cfg.reseed(*seed);
    cli::Paths paths;
    paths.out = out.empty() ? cfg.output_dir : out;
    if (!dataset.empty()) paths.dataset = dataset;
    if (!checkpoint.empty()) paths.checkpoint = checkpoint;

    if (*gen) cli::cmd_generate(cfg, paths, std::cout);
    else if (*train) cli::cmd_train(cfg, paths, resume, std::cout);
    else if (*eval) cli::cmd_evaluate(cfg, paths, std::cout);
    else if (*roll) cli::cmd_rollout(cfg, paths, oracle, std::cout);
    else if (*report) cli::cmd_report(cfg, paths, std::cout);
    return cli::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
}
