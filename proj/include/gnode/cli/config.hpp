#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "gnode/evaluation/evaluation.hpp"
#include "gnode/models/model.hpp"
#include "gnode/training/dataset.hpp"
#include "gnode/training/trainer.hpp"

namespace gnode::cli {

inline constexpr int kConfigVersion = 1;

struct EvalConfig {
  std::size_t n_init = 10;
  evaluation::RolloutConfig rollout;
  std::vector<std::size_t> targets;  // system sizes; empty means the trained size
};

// One run: what to simulate, how to sample it, which model to fit, how to
// train and evaluate it. Sub-seeds for each stage derive from `seed`.
struct RunConfig {
  physics::SystemSpec system;
  training::DataConfig data;
  models::ModelConfig model;
  training::Hyperparams train;
  EvalConfig eval;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  std::uint64_t data_seed() const;
  std::uint64_t init_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t eval_seed() const;
  // Re-derives every stage seed after `seed` changes.
  void reseed(std::uint64_t s);
  // Checks every block against the module preconditions; ConfigError (or
  // TransductiveError) on the first violation.
  void validate() const;
};

// Parses the versioned JSON config; unknown keys anywhere raise ConfigError.
// Omitted keys take defaults for the chosen system kind.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace gnode::cli
