#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "gnode/evaluation/evaluation.hpp"
#include "gnode/models/model.hpp"
#include "gnode/training/trainer.hpp"

// JSON and CSV file formats. Matrices of per-particle quantities (q, qd,
// targets) are nested row-major arrays [[x, y], ...]; parameter tensors are
// {"name", "shape": [rows, cols], "data": [row-major values]}. Non-finite
// numbers are written as null.
namespace gnode::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

json to_json(const num::Matrix& m);
num::Matrix matrix_from_json(const json& j);

json to_json(const physics::SystemSpec& spec);
physics::SystemSpec spec_from_json(const json& j);

json to_json(const physics::State& s);
physics::State state_from_json(const json& j);

json to_json(const physics::Trajectory& traj);
physics::Trajectory trajectory_from_json(const json& j);

json to_json(const training::Dataset& ds);
training::Dataset dataset_from_json(const json& j);

json to_json(const num::ParamSet& params, std::uint64_t init_seed);
num::ParamSet params_from_json(const json& j);

json to_json(const models::ModelConfig& cfg);
models::ModelConfig model_config_from_json(const json& j);

json to_json(const training::TrainState& state);
training::TrainState train_state_from_json(const json& j);

// Variant tag, architecture, weights and (optionally) everything needed to
// resume training.
struct Checkpoint {
  models::ModelConfig config;
  num::ParamSet params;
  std::uint64_t init_seed = 0;
  physics::SystemSpec trained_on;
  std::optional<training::TrainState> resume;

  models::Model model() const { return models::Model(config, params); }
};

json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const json& j);

json to_json(const training::TrainReport& report);

json to_json(const evaluation::MetricSeries& m);
json to_json(const evaluation::AggregateReport& r);

// epoch,train_loss,val_loss
std::string loss_curve_csv(const training::TrainReport& report);
// t,metric,lo,hi for one of "re", "ee", "me".
std::string metric_csv(const evaluation::AggregateReport& r, const std::string& metric);

// File helpers; failures raise IoError naming the path.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

// Stable serialisation used for files and checksums.
std::string dump(const json& j);
// FNV-1a 64 of a byte string, as 16 hex digits.
std::string checksum_hex(const std::string& bytes);

}  // namespace gnode::io
