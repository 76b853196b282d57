#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "gnode/cli/config.hpp"

namespace gnode::cli {

namespace fs = std::filesystem;

// Files written by the commands, relative to the output directory.
inline constexpr const char* kDatasetFile = "dataset.json";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kTrainReportFile = "train_report.json";
inline constexpr const char* kLossCurveFile = "loss_curve.csv";
inline constexpr const char* kEvalDir = "eval";
inline constexpr const char* kRolloutFile = "rollout.json";
inline constexpr const char* kReportFile = "report.md";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

// Maps the library's error classes onto exit codes; anything else is 1.
int exit_code_for(const std::exception& e);

struct Paths {
  fs::path out;
  std::optional<fs::path> dataset;
  std::optional<fs::path> checkpoint;

  fs::path dataset_path() const { return dataset.value_or(out / kDatasetFile); }
  fs::path checkpoint_path() const { return checkpoint.value_or(out / kCheckpointFile); }
};

// Ground-truth dataset plus a manifest of seeds and file checksums.
void cmd_generate(const RunConfig& cfg, const Paths& paths, std::ostream& log);
// Trains on the dataset; writes checkpoint, report and loss curve. With
// `resume`, continues from the training state stored in the checkpoint.
void cmd_train(const RunConfig& cfg, const Paths& paths, bool resume, std::ostream& log);
// Evaluates the checkpoint on every configured target size; one CSV per
// (size, metric) plus a JSON mirror.
void cmd_evaluate(const RunConfig& cfg, const Paths& paths, std::ostream& log);
// One rollout and its ground truth from the eval seed. With `oracle` the
// ground-truth acceleration stands in for the model (no checkpoint needed).
void cmd_rollout(const RunConfig& cfg, const Paths& paths, bool oracle, std::ostream& log);
// Markdown summary of whatever train/eval outputs exist in the directory.
void cmd_report(const RunConfig& cfg, const Paths& paths, std::ostream& log);

}  // namespace gnode::cli
