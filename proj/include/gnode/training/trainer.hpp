#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gnode/models/model.hpp"
#include "gnode/num/adam.hpp"
#include "gnode/num/tape.hpp"
#include "gnode/training/dataset.hpp"

namespace gnode::training {

struct Hyperparams {
  double lr = 1e-3;
  std::size_t batch = 100;
  std::size_t max_epochs = 10000;
  // Stop when the best validation loss improved by less than
  // `stop_threshold` (relative) over the trailing `stop_window` epochs.
  std::size_t stop_window = 100;
  double stop_threshold = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-sample loss: (1/n) sum_i |qdd_i - qdd_hat_i|^2.
double loss(const Matrix& predicted, const Matrix& target);
// Mean of per-sample losses.
double loss(std::span<const Matrix> predicted, std::span<const Matrix> target);
num::Var sample_loss(num::Var predicted, const Matrix& target);

struct BatchResult {
  double loss = 0.0;
  std::vector<Matrix> grads;  // mean over the batch, aligned with the ParamSet
};

// Batch loss and gradient. The OpenMP kernel evaluates samples concurrently
// and reduces in sample order, so it agrees bitwise with the serial
// reference.
BatchResult batch_gradient(const models::Model& model, const Dataset& ds,
                           std::span<const std::size_t> indices);
BatchResult batch_gradient_serial(const models::Model& model, const Dataset& ds,
                                  std::span<const std::size_t> indices);

// Mean loss over `indices` without gradients.
double evaluate_loss(const models::Model& model, const Dataset& ds, std::span<const std::size_t> indices);

// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  num::ParamSet current;
  num::AdamState adam;
  std::size_t epoch = 0;
  num::ParamSet best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> best_history;

  static TrainState fresh(const models::Model& model);
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
  std::string stop_reason;
  double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

// Mini-batched Adam until max_epochs or the saturation rule fires. On return
// the model holds the best-validation parameters; `state` holds the latest
// ones and can be passed back in to resume. Non-finite loss raises
// NumericalError naming the epoch.
TrainReport train(models::Model& model, const Dataset& ds, const Hyperparams& hp, TrainState& state,
                  const EpochCallback& on_epoch = {});
TrainReport train(models::Model& model, const Dataset& ds, const Hyperparams& hp);

}  // namespace gnode::training
