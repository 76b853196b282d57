#include "gnode/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "gnode/num/error.hpp"
#include "gnode/num/ops.hpp"
#include "gnode/parallel.hpp"

namespace gnode::training {

using models::Model;
using num::Tape;
using num::Var;

void Hyperparams::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (batch == 0) throw ConfigError("train: batch must be >= 1");
  if (stop_window == 0) throw ConfigError("train: stop_window must be >= 1");
  if (!(stop_threshold >= 0.0)) throw ConfigError("train: stop_threshold must be >= 0");
}

double loss(const Matrix& predicted, const Matrix& target) {
  require_same_shape(predicted, target, "loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - target[i];
    acc += e * e;
  }
  return acc / static_cast<double>(predicted.rows());
}

double loss(std::span<const Matrix> predicted, std::span<const Matrix> target) {
  if (predicted.size() != target.size() || predicted.empty()) {
    throw ShapeError("loss: batch sizes differ or are empty");
  }
  double acc = 0.0;
  for (std::size_t b = 0; b < predicted.size(); ++b) acc += loss(predicted[b], target[b]);
  return acc / static_cast<double>(predicted.size());
}

Var sample_loss(Var predicted, const Matrix& target) {
  require_same_shape(predicted.value(), target, "sample_loss");
  Tape& tape = *predicted.tape;
  const Var err = num::sub(predicted, tape.constant_ref(target));
  return num::scale(num::sum(num::square(err)), 1.0 / static_cast<double>(target.rows()));
}

namespace {

struct SampleGrad {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

SampleGrad one_sample(const Model& model, const models::GraphTopology& topo, const Dataset& ds,
                      std::size_t index) {
  const Sample& s = ds.samples.at(index);
  const physics::State state{s.q, s.qdot, 0.0};
  Tape tape;
  const auto bound = model.params().bind(tape, true);
  const auto cons = model.uses_constraints()
                        ? physics::constraints(ds.spec, state)
                        : physics::ConstraintBlock{Matrix(0, 1), Matrix(0, ds.spec.dof()),
                                                   Matrix(0, ds.spec.dof())};
  const Var l = sample_loss(model.acceleration(bound, topo, state, cons), s.target);
  tape.backward(l);
  return {l.value().item(), model.params().gradients(tape, bound)};
}

void add_into(std::vector<Matrix>& acc, const std::vector<Matrix>& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

BatchResult finish(double loss_sum, std::vector<Matrix> grads, std::size_t count) {
  const double inv = 1.0 / static_cast<double>(count);
  for (auto& g : grads) g *= inv;
  return {loss_sum * inv, std::move(grads)};
}

}  // namespace

BatchResult batch_gradient(const Model& model, const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("batch_gradient: empty batch");
  const auto topo = models::build_topology(ds.spec);
  std::vector<SampleGrad> per(indices.size());
  parallel_for(indices.size(), [&](std::size_t b) { per[b] = one_sample(model, topo, ds, indices[b]); });
  std::vector<Matrix> grads = model.params().zeros_like();
  double loss_sum = 0.0;
  for (const auto& p : per) {
    loss_sum += p.loss;
    add_into(grads, p.grads);
  }
  return finish(loss_sum, std::move(grads), indices.size());
}

BatchResult batch_gradient_serial(const Model& model, const Dataset& ds,
                                  std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("batch_gradient: empty batch");
  const auto topo = models::build_topology(ds.spec);
  std::vector<Matrix> grads = model.params().zeros_like();
  double loss_sum = 0.0;
  for (std::size_t index : indices) {
    const auto p = one_sample(model, topo, ds, index);
    loss_sum += p.loss;
    add_into(grads, p.grads);
  }
  return finish(loss_sum, std::move(grads), indices.size());
}

double evaluate_loss(const Model& model, const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto topo = models::build_topology(ds.spec);
  std::vector<double> per(indices.size());
  parallel_for(indices.size(), [&](std::size_t b) {
    const Sample& s = ds.samples.at(indices[b]);
    const physics::State state{s.q, s.qdot, 0.0};
    const auto cons = model.uses_constraints()
                          ? physics::constraints(ds.spec, state)
                          : physics::ConstraintBlock{Matrix(0, 1), Matrix(0, ds.spec.dof()),
                                                     Matrix(0, ds.spec.dof())};
    per[b] = loss(model.predict(topo, state, cons), s.target);
  });
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(per.size());
}

TrainState TrainState::fresh(const Model& model) {
  TrainState s;
  s.current = model.params();
  s.adam = num::AdamState::for_params(model.params());
  s.best = model.params();
  return s;
}

TrainReport train(Model& model, const Dataset& ds, const Hyperparams& hp, TrainState& state,
                  const EpochCallback& on_epoch) {
  hp.validate();
  if (ds.train.empty()) throw ConfigError("train: dataset has no training samples");
  if (!model.is_graph() && ds.spec.n != model.config().system_size) {
    throw TransductiveError("NODE was built for a " + std::to_string(model.config().system_size) +
                            "-particle system, dataset has " + std::to_string(ds.spec.n));
  }
  if (state.current.size() != model.params().size()) throw ConfigError("train: resume state does not match model");
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  model.params() = state.current;
  // Validation loss drives model selection and stopping; with no validation
  // split the training loss stands in.
  const bool has_val = !ds.validation.empty();

  std::vector<std::size_t> order = ds.train;
  while (state.epoch < hp.max_epochs) {
    const std::size_t epoch = state.epoch;
    std::mt19937_64 rng(derive_seed(hp.seed, epoch));
    order = ds.train;
    std::shuffle(order.begin(), order.end(), rng);

    double train_sum = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += hp.batch) {
      const std::size_t hi = std::min(order.size(), lo + hp.batch);
      const std::span<const std::size_t> batch(order.data() + lo, hi - lo);
      const BatchResult r = batch_gradient(model, ds, batch);
      if (!std::isfinite(r.loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      train_sum += r.loss * static_cast<double>(batch.size());
      num::adam_step(model.params(), r.grads, state.adam, hp.lr);
    }
    const double train_loss = train_sum / static_cast<double>(order.size());
    const double val_loss = has_val ? evaluate_loss(model, ds, ds.validation) : train_loss;
    if (!std::isfinite(val_loss)) {
      throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    state.train_loss.push_back(train_loss);
    state.val_loss.push_back(val_loss);
    if (val_loss < state.best_loss) {
      state.best_loss = val_loss;
      state.best_epoch = epoch;
      state.best = model.params();
    }
    state.best_history.push_back(state.best_loss);
    state.current = model.params();
    state.epoch = epoch + 1;
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);

    const std::size_t done = state.best_history.size();
    if (done > hp.stop_window) {
      const double before = state.best_history[done - 1 - hp.stop_window];
      const double now = state.best_history[done - 1];
      if (before <= 0.0 || (before - now) / before < hp.stop_threshold) {
        report.stop_reason = "saturated";
        break;
      }
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
  model.params() = state.best;
  report.train_loss = state.train_loss;
  report.val_loss = state.val_loss;
  report.epochs = state.epoch;
  report.best_epoch = state.best_epoch;
  report.best_loss = state.best_loss;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainReport train(Model& model, const Dataset& ds, const Hyperparams& hp) {
  TrainState state = TrainState::fresh(model);
  return train(model, ds, hp, state);
}

}  // namespace gnode::training
