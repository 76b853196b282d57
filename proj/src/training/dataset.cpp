#include "gnode/training/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gnode/num/error.hpp"
#include "gnode/parallel.hpp"

namespace gnode::training {

DataConfig DataConfig::defaults_for(physics::SystemKind kind) {
  DataConfig c;
  if (kind == physics::SystemKind::Spring) {
    c.dt = 1e-3;
    c.record_every = 100;
  }
  return c;
}

Matrix verlet_target(const Matrix& q_prev, const Matrix& q_now, const Matrix& q_next, double dt) {
  if (!(dt > 0.0)) throw ConfigError("verlet_target: dt must be positive");
  require_same_shape(q_prev, q_now, "verlet_target");
  require_same_shape(q_now, q_next, "verlet_target");
  Matrix out(q_now.rows(), q_now.cols());
  const double inv = 1.0 / (dt * dt);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (q_next[i] + q_prev[i] - 2.0 * q_now[i]) * inv;
  return out;
}

Matrix position_verlet_step(const Matrix& q_prev, const Matrix& q_now, const Matrix& qdd, double dt) {
  Matrix out(q_now.rows(), q_now.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 2.0 * q_now[i] - q_prev[i] + qdd[i] * (dt * dt);
  return out;
}

std::vector<Sample> samples_from_trajectory(const Trajectory& traj, std::size_t points,
                                            std::size_t trajectory_id) {
  if (traj.states.size() < points + 2) {
    throw ConfigError("trajectory " + std::to_string(trajectory_id) + " has " +
                      std::to_string(traj.states.size()) + " recorded states; " +
                      std::to_string(points) + " samples need " + std::to_string(points + 2));
  }
  std::vector<Sample> out;
  out.reserve(points);
  for (std::size_t i = 1; i <= points; ++i) {
    const auto& s = traj.states[i];
    out.push_back(Sample{s.q, s.qdot,
                         verlet_target(traj.states[i - 1].q, s.q, traj.states[i + 1].q, traj.dt_record),
                         trajectory_id, i});
  }
  return out;
}

namespace {

void check_config(const SystemSpec& spec, const DataConfig& cfg) {
  spec.validate();
  if (cfg.n_traj == 0 || cfg.points == 0) throw ConfigError("data: n_traj and points must be >= 1");
  if (!(cfg.dt > 0.0) || cfg.record_every == 0) {
    throw ConfigError("data: dt must be positive and record_every >= 1");
  }
}

Trajectory one_trajectory(const SystemSpec& spec, const DataConfig& cfg, std::size_t i) {
  const auto init = physics::random_initial_state(spec, derive_seed(cfg.seed, i));
  return physics::simulate(spec, init, cfg.dt, (cfg.points + 1) * cfg.record_every, cfg.record_every);
}

}  // namespace

std::vector<Trajectory> generate_trajectories(const SystemSpec& spec, const DataConfig& cfg) {
  check_config(spec, cfg);
  std::vector<Trajectory> out(cfg.n_traj);
  parallel_for(cfg.n_traj, [&](std::size_t i) { out[i] = one_trajectory(spec, cfg, i); });
  return out;
}

std::vector<Trajectory> generate_trajectories_serial(const SystemSpec& spec, const DataConfig& cfg) {
  check_config(spec, cfg);
  std::vector<Trajectory> out;
  out.reserve(cfg.n_traj);
  for (std::size_t i = 0; i < cfg.n_traj; ++i) out.push_back(one_trajectory(spec, cfg, i));
  return out;
}

Dataset generate_dataset(const SystemSpec& spec, const DataConfig& cfg) {
  const auto trajs = generate_trajectories(spec, cfg);
  Dataset ds;
  ds.spec = spec;
  ds.dt_record = cfg.dt * static_cast<double>(cfg.record_every);
  ds.samples.reserve(cfg.n_traj * cfg.points);
  for (std::size_t t = 0; t < trajs.size(); ++t)
    for (auto& s : samples_from_trajectory(trajs[t], cfg.points, t)) ds.samples.push_back(std::move(s));
  split_dataset(ds, derive_seed(cfg.seed, 0xDA7A5E7ull));
  return ds;
}

void split_dataset(Dataset& ds, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("split: train fraction must be in (0, 1]");
  }
  std::vector<std::size_t> idx(ds.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
  ds.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.validation.begin(), ds.validation.end());
}

}  // namespace gnode::training
