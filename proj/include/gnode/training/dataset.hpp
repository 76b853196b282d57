#pragma once

#include <cstdint>
#include <vector>

#include "gnode/physics/dynamics.hpp"

namespace gnode::training {

using num::Matrix;
using physics::SystemSpec;
using physics::Trajectory;

// One supervised example: a recorded state and its second-difference
// acceleration target.
struct Sample {
  Matrix q;
  Matrix qdot;
  Matrix target;
  std::size_t trajectory = 0;
  std::size_t time_index = 0;
};

struct Dataset {
  SystemSpec spec;
  double dt_record = 0.0;
  std::vector<Sample> samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct DataConfig {
  std::size_t n_traj = 100;
  std::size_t points = 100;
  double dt = 1e-5;
  std::size_t record_every = 1000;
  std::uint64_t seed = 0;

  // Integrator settings used for the given system kind when none are set.
  static DataConfig defaults_for(physics::SystemKind kind);
};

// (q_next + q_prev - 2 q_now) / dt^2
Matrix verlet_target(const Matrix& q_prev, const Matrix& q_now, const Matrix& q_next, double dt);

// Inverse of verlet_target: q_next = 2 q_now - q_prev + qdd dt^2.
Matrix position_verlet_step(const Matrix& q_prev, const Matrix& q_now, const Matrix& qdd, double dt);

// Samples at recorded indices 1..points; a trajectory shorter than
// points + 2 states raises ConfigError.
std::vector<Sample> samples_from_trajectory(const Trajectory& traj, std::size_t points,
                                            std::size_t trajectory_id);

// Ground-truth rollouts from random_initial_state(derive_seed(seed, i)), each
// long enough for `points` interior samples. Parallel over trajectories.
std::vector<Trajectory> generate_trajectories(const SystemSpec& spec, const DataConfig& cfg);
std::vector<Trajectory> generate_trajectories_serial(const SystemSpec& spec, const DataConfig& cfg);

// Trajectories, targets and a seeded 75:25 train/validation split.
Dataset generate_dataset(const SystemSpec& spec, const DataConfig& cfg);

// Disjoint, exhaustive partition; round(train_fraction * N) training indices.
void split_dataset(Dataset& ds, std::uint64_t seed, double train_fraction = 0.75);

}  // namespace gnode::training
