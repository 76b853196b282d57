#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "gnode/models/model.hpp"
#include "gnode/physics/dynamics.hpp"

namespace gnode::evaluation {

using num::Matrix;
using physics::SystemSpec;
using physics::Trajectory;

struct RolloutConfig {
  double dt = 1e-5;
  std::size_t record_every = 1000;
  double horizon = 10.0;  // s

  // Pendulum: 1e-5 s steps recorded every 1e-2 s for 10 s; spring: 1e-3 s
  // steps recorded every 0.1 s for 20 s.
  static RolloutConfig defaults_for(physics::SystemKind kind);
  std::size_t n_steps() const;
  void validate() const;
};

// Velocity Verlet with an arbitrary acceleration field. A non-finite state or
// a singular/numerical failure inside `accel` ends the rollout: the finite
// prefix is kept and blew_up/blow_up_step are set.
Trajectory rollout(const physics::AccelFn& accel, const SystemSpec& spec, const physics::State& init,
                   const RolloutConfig& cfg);
Trajectory rollout(const models::Model& model, const SystemSpec& spec, const physics::State& init,
                   const RolloutConfig& cfg);

struct MetricSeries {
  std::size_t trajectory = 0;
  std::vector<double> t;
  std::vector<double> re;
  std::vector<double> ee;
  std::vector<double> me;
  // Geometric means over t > 0.
  double re_gm = 0.0;
  double ee_gm = 0.0;
  double me_gm = 0.0;
  bool blew_up = false;
};

// |a - b| / (|a| + |b|), with 0/0 = 0 and x/0 = 1.
double normalized_error(double diff_norm, double a_norm, double b_norm);

// RE, EE and ME of `predicted` against `truth`. Energies and momenta use the
// ground-truth spec on both trajectories. A truncated (blown-up) prediction
// scores 1 on the missing tail. Grids must otherwise agree.
MetricSeries metrics(const Trajectory& predicted, const Trajectory& truth, const SystemSpec& spec,
                     std::size_t trajectory_id = 0);

inline constexpr double kGeoFloor = 1e-30;

// exp(mean(log(x + 1e-30))) over the given values.
double geometric_mean(const std::vector<double>& xs);
// Empirical percentile with linear interpolation between order statistics.
double percentile(std::vector<double> xs, double p);

struct Band {
  std::vector<double> mean;  // per-time geometric mean
  std::vector<double> lo;    // 2.5th percentile
  std::vector<double> hi;    // 97.5th percentile
};

struct AggregateReport {
  std::vector<double> t;
  Band re, ee, me;
  std::size_t count = 0;
  std::size_t blow_ups = 0;
  // Geometric mean across trajectories of each per-series geometric mean.
  double re_gm = 0.0;
  double ee_gm = 0.0;
  double me_gm = 0.0;
};

AggregateReport aggregate(const std::vector<MetricSeries>& series);

struct EnsembleResult {
  std::vector<MetricSeries> series;
  AggregateReport report;
};

// n_init seeded initial conditions (random_initial_state(derive_seed(seed, i))),
// ground truth and learned rollouts for each, then metrics and aggregation.
// The OpenMP kernel runs trajectories concurrently; the serial one is the
// reference and must agree bitwise.
EnsembleResult evaluate_ensemble(const models::Model& model, const SystemSpec& spec, std::size_t n_init,
                                 std::uint64_t seed, const RolloutConfig& cfg);
EnsembleResult evaluate_ensemble_serial(const models::Model& model, const SystemSpec& spec,
                                        std::size_t n_init, std::uint64_t seed, const RolloutConfig& cfg);

// Evaluates a graph model trained on `trained` at each target size without
// touching its parameters. NODE raises TransductiveError.
std::map<std::size_t, AggregateReport> zero_shot_eval(const models::Model& model, const SystemSpec& trained,
                                                      const std::vector<std::size_t>& target_sizes,
                                                      std::size_t n_init, std::uint64_t seed,
                                                      const RolloutConfig& cfg);

}  // namespace gnode::evaluation
