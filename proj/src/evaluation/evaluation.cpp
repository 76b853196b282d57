#include "gnode/evaluation/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "gnode/num/error.hpp"
#include "gnode/parallel.hpp"

namespace gnode::evaluation {

using physics::State;

RolloutConfig RolloutConfig::defaults_for(physics::SystemKind kind) {
  if (kind == physics::SystemKind::Spring) return {1e-3, 100, 20.0};
  return {};
}

std::size_t RolloutConfig::n_steps() const {
  const double chunk = dt * static_cast<double>(record_every);
  return static_cast<std::size_t>(std::llround(horizon / chunk)) * record_every;
}

void RolloutConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("rollout: dt must be positive");
  if (record_every == 0) throw ConfigError("rollout: record_every must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("rollout: horizon must be positive");
  if (n_steps() == 0) throw ConfigError("rollout: horizon shorter than one recording interval");
}

namespace {

bool finite_state(const State& s) { return num::all_finite(s.q.span()) && num::all_finite(s.qdot.span()); }

}  // namespace

Trajectory rollout(const physics::AccelFn& accel, const SystemSpec& spec, const State& init,
                   const RolloutConfig& cfg) {
  cfg.validate();
  spec.validate();
  const std::size_t n_steps = cfg.n_steps();
  Trajectory traj{spec, cfg.dt * static_cast<double>(cfg.record_every), {}, false, std::nullopt};
  traj.states.reserve(n_steps / cfg.record_every + 1);
  traj.states.push_back(init);
  physics::VerletStepper stepper(init, cfg.dt);
  auto fail = [&](std::size_t step) {
    traj.blew_up = true;
    traj.blow_up_step = step;
    return traj;
  };
  for (std::size_t step = 1; step <= n_steps; ++step) {
    try {
      stepper.step(accel);
    } catch (const SingularError&) {
      return fail(step);
    } catch (const NumericalError&) {
      return fail(step);
    }
    // A non-finite acceleration shows up in qd (and q) of the same step.
    if (!finite_state(stepper.state())) return fail(step);
    if (step % cfg.record_every == 0) traj.states.push_back(stepper.state());
  }
  return traj;
}

Trajectory rollout(const models::Model& model, const SystemSpec& spec, const State& init,
                   const RolloutConfig& cfg) {
  return rollout(models::make_accel_fn(model, spec), spec, init, cfg);
}

double normalized_error(double diff_norm, double a_norm, double b_norm) {
  const double den = a_norm + b_norm;
  if (den == 0.0) return diff_norm == 0.0 ? 0.0 : 1.0;
  return std::min(1.0, diff_norm / den);
}

namespace {

double norm_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double series_gm(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  return geometric_mean(std::vector<double>(xs.begin() + 1, xs.end()));
}

}  // namespace

MetricSeries metrics(const Trajectory& predicted, const Trajectory& truth, const SystemSpec& spec,
                     std::size_t trajectory_id) {
  const double tol = 1e-9 * std::max(1.0, truth.dt_record);
  if (std::abs(predicted.dt_record - truth.dt_record) > tol) {
    throw ConfigError("metrics: recording intervals differ");
  }
  if (predicted.states.size() > truth.states.size() ||
      (!predicted.blew_up && predicted.states.size() != truth.states.size())) {
    throw ConfigError("metrics: time grids differ (" + std::to_string(predicted.states.size()) + " vs " +
                      std::to_string(truth.states.size()) + " states)");
  }
  MetricSeries m;
  m.trajectory = trajectory_id;
  m.blew_up = predicted.blew_up;
  const std::size_t len = truth.states.size();
  m.t.resize(len);
  m.re.assign(len, 1.0);
  m.ee.assign(len, 1.0);
  m.me.assign(len, 1.0);
  for (std::size_t k = 0; k < len; ++k) {
    const State& y = truth.states[k];
    m.t[k] = y.t;
    if (k >= predicted.states.size()) continue;
    const State& p = predicted.states[k];
    if (std::abs(p.t - y.t) > tol * static_cast<double>(k + 1)) {
      throw ConfigError("metrics: time grids differ at index " + std::to_string(k));
    }
    num::require_same_shape(p.q, y.q, "metrics");
    m.re[k] = normalized_error(num::norm2((p.q - y.q).span()), num::norm2(p.q.span()), num::norm2(y.q.span()));
    const double hp = physics::hamiltonian(spec, p);
    const double ht = physics::hamiltonian(spec, y);
    m.ee[k] = normalized_error(std::abs(hp - ht), std::abs(hp), std::abs(ht));
    const auto mp = physics::total_momentum(spec, p);
    const auto mt = physics::total_momentum(spec, y);
    std::vector<double> diff(mp.size());
    for (std::size_t i = 0; i < mp.size(); ++i) diff[i] = mp[i] - mt[i];
    m.me[k] = normalized_error(norm_of(diff), norm_of(mp), norm_of(mt));
  }
  m.re_gm = series_gm(m.re);
  m.ee_gm = series_gm(m.ee);
  m.me_gm = series_gm(m.me);
  return m;
}

double geometric_mean(const std::vector<double>& xs) {
  if (xs.empty()) throw ShapeError("geometric_mean: no values");
  double acc = 0.0;
  for (double x : xs) acc += std::log(x + kGeoFloor);
  return std::exp(acc / static_cast<double>(xs.size()));
}

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ShapeError("percentile: no values");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile: p must be in [0, 100]");
  std::sort(xs.begin(), xs.end());
  const double pos = p / 100.0 * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

namespace {

Band band_of(const std::vector<MetricSeries>& series, std::vector<double> MetricSeries::*field) {
  const std::size_t len = series.front().t.size();
  Band b;
  b.mean.resize(len);
  b.lo.resize(len);
  b.hi.resize(len);
  std::vector<double> column(series.size());
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t s = 0; s < series.size(); ++s) column[s] = (series[s].*field)[k];
    b.mean[k] = geometric_mean(column);
    b.lo[k] = percentile(column, 2.5);
    b.hi[k] = percentile(column, 97.5);
  }
  return b;
}

}  // namespace

AggregateReport aggregate(const std::vector<MetricSeries>& input) {
  if (input.size() < 2) throw ConfigError("aggregate: need at least 2 series");
  std::vector<MetricSeries> series = input;
  std::stable_sort(series.begin(), series.end(),
                   [](const MetricSeries& a, const MetricSeries& b) { return a.trajectory < b.trajectory; });
  const auto& grid = series.front().t;
  for (const auto& s : series) {
    if (s.t.size() != grid.size() || s.re.size() != grid.size() || s.ee.size() != grid.size() ||
        s.me.size() != grid.size()) {
      throw ConfigError("aggregate: series lengths differ");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (std::abs(s.t[k] - grid[k]) > 1e-9 * std::max(1.0, std::abs(grid[k]))) {
        throw ConfigError("aggregate: time grids differ");
      }
    }
  }
  AggregateReport r;
  r.t = grid;
  r.count = series.size();
  r.re = band_of(series, &MetricSeries::re);
  r.ee = band_of(series, &MetricSeries::ee);
  r.me = band_of(series, &MetricSeries::me);
  std::vector<double> re, ee, me;
  for (const auto& s : series) {
    re.push_back(s.re_gm);
    ee.push_back(s.ee_gm);
    me.push_back(s.me_gm);
    if (s.blew_up) ++r.blow_ups;
  }
  r.re_gm = geometric_mean(re);
  r.ee_gm = geometric_mean(ee);
  r.me_gm = geometric_mean(me);
  return r;
}

namespace {

MetricSeries one_member(const physics::AccelFn& accel, const SystemSpec& spec, std::uint64_t seed,
                        std::size_t i, const RolloutConfig& cfg) {
  const State init = physics::random_initial_state(spec, derive_seed(seed, i));
  const Trajectory truth = physics::simulate(spec, init, cfg.dt, cfg.n_steps(), cfg.record_every);
  const Trajectory pred = rollout(accel, spec, init, cfg);
  return metrics(pred, truth, spec, i);
}

void check_ensemble(std::size_t n_init, const RolloutConfig& cfg) {
  if (n_init < 2) throw ConfigError("evaluate: need at least 2 initial conditions");
  cfg.validate();
}

}  // namespace

EnsembleResult evaluate_ensemble(const models::Model& model, const SystemSpec& spec, std::size_t n_init,
                                 std::uint64_t seed, const RolloutConfig& cfg) {
  check_ensemble(n_init, cfg);
  const auto accel = models::make_accel_fn(model, spec);
  EnsembleResult out;
  out.series.resize(n_init);
  parallel_for(n_init, [&](std::size_t i) { out.series[i] = one_member(accel, spec, seed, i, cfg); });
  out.report = aggregate(out.series);
  return out;
}

EnsembleResult evaluate_ensemble_serial(const models::Model& model, const SystemSpec& spec,
                                        std::size_t n_init, std::uint64_t seed, const RolloutConfig& cfg) {
  check_ensemble(n_init, cfg);
  const auto accel = models::make_accel_fn(model, spec);
  EnsembleResult out;
  for (std::size_t i = 0; i < n_init; ++i) out.series.push_back(one_member(accel, spec, seed, i, cfg));
  out.report = aggregate(out.series);
  return out;
}

std::map<std::size_t, AggregateReport> zero_shot_eval(const models::Model& model, const SystemSpec& trained,
                                                      const std::vector<std::size_t>& target_sizes,
                                                      std::size_t n_init, std::uint64_t seed,
                                                      const RolloutConfig& cfg) {
  if (!model.is_graph()) {
    throw TransductiveError("zero-shot evaluation needs a graph model; NODE is tied to its training size");
  }
  std::map<std::size_t, AggregateReport> out;
  for (std::size_t n : target_sizes) {
    const SystemSpec target = n == trained.n ? trained : trained.resized(n);
    out[n] = evaluate_ensemble(model, target, n_init, seed, cfg).report;
  }
  return out;
}

}  // namespace gnode::evaluation
