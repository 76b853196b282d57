#include "gnode/physics/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gnode/num/error.hpp"
#include "gnode/num/ops.hpp"

namespace gnode::physics {

namespace {

void require_state(const SystemSpec& spec, const State& s) {
  if (s.q.rows() != spec.n || s.q.cols() != spec.dim || !s.q.same_shape(s.qdot)) {
    throw ShapeError("state shape " + s.q.shape_str() + "/" + s.qdot.shape_str() + " for a " +
                     std::to_string(spec.n) + "-particle system");
  }
}

}  // namespace

ConstraintBlock pendulum_constraints(const SystemSpec& spec, const State& state) {
  if (spec.kind != SystemKind::Pendulum) {
    throw ConfigError("pendulum_constraints: system kind is " + to_string(spec.kind));
  }
  require_state(spec, state);
  const std::size_t n = spec.n, d = spec.dim;
  ConstraintBlock c{Matrix(n, 1), Matrix(n, n * d), Matrix(n, n * d)};
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double prev_q = i == 0 ? 0.0 : state.q(i - 1, k);
      const double prev_v = i == 0 ? 0.0 : state.qdot(i - 1, k);
      const double dq = state.q(i, k) - prev_q;
      const double dv = state.qdot(i, k) - prev_v;
      r2 += dq * dq;
      c.a(i, i * d + k) = 2.0 * dq;
      c.adot(i, i * d + k) = 2.0 * dv;
      if (i > 0) {
        c.a(i, (i - 1) * d + k) = -2.0 * dq;
        c.adot(i, (i - 1) * d + k) = -2.0 * dv;
      }
    }
    c.phi(i, 0) = r2 - spec.lengths[i] * spec.lengths[i];
  }
  return c;
}

ConstraintBlock constraints(const SystemSpec& spec, const State& state) {
  if (spec.kind == SystemKind::Pendulum) return pendulum_constraints(spec, state);
  return ConstraintBlock{Matrix(0, 1), Matrix(0, spec.dof()), Matrix(0, spec.dof())};
}

double potential_energy(const SystemSpec& spec, const Matrix& q) {
  double v = 0.0;
  if (spec.kind == SystemKind::Pendulum) {
    for (std::size_t i = 0; i < spec.n; ++i) v += spec.masses[i] * spec.gravity * q(i, 1);
    return v;
  }
  for (auto [i, j] : spring_edges(spec.n)) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < spec.dim; ++k) {
      const double dq = q(i, k) - q(j, k);
      r2 += dq * dq;
    }
    const double ext = std::sqrt(r2) - spec.rest_length;
    v += 0.5 * spec.stiffness * ext * ext;
  }
  return v;
}

Matrix conservative_force(const SystemSpec& spec, const State& state) {
  require_state(spec, state);
  const std::size_t d = spec.dim;
  Matrix f(spec.n, d);
  if (spec.kind == SystemKind::Pendulum) {
    for (std::size_t i = 0; i < spec.n; ++i) f(i, 1) = spec.masses[i] * spec.gravity;
    return f;
  }
  for (auto [i, j] : spring_edges(spec.n)) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double dq = state.q(i, k) - state.q(j, k);
      r2 += dq * dq;
    }
    const double r = std::sqrt(r2);
    if (!(r > 0.0)) {
      throw NumericalError("conservative_force: spring endpoints " + std::to_string(i) + " and " +
                           std::to_string(j) + " coincide");
    }
    const double coef = spec.stiffness * (r - spec.rest_length) / r;
    for (std::size_t k = 0; k < d; ++k) {
      const double g = coef * (state.q(i, k) - state.q(j, k));
      f(i, k) += g;
      f(j, k) -= g;
    }
  }
  return f;
}

ConstrainedAcceleration constrained_acceleration(std::span<const double> masses, const Matrix& n_force,
                                                 const Matrix& pi, const Matrix& upsilon,
                                                 const Matrix& c_qdot, const ConstraintBlock& cons,
                                                 const Matrix& qdot) {
  const std::size_t n = n_force.rows(), d = n_force.cols(), dof = n * d;
  if (masses.size() != n) throw ShapeError("constrained_acceleration: mass count != particle count");
  require_same_shape(n_force, qdot, "constrained_acceleration");
  // F = Pi - C qd - N - Y, divided by the diagonal mass.
  Matrix u(dof, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(masses[i] > 0.0)) throw ConfigError("constrained_acceleration: non-positive mass");
    for (std::size_t k = 0; k < d; ++k) {
      double f = -n_force(i, k);
      if (!pi.empty()) f += pi(i, k);
      if (!c_qdot.empty()) f -= c_qdot(i, k);
      if (!upsilon.empty()) f -= upsilon(i, k);
      u[i * d + k] = f / masses[i];
    }
  }
  const std::size_t kc = cons.count();
  if (kc == 0) return {u.reshaped(n, d), Matrix(0, 1)};
  if (cons.a.cols() != dof || cons.adot.cols() != dof || cons.a.rows() != kc) {
    throw ShapeError("constrained_acceleration: constraint block " + cons.a.shape_str() + " for " +
                     std::to_string(dof) + " coordinates");
  }
  // S = A M^-1 A^T, rhs = A M^-1 F + Adot qd
  Matrix s(kc, kc);
  for (std::size_t r = 0; r < kc; ++r)
    for (std::size_t c = 0; c <= r; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dof; ++j) acc += cons.a(r, j) * cons.a(c, j) / masses[j / d];
      s(r, c) = acc;
      s(c, r) = acc;
    }
  Matrix lambda(kc, 1);
  for (std::size_t r = 0; r < kc; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dof; ++j) acc += cons.a(r, j) * u[j] + cons.adot(r, j) * qdot[j];
    lambda[r] = acc;
  }
  num::cholesky_solve_inplace(num::cholesky(s, "constrained_acceleration"), lambda);
  Matrix qdd = u;
  for (std::size_t j = 0; j < dof; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < kc; ++r) acc += cons.a(r, j) * lambda[r];
    qdd[j] -= acc / masses[j / d];
  }
  return {qdd.reshaped(n, d), lambda};
}

num::Var constrained_acceleration(num::Var masses, num::Var n_force, const ConstraintBlock& cons,
                                  const Matrix& qdot, num::Var* lambda_out) {
  using namespace num;
  Tape& tape = *masses.tape;
  const std::size_t n = n_force.rows(), d = n_force.cols(), dof = n * d;
  if (masses.rows() != n || masses.cols() != 1) {
    throw ShapeError("constrained_acceleration: masses " + masses.value().shape_str() + " for " +
                     std::to_string(n) + " particles");
  }
  require_same_shape(n_force.value(), qdot, "constrained_acceleration");
  const Var inv_m = reciprocal(masses);
  const Var u = mul_col(neg(n_force), inv_m);
  const std::size_t kc = cons.count();
  if (kc == 0) {
    if (lambda_out) *lambda_out = tape.constant(Matrix(0, 1));
    return u;
  }
  if (cons.a.cols() != dof) {
    throw ShapeError("constrained_acceleration: constraint block " + cons.a.shape_str() + " for " +
                     std::to_string(dof) + " coordinates");
  }
  std::vector<std::uint32_t> per_coord(dof);
  for (std::size_t j = 0; j < dof; ++j) per_coord[j] = static_cast<std::uint32_t>(j / d);
  const Var inv_m_flat = gather_rows(inv_m, std::move(per_coord));
  const Var a = tape.constant(cons.a);
  const Var at = tape.constant(cons.a.transposed());
  const Var u_flat = reshape(u, dof, 1);
  const Var s = matmul(a, mul_col(at, inv_m_flat));
  const Var bias = tape.constant(num::matmul(cons.adot, qdot.reshaped(dof, 1)));
  const Var lambda = solve_spd(s, add(matmul(a, u_flat), bias));
  if (lambda_out) *lambda_out = lambda;
  const Var qdd = sub(u_flat, mul_col(matmul(at, lambda), inv_m_flat));
  return reshape(qdd, n, d);
}

Matrix ground_truth_acceleration(const SystemSpec& spec, const State& state) {
  const Matrix f = conservative_force(spec, state);
  const Matrix none;
  return constrained_acceleration(spec.masses, f, none, none, none, constraints(spec, state),
                                  state.qdot)
      .qddot;
}

State velocity_verlet_step(const AccelFn& accel, const State& state, double dt) {
  if (!(dt > 0.0)) throw ConfigError("velocity_verlet_step: dt must be positive");
  const Matrix accel_now = accel(state);
  State next;
  next.t = state.t + dt;
  next.q = state.q;
  Matrix predictor = state.qdot;
  for (std::size_t i = 0; i < next.q.size(); ++i) {
    next.q[i] += state.qdot[i] * dt + 0.5 * accel_now[i] * dt * dt;
    predictor[i] += accel_now[i] * dt;
  }
  const Matrix next_accel = accel(State{next.q, predictor, next.t});
  next.qdot = state.qdot;
  for (std::size_t i = 0; i < next.qdot.size(); ++i)
    next.qdot[i] += 0.5 * (accel_now[i] + next_accel[i]) * dt;
  return next;
}

namespace {

void kahan_add(double& sum, double& carry, double x) {
  const double y = x - carry;
  const double t = sum + y;
  carry = (t - sum) - y;
  sum = t;
}

}  // namespace

VerletStepper::VerletStepper(const State& init, double dt)
    : state_(init),
      carry_q_(init.q.rows(), init.q.cols()),
      carry_qd_(init.qdot.rows(), init.qdot.cols()),
      dt_(dt),
      t0_(init.t) {
  if (!(dt > 0.0)) throw ConfigError("velocity_verlet_step: dt must be positive");
}

void VerletStepper::step(const AccelFn& accel) {
  const double dt = dt_;
  const Matrix a = accel(state_);
  Matrix predictor = state_.qdot;
  for (std::size_t i = 0; i < a.size(); ++i) {
    kahan_add(state_.q[i], carry_q_[i], state_.qdot[i] * dt + 0.5 * a[i] * dt * dt);
    predictor[i] += a[i] * dt;
  }
  ++steps_;
  state_.t = t0_ + static_cast<double>(steps_) * dt;
  const Matrix a_next = accel(State{state_.q, predictor, state_.t});
  for (std::size_t i = 0; i < a.size(); ++i) kahan_add(state_.qdot[i], carry_qd_[i], 0.5 * (a[i] + a_next[i]) * dt);
}

Trajectory integrate(const SystemSpec& spec, const AccelFn& accel, const State& init, double dt,
                     std::size_t n_steps, std::size_t record_every) {
  if (record_every == 0 || n_steps % record_every != 0) {
    throw ConfigError("simulate: n_steps (" + std::to_string(n_steps) +
                      ") must be a multiple of record_every (" + std::to_string(record_every) + ")");
  }
  if (!(dt > 0.0)) throw ConfigError("simulate: dt must be positive");
  require_state(spec, init);
  Trajectory traj{spec, dt * static_cast<double>(record_every), {}, false, std::nullopt};
  traj.states.reserve(n_steps / record_every + 1);
  traj.states.push_back(init);
  VerletStepper stepper(init, dt);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    stepper.step(accel);
    if (step % record_every == 0) traj.states.push_back(stepper.state());
  }
  return traj;
}

Trajectory simulate(const SystemSpec& spec, const State& init, double dt, std::size_t n_steps,
                    std::size_t record_every) {
  spec.validate();
  const AccelFn truth = [&spec](const State& s) { return ground_truth_acceleration(spec, s); };
  return integrate(spec, truth, init, dt, n_steps, record_every);
}

double kinetic_energy(const SystemSpec& spec, const Matrix& qdot) {
  double t = 0.0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    double v2 = 0.0;
    for (std::size_t k = 0; k < spec.dim; ++k) v2 += qdot(i, k) * qdot(i, k);
    t += 0.5 * spec.masses[i] * v2;
  }
  return t;
}

double hamiltonian(const SystemSpec& spec, const State& state) {
  return kinetic_energy(spec, state.qdot) + potential_energy(spec, state.q);
}

std::vector<double> total_momentum(const SystemSpec& spec, const State& state) {
  std::vector<double> p(spec.dim, 0.0);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t k = 0; k < spec.dim; ++k) p[k] += spec.masses[i] * state.qdot(i, k);
  return p;
}

State random_initial_state(const SystemSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  State s{Matrix(spec.n, spec.dim), Matrix(spec.n, spec.dim), 0.0};
  if (spec.kind == SystemKind::Pendulum) {
    std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
    double x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
      const double th = angle(rng);
      x += spec.lengths[i] * std::sin(th);
      y -= spec.lengths[i] * std::cos(th);
      s.q(i, 0) = x;
      s.q(i, 1) = y;
    }
    return s;
  }
  const double r0 = spec.rest_length;
  const double n = static_cast<double>(spec.n);
  const double radius = spec.n >= 2 ? r0 / (2.0 * std::sin(std::numbers::pi / n)) : 0.0;
  std::uniform_real_distribution<double> jitter(-0.1 * r0, 0.1 * r0);
  std::uniform_real_distribution<double> vel(-spec.init_velocity, spec.init_velocity);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
    s.q(i, 0) = radius * std::cos(th) + jitter(rng);
    s.q(i, 1) = radius * std::sin(th) + jitter(rng);
  }
  if (spec.init_velocity > 0.0)
    for (auto& v : s.qdot.vec()) v = vel(rng);
  return s;
}

}  // namespace gnode::physics
