#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gnode/num/tape.hpp"
#include "gnode/physics/system.hpp"

namespace gnode::physics {

// Holonomic constraints phi(q) = 0 with Jacobian A = d(phi)/dq and its time
// derivative, both k x (n*d) over the row-major flattened coordinates.
struct ConstraintBlock {
  Matrix phi;   // k x 1
  Matrix a;     // k x n*d
  Matrix adot;  // k x n*d

  std::size_t count() const { return phi.rows(); }
};

// phi_i = |q_i - q_{i-1}|^2 - l_i^2 with q_{-1} the pivot at the origin.
ConstraintBlock pendulum_constraints(const SystemSpec& spec, const State& state);
// Pendulum constraints, or an empty (k = 0) block for springs.
ConstraintBlock constraints(const SystemSpec& spec, const State& state);

double potential_energy(const SystemSpec& spec, const Matrix& q);
// N = grad_q V. Gravity gives N_i = (0, m_i g); springs give the gradient of
// sum 1/2 k (r - r0)^2. Coincident spring endpoints raise NumericalError.
Matrix conservative_force(const SystemSpec& spec, const State& state);

struct ConstrainedAcceleration {
  Matrix qddot;   // n x d
  Matrix lambda;  // k x 1
};

// M qdd + C qd + N + Y + A^T lambda = Pi, solved for lambda through the
// differentiated constraint A qdd + Adot qd = 0. `masses` has one entry per
// particle; Pi, Y, Cqd may be empty (treated as zero).
ConstrainedAcceleration constrained_acceleration(std::span<const double> masses, const Matrix& n_force,
                                                 const Matrix& pi, const Matrix& upsilon,
                                                 const Matrix& c_qdot, const ConstraintBlock& cons,
                                                 const Matrix& qdot);

// Differentiable version of the same solve for learned models: `masses` is
// n x 1, `n_force` n x d; returns qdd as n x d. Pi = Y = Cqd = 0.
num::Var constrained_acceleration(num::Var masses, num::Var n_force, const ConstraintBlock& cons,
                                  const Matrix& qdot, num::Var* lambda_out = nullptr);

Matrix ground_truth_acceleration(const SystemSpec& spec, const State& state);

using AccelFn = std::function<Matrix(const State&)>;

// Velocity Verlet. The new acceleration is evaluated at (q', qd + a dt).
// Two evaluations per step: the acceleration at `state` is not carried over
// from the previous step's predictor, since it depends on qd.
State velocity_verlet_step(const AccelFn& accel, const State& state, double dt);

// The same step repeated, with Kahan-compensated accumulation of the position
// and velocity increments. Over 1e4-1e6 steps plain accumulation lets round-off
// random-walk (e.g. total momentum of a fast system drifts by ~eps |qd| sqrt(steps)).
class VerletStepper {
 public:
  VerletStepper(const State& init, double dt);
  void step(const AccelFn& accel);
  const State& state() const { return state_; }
  std::size_t steps() const { return steps_; }

 private:
  State state_;
  Matrix carry_q_, carry_qd_;
  double dt_;
  double t0_;
  std::size_t steps_ = 0;
};

// n_steps must be a multiple of record_every; the initial state is recorded.
Trajectory simulate(const SystemSpec& spec, const State& init, double dt, std::size_t n_steps,
                    std::size_t record_every);
// Integrates an arbitrary acceleration field on the same grid.
Trajectory integrate(const SystemSpec& spec, const AccelFn& accel, const State& init, double dt,
                     std::size_t n_steps, std::size_t record_every);

double kinetic_energy(const SystemSpec& spec, const Matrix& qdot);
double hamiltonian(const SystemSpec& spec, const State& state);
std::vector<double> total_momentum(const SystemSpec& spec, const State& state);

// Pendulum: joint angles U[-pi/2, pi/2] from -y, at rest, exactly on the
// constraint manifold. Spring: regular n-gon with edge r0, coordinates
// jittered by U[-0.1 r0, 0.1 r0], velocities U[-v0, v0] (v0 = init_velocity).
State random_initial_state(const SystemSpec& spec, std::uint64_t seed);

}  // namespace gnode::physics
