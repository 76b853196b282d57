#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "gnode/num/error.hpp"
#include "gnode/physics/dynamics.hpp"

using namespace gnode;
using namespace gnode::physics;
using num::Matrix;

namespace {

State at(Matrix q, Matrix qd) { return State{std::move(q), std::move(qd), 0.0}; }

double max_abs_vec(const Matrix& m) {
  double x = 0.0;
  for (double v : m.vec()) x = std::max(x, std::abs(v));
  return x;
}

Matrix mat_vec(const Matrix& a, const Matrix& v) { return matmul(a, v.reshaped(v.size(), 1)); }

}  // namespace

TEST_CASE("spring cycle edges") {
  CHECK(spring_edges(1).empty());
  CHECK(spring_edges(2).size() == 1);
  const auto e5 = spring_edges(5);
  REQUIRE(e5.size() == 5);
  CHECK(e5.back() == std::pair<std::uint32_t, std::uint32_t>{0, 4});
}

TEST_CASE("spec validation") {
  auto s = SystemSpec::pendulum(3);
  CHECK_NOTHROW(s.validate());
  s.masses[1] = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  auto t = SystemSpec::spring(4);
  t.types[0] = 1;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t.type_vocab = 2;
  CHECK_NOTHROW(t.validate());
  auto u = SystemSpec::spring(3);
  u.stiffness = -1.0;
  CHECK_THROWS_AS(u.validate(), ConfigError);
  CHECK(SystemSpec::spring(5).resized(20).n == 20);
}

TEST_CASE("pendulum constraints") {
  const double l = 1.5;
  auto spec = SystemSpec::pendulum(1, 1.0, l);
  const auto c = pendulum_constraints(spec, at(Matrix(1, 2, {0.0, -l}), Matrix(1, 2)));
  CHECK(c.count() == 1);
  CHECK(c.phi(0, 0) == 0.0);
  CHECK(c.a == Matrix(1, 2, {0.0, -2.0 * l}));
  CHECK(c.adot == Matrix(1, 2, {0.0, 0.0}));

  // On-manifold 3-pendulum with tangential velocities.
  auto s3 = SystemSpec::pendulum(3);
  State st = random_initial_state(s3, 9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix prev_v(1, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const double dx = st.q(i, 0) - (i ? st.q(i - 1, 0) : 0.0);
    const double dy = st.q(i, 1) - (i ? st.q(i - 1, 1) : 0.0);
    const double w = u(rng);
    // velocity relative to the previous bob is perpendicular to the bar
    st.qdot(i, 0) = prev_v(0, 0) - w * dy;
    st.qdot(i, 1) = prev_v(0, 1) + w * dx;
    prev_v = Matrix(1, 2, {st.qdot(i, 0), st.qdot(i, 1)});
  }
  const auto c3 = pendulum_constraints(s3, st);
  CHECK(max_abs_vec(c3.phi) < 1e-12);
  CHECK(max_abs_vec(mat_vec(c3.a, st.qdot)) < 1e-12);

  auto doubled = s3;
  for (auto& x : doubled.lengths) x *= 2.0;
  const auto cd = pendulum_constraints(doubled, st);
  CHECK(cd.a == c3.a);
  for (std::size_t i = 0; i < 3; ++i) CHECK(cd.phi(i, 0) - c3.phi(i, 0) == doctest::Approx(-3.0));

  CHECK_THROWS_AS(pendulum_constraints(SystemSpec::spring(3), st), ConfigError);
  CHECK(constraints(SystemSpec::spring(3), st).count() == 0);
}

TEST_CASE("conservative forces") {
  const double r0 = 1.0, k = 2.0, delta = 0.3;
  auto sp = SystemSpec::spring(2, 1.0, r0, k);
  CHECK(max_abs_vec(conservative_force(sp, at(Matrix(2, 2, {0, 0, r0, 0}), Matrix(2, 2)))) == 0.0);
  const Matrix n = conservative_force(sp, at(Matrix(2, 2, {0, 0, r0 + delta, 0}), Matrix(2, 2)));
  // N = grad V; the resulting acceleration -N/m pulls the pair back together.
  CHECK(n(1, 0) == doctest::Approx(k * delta));
  CHECK(n(0, 0) == doctest::Approx(-k * delta));
  CHECK(n(0, 1) == 0.0);
  CHECK_THROWS_AS(conservative_force(sp, at(Matrix(2, 2, {1, 1, 1, 1}), Matrix(2, 2))), NumericalError);

  auto pd = SystemSpec::pendulum(2, 3.0, 1.0, 9.81);
  const Matrix g = conservative_force(pd, random_initial_state(pd, 1));
  CHECK(g == Matrix(2, 2, {0.0, 3.0 * 9.81, 0.0, 3.0 * 9.81}));
}

TEST_CASE("conservative force is the gradient of the potential") {
  for (auto spec : {SystemSpec::pendulum(3, 1.3), SystemSpec::spring(5, 0.7, 1.0, 2.5)}) {
    const State s = random_initial_state(spec, 17);
    const auto numeric = oracle::gradient(
        [&](const std::vector<double>& q) { return potential_energy(spec, Matrix(spec.n, 2, q)); }, s.q.vec());
    CHECK(oracle::rel_err(conservative_force(spec, s).vec(), numeric) < 1e-6);
    // Same through the Hamiltonian.
    const auto via_h = oracle::gradient(
        [&](const std::vector<double>& q) { return hamiltonian(spec, State{Matrix(spec.n, 2, q), s.qdot, 0}); },
        s.q.vec());
    CHECK(oracle::rel_err(conservative_force(spec, s).vec(), via_h) < 1e-6);
  }
}

TEST_CASE("constrained acceleration: hand cases") {
  const std::vector<double> m1{1.0}, m2{2.0, 3.0};
  const ConstraintBlock none{Matrix(0, 1), Matrix(0, 4), Matrix(0, 4)};
  const auto free = constrained_acceleration(m2, Matrix(2, 2), {}, {}, {}, none, Matrix(2, 2));
  CHECK(free.qddot == Matrix(2, 2, 0.0));

  const Matrix n(2, 2, {1.0, -2.0, 0.5, 4.0});
  const auto k0 = constrained_acceleration(m2, n, {}, {}, {}, none, Matrix(2, 2));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(k0.qddot(i, c) + n(i, c) / m2[i]) < 1e-14);

  const double l = 1.0, g = 9.81;
  auto spec = SystemSpec::pendulum(1, 1.0, l, g);
  const State hang = at(Matrix(1, 2, {0.0, -l}), Matrix(1, 2));
  const Matrix a_hang = ground_truth_acceleration(spec, hang);
  CHECK(max_abs_vec(a_hang) < 1e-14);

  const State side = at(Matrix(1, 2, {l, 0.0}), Matrix(1, 2));
  const auto r = constrained_acceleration(m1, conservative_force(spec, side), {}, {}, {},
                                          pendulum_constraints(spec, side), side.qdot);
  CHECK(r.qddot(0, 0) == doctest::Approx(0.0));
  CHECK(r.qddot(0, 1) == doctest::Approx(-g));
  CHECK(std::abs(r.lambda(0, 0)) < 1e-14);
}

TEST_CASE("constrained acceleration agrees with a saddle-point solve") {
  for (std::size_t n : {1u, 2u, 3u, 5u}) {
    auto spec = SystemSpec::pendulum(n);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      State s = random_initial_state(spec, seed);
      std::mt19937_64 rng(seed + 100);
      // any velocity will do for the algebra; make it tangential anyway
      s.qdot = oracle::random_matrix(n, 2, rng);
      const auto cons = pendulum_constraints(spec, s);
      const Matrix nf = conservative_force(spec, s);
      const auto got = constrained_acceleration(spec.masses, nf, {}, {}, {}, cons, s.qdot);
      const auto want = oracle::kkt_acceleration(spec.masses, 2, nf, cons.a, cons.adot, s.qdot);
      CHECK(oracle::rel_err(got.qddot.vec(), want) < 1e-10);
      const Matrix resid = mat_vec(cons.a, got.qddot) + mat_vec(cons.adot, s.qdot);
      CHECK(max_abs_vec(resid) < 1e-10);
    }
  }
}

TEST_CASE("velocity verlet") {
  const AccelFn zero = [](const State& s) { return Matrix(s.q.rows(), s.q.cols()); };
  const State s0 = at(Matrix(1, 2, {1.0, 2.0}), Matrix(1, 2, {0.5, -1.0}));
  const State s1 = velocity_verlet_step(zero, s0, 0.1);
  CHECK(s1.q(0, 0) == doctest::Approx(1.05));
  CHECK(s1.q(0, 1) == doctest::Approx(1.9));
  CHECK(s1.qdot == s0.qdot);

  const Matrix a(1, 2, {0.3, -9.0});
  const AccelFn constant = [&](const State&) { return a; };
  const double dt = 0.25;
  const State s2 = velocity_verlet_step(constant, s0, dt);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(s2.q(0, c) == doctest::Approx(s0.q(0, c) + s0.qdot(0, c) * dt + 0.5 * a(0, c) * dt * dt).epsilon(1e-14));
    CHECK(s2.qdot(0, c) == doctest::Approx(s0.qdot(0, c) + a(0, c) * dt).epsilon(1e-14));
  }
}

TEST_CASE("compensated stepper tracks the plain step") {
  const auto spec = SystemSpec::spring(5);
  const AccelFn f = [&](const State& s) { return ground_truth_acceleration(spec, s); };
  State plain = random_initial_state(spec, 3);
  VerletStepper st(plain, 1e-3);
  for (int k = 0; k < 2000; ++k) {
    plain = velocity_verlet_step(f, plain, 1e-3);
    st.step(f);
  }
  CHECK(st.steps() == 2000);
  CHECK(st.state().t == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(oracle::rel_err(st.state().q.vec(), plain.q.vec()) < 1e-10);
  CHECK(oracle::rel_err(st.state().qdot.vec(), plain.qdot.vec()) < 1e-8);

  // Tiny increments on a large offset: plain accumulation loses them.
  const AccelFn push = [](const State& s) { return Matrix(s.q.rows(), s.q.cols(), 1e-6); };
  VerletStepper big(at(Matrix(1, 1, {1e8}), Matrix(1, 1, {1e8})), 1.0);
  for (int k = 0; k < 1000; ++k) big.step(push);
  CHECK(big.state().qdot.item() - 1e8 == doctest::Approx(1e-3).epsilon(1e-4));
  CHECK_THROWS_AS(VerletStepper(plain, 0.0), ConfigError);
}

TEST_CASE("harmonic oscillator has no secular energy drift") {
  // Instantaneous Verlet energy oscillates by ~(w dt)^2/4; the drift of the
  // period-averaged energy is what symplecticity bounds.
  const double w = 1.0, dt = 0.01;
  const AccelFn spring = [&](const State& s) {
    Matrix a = s.q;
    a *= -w * w;
    return a;
  };
  State s = at(Matrix(1, 2, {1.0, 0.0}), Matrix(1, 2, {0.0, 0.5}));
  const auto energy = [&](const State& x) {
    return 0.5 * (x.qdot(0, 0) * x.qdot(0, 0) + x.qdot(0, 1) * x.qdot(0, 1)) +
           0.5 * w * w * (x.q(0, 0) * x.q(0, 0) + x.q(0, 1) * x.q(0, 1));
  };
  const std::size_t period = static_cast<std::size_t>(std::llround(2 * std::numbers::pi / (w * dt)));
  const std::size_t steps = 100000;
  double first = 0.0, last = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    if (k < period) first += energy(s);
    if (k >= steps - period) last += energy(s);
    s = velocity_verlet_step(spring, s, dt);
  }
  CHECK(std::abs(last - first) / first < 1e-6);
}

TEST_CASE("simulate grid and diagnostics") {
  auto spec = SystemSpec::pendulum(3);
  const State init = random_initial_state(spec, 4);
  const auto only = simulate(spec, init, 1e-5, 0, 1000);
  CHECK(only.states.size() == 1);
  CHECK_THROWS_AS(simulate(spec, init, 1e-5, 1500, 1000), ConfigError);
  const auto traj = simulate(spec, init, 1e-5, 10000, 1000);
  CHECK(traj.states.size() == 11);
  CHECK(traj.states.back().t == doctest::Approx(0.1));
  CHECK(traj.dt_record == doctest::Approx(1e-2));

  auto sp = SystemSpec::spring(1);
  const State rest = at(Matrix(1, 2), Matrix(1, 2, {3.0, 4.0}));
  CHECK(hamiltonian(sp, rest) == doctest::Approx(12.5));
  auto ring = SystemSpec::spring(2, 1.0, 1.0);
  CHECK(hamiltonian(ring, at(Matrix(2, 2, {0, 0, 1, 0}), Matrix(2, 2))) == 0.0);
  const auto p0 = total_momentum(ring, at(Matrix(2, 2, {0, 0, 1, 0}), Matrix(2, 2, {1, 2, -1, -2})));
  CHECK(p0 == std::vector<double>{0.0, 0.0});
}

TEST_CASE("short ground-truth rollouts keep invariants") {
  auto pend = SystemSpec::pendulum(3);
  const auto tp = simulate(pend, random_initial_state(pend, 11), 1e-5, 20000, 1000);
  const double h0 = hamiltonian(pend, tp.states.front());
  for (const auto& s : tp.states) {
    const auto c = pendulum_constraints(pend, s);
    CHECK(max_abs_vec(mat_vec(c.a, s.qdot)) < 1e-8);
    CHECK(std::abs(hamiltonian(pend, s) - h0) / std::abs(h0) < 1e-3);
  }
  auto ring = SystemSpec::spring(5);
  const auto ts = simulate(ring, random_initial_state(ring, 12), 1e-3, 2000, 100);
  const auto m0 = total_momentum(ring, ts.states.front());
  const double scale = std::hypot(m0[0], m0[1]);
  for (const auto& s : ts.states) {
    const auto m = total_momentum(ring, s);
    CHECK(std::hypot(m[0] - m0[0], m[1] - m0[1]) / scale < 1e-10);
  }
}

TEST_CASE("random initial states") {
  auto pend = SystemSpec::pendulum(4, 1.0, 0.8);
  const State a = random_initial_state(pend, 5), b = random_initial_state(pend, 5);
  CHECK(a.q == b.q);
  CHECK(max_abs_vec(pendulum_constraints(pend, a).phi) < 1e-12);
  CHECK(max_abs_vec(a.qdot) == 0.0);
  CHECK_FALSE(random_initial_state(pend, 6).q == a.q);

  // Joint angles from -y are uniform on [-pi/2, pi/2].
  auto one = SystemSpec::pendulum(3);
  std::vector<double> angles;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const State s = random_initial_state(one, seed);
    for (std::size_t i = 0; i < 3; ++i) {
      const double dx = s.q(i, 0) - (i ? s.q(i - 1, 0) : 0.0);
      const double dy = s.q(i, 1) - (i ? s.q(i - 1, 1) : 0.0);
      angles.push_back(std::atan2(dx, -dy));
    }
  }
  CHECK(oracle::ks_uniform_pvalue(angles, -std::numbers::pi / 2, std::numbers::pi / 2) > 0.01);

  auto ring = SystemSpec::spring(6, 1.0, 2.0, 1.0, 0.1);
  const State r = random_initial_state(ring, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t j = (i + 1) % 6;
    const double d = std::hypot(r.q(i, 0) - r.q(j, 0), r.q(i, 1) - r.q(j, 1));
    CHECK(std::abs(d - 2.0) < 4 * 0.1 * 2.0);  // jitter is at most 0.1 r0 per coordinate
  }
  CHECK(max_abs_vec(r.qdot) <= 0.1);
}
