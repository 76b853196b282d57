#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "gnode/models/model.hpp"
#include "gnode/num/error.hpp"
#include "gnode/num/ops.hpp"

using namespace gnode;
using namespace gnode::models;
using num::Matrix;
using physics::ConstraintBlock;
using physics::State;
using physics::SystemSpec;

namespace {

const Variant kGraphVariants[] = {Variant::Gnode, Variant::Cgnode, Variant::Cdgnode, Variant::Mcgnode};

ModelConfig cfg(Variant v, std::size_t n = 0, bool external = true) {
  ModelConfig c;
  c.variant = v;
  c.system_size = n;
  c.external_field = external;
  return c;
}

ConstraintBlock cons_for(const Model& m, const SystemSpec& spec, const State& s) {
  return m.uses_constraints() ? physics::constraints(spec, s)
                              : ConstraintBlock{Matrix(0, 1), Matrix(0, spec.dof()), Matrix(0, spec.dof())};
}

Matrix predict(const Model& m, const SystemSpec& spec, const State& s) {
  return m.predict(build_topology(spec), s, cons_for(m, spec, s));
}

State with_velocity(const SystemSpec& spec, std::uint64_t seed) {
  State s = physics::random_initial_state(spec, seed);
  std::mt19937_64 rng(seed * 7 + 1);
  s.qdot = oracle::random_matrix(spec.n, 2, rng, 0.5);
  return s;
}

Model zeroed(Model m) {
  for (std::size_t i = 0; i < m.params().size(); ++i) m.params()[i].fill(0.0);
  return m;
}

std::size_t mlp_count(std::size_t in, std::size_t h, std::size_t out) {
  return in * h + h + h * h + h + h * out + out;
}

}  // namespace

TEST_CASE("topology") {
  const auto p3 = build_topology(SystemSpec::pendulum(3));
  CHECK(p3.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  const auto s5 = build_topology(SystemSpec::spring(5));
  CHECK(s5.edges() == std::vector<Edge>{{0, 1}, {0, 4}, {1, 2}, {2, 3}, {3, 4}});
  const auto p1 = build_topology(SystemSpec::pendulum(1));
  CHECK(p1.node_count() == 1);
  CHECK(p1.edge_count() == 0);
  CHECK(GraphTopology(3, {0, 0, 0}, {{2, 1}, {1, 0}}) == GraphTopology(3, {0, 0, 0}, {{0, 1}, {1, 2}}));
  CHECK_THROWS_AS(GraphTopology(3, {0, 0, 0}, {{1, 1}}), ShapeError);
  CHECK_THROWS_AS(GraphTopology(3, {0, 0, 0}, {{0, 1}, {1, 0}}), ShapeError);
  CHECK_THROWS_AS(GraphTopology(3, {0, 0, 0}, {{0, 3}}), ShapeError);
}

TEST_CASE("parameter counts follow the layout") {
  const std::size_t d = 2, e = 5, h = 5, v = 1;
  const std::size_t embed_edge = mlp_count(d, h, e), mp = 2 * (2 * e * e);
  CHECK(Model(cfg(Variant::Gnode), 0).params().scalar_count() ==
        mlp_count(v + 2 * d, h, e) + embed_edge + mp + mlp_count(e, h, d));
  CHECK(Model(cfg(Variant::Cgnode), 0).params().scalar_count() ==
        mlp_count(v + 2 * d, h, e) + embed_edge + mp + mlp_count(e, h, d) + v);
  CHECK(Model(cfg(Variant::Cdgnode), 0).params().scalar_count() ==
        mlp_count(v, h, e) + embed_edge + mp + mlp_count(2 * d, h, e) + mlp_count(2 * e, h, d) + v);
  CHECK(Model(cfg(Variant::Mcgnode, 0, false), 0).params().scalar_count() ==
        mlp_count(v, h, e) + embed_edge + mp + mlp_count(e, h, d) + v);
  CHECK(Model(cfg(Variant::Mcgnode, 0, true), 0).params().scalar_count() ==
        mlp_count(v, h, e) + embed_edge + mp + mlp_count(e, h, d) + mlp_count(2 * d, h, d) + v);
  CHECK(Model(cfg(Variant::Node, 5), 0).params().scalar_count() == mlp_count(20, 16, 10));
}

TEST_CASE("adopting parameters checks names and shapes") {
  const Model a(cfg(Variant::Cgnode), 1);
  CHECK_NOTHROW(Model(cfg(Variant::Cgnode), a.params()));
  CHECK_THROWS_AS(Model(cfg(Variant::Gnode), a.params()), ConfigError);
  num::ParamSet bad = a.params();
  bad[0] = Matrix(1, 1);
  CHECK_THROWS_AS(Model(cfg(Variant::Cgnode), bad), ConfigError);
}

TEST_CASE("zero parameters") {
  const auto spec = SystemSpec::pendulum(3);
  const State s = with_velocity(spec, 2);
  CHECK(predict(zeroed(Model(cfg(Variant::Gnode), 3)), spec, s) == Matrix(3, 2, 0.0));
  CHECK(predict(zeroed(Model(cfg(Variant::Node, 3), 3)), spec, s) == Matrix(3, 2, 0.0));

  const Model z = zeroed(Model(cfg(Variant::Gnode), 3));
  num::Tape t;
  const auto bound = z.params().bind(t, false);
  const auto h = z.encode(bound, build_topology(spec), s);
  CHECK(h.nodes.value() == Matrix(3, 5, 1.0));
  CHECK(h.edges.value() == Matrix(4, 5, 1.0));
}

TEST_CASE("encoding: features and translation") {
  const auto spec = SystemSpec::spring(4);
  const State s = with_velocity(spec, 3);
  State moved = s;
  for (std::size_t i = 0; i < 4; ++i) {
    moved.q(i, 0) += 2.5;
    moved.q(i, 1) -= 1.0;
  }
  const auto topo = build_topology(spec);
  auto embed = [&](const Model& m, const State& st) {
    num::Tape t;
    const auto b = m.params().bind(t, false);
    const auto h = m.encode(b, topo, st);
    return std::make_pair(h.nodes.value(), h.edges.value());
  };
  const Model g(cfg(Variant::Gnode), 4);
  const auto [n0, e0] = embed(g, s);
  const auto [n1, e1] = embed(g, moved);
  CHECK_FALSE(n0 == n1);
  CHECK(oracle::rel_err(e0.vec(), e1.vec()) < 1e-12);

  // Local-only variants see no absolute position: z is translation invariant.
  const Model cd(cfg(Variant::Cdgnode), 4);
  num::Tape t0, t1;
  const auto b0 = cd.params().bind(t0, false), b1 = cd.params().bind(t1, false);
  const auto z0 = cd.message_pass(b0, topo, cd.encode(b0, topo, s));
  const auto z1 = cd.message_pass(b1, topo, cd.encode(b1, topo, moved));
  CHECK(oracle::rel_err(z0.nodes.value().vec(), z1.nodes.value().vec()) < 1e-12);

  // Identical features give identical node embeddings.
  State same = s;
  same.q(1, 0) = same.q(0, 0);
  same.q(1, 1) = same.q(0, 1);
  same.qdot(1, 0) = same.qdot(0, 0);
  same.qdot(1, 1) = same.qdot(0, 1);
  const auto [ns, es] = embed(g, same);
  for (std::size_t c = 0; c < 5; ++c) CHECK(ns(0, c) == ns(1, c));

  auto typed = spec;
  typed.types = {0, 1, 0, 0};
  CHECK_THROWS_AS(predict(g, typed, s), ConfigError);
}

TEST_CASE("message passing on an edgeless graph is the residual") {
  const auto spec = SystemSpec::pendulum(1);
  const State s = with_velocity(spec, 1);
  const Model g(cfg(Variant::Gnode), 5);
  const auto topo = build_topology(spec);
  num::Tape t;
  const auto b = g.params().bind(t, false);
  const auto h0 = g.encode(b, topo, s);
  const auto z = g.message_pass(b, topo, h0);
  for (std::size_t c = 0; c < 5; ++c) CHECK(z.nodes.value()(0, c) == oracle::squareplus(h0.nodes.value()(0, c)));
}

TEST_CASE("single edge message pass by hand") {
  // Two nodes, one edge, scalar embeddings: check one layer against the
  // update equations written out longhand.
  ModelConfig c = cfg(Variant::Gnode);
  c.embed_dim = 1;
  Model m(c, 8);
  const auto spec = SystemSpec::spring(2);
  const State s = with_velocity(spec, 4);
  const auto topo = build_topology(spec);
  num::Tape t;
  const auto b = m.params().bind(t, false);
  const auto h = m.encode(b, topo, s);
  const auto z = m.message_pass(b, topo, h);
  const Matrix& wv = m.params()[*m.params().find("mp0.W_V")];
  const Matrix& we = m.params()[*m.params().find("mp0.W_E")];
  const double h0 = h.nodes.value()(0, 0), h1 = h.nodes.value()(1, 0);
  const double e01 = h.edges.value()(0, 0), e10 = h.edges.value()(1, 0);  // receiver 0, receiver 1
  const double z0 = oracle::squareplus(h0 + wv(0, 0) * h1 + wv(1, 0) * e01);
  const double z1 = oracle::squareplus(h1 + wv(0, 0) * h0 + wv(1, 0) * e10);
  const double y01 = oracle::squareplus(e01 + we(0, 0) * h0 + we(1, 0) * h1);
  CHECK(z.nodes.value()(0, 0) == doctest::Approx(z0).epsilon(1e-14));
  CHECK(z.nodes.value()(1, 0) == doctest::Approx(z1).epsilon(1e-14));
  CHECK(z.edges.value()(0, 0) == doctest::Approx(y01).epsilon(1e-14));
}

TEST_CASE("graph variants are permutation equivariant") {
  const auto spec = SystemSpec::spring(6);
  const State s = with_velocity(spec, 6);
  std::vector<std::uint32_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);  // new label of old particle i is perm[i]
  State ps = s;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      ps.q(perm[i], c) = s.q(i, c);
      ps.qdot(perm[i], c) = s.qdot(i, c);
    }
  const GraphTopology topo = build_topology(spec);
  std::vector<Edge> pe;
  for (auto [a, b] : topo.edges()) pe.emplace_back(perm[a], perm[b]);
  const GraphTopology ptopo(6, spec.types, pe);
  const ConstraintBlock none{Matrix(0, 1), Matrix(0, 12), Matrix(0, 12)};
  for (Variant v : kGraphVariants) {
    const Model m(cfg(v), 11);
    const Matrix a = m.predict(topo, s, none), pa = m.predict(ptopo, ps, none);
    Matrix back(6, 2);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t c = 0; c < 2; ++c) back(i, c) = pa(perm[i], c);
    CAPTURE(to_string(v));
    CHECK(oracle::rel_err(back.vec(), a.vec()) < 1e-12);
  }
}

TEST_CASE("outputs are deterministic") {
  const auto spec = SystemSpec::pendulum(3);
  const State s = with_velocity(spec, 2);
  for (Variant v : kGraphVariants) {
    const Model m(cfg(v), 12);
    CHECK(predict(m, spec, s) == predict(m, spec, s));
  }
  CHECK(Model(cfg(Variant::Gnode), 5).params() == Model(cfg(Variant::Gnode), 5).params());
}

TEST_CASE("constrained variants satisfy the differentiated constraint") {
  for (std::size_t n : {1u, 3u, 5u}) {
    const auto spec = SystemSpec::pendulum(n);
    for (Variant v : {Variant::Cgnode, Variant::Cdgnode, Variant::Mcgnode}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Model m(cfg(v), 20 + seed);
        const State s = with_velocity(spec, seed);
        const auto c = physics::constraints(spec, s);
        const Matrix a = predict(m, spec, s);
        const Matrix r = matmul(c.a, a.reshaped(2 * n, 1)) + matmul(c.adot, s.qdot.reshaped(2 * n, 1));
        CHECK(num::max_abs(r.span()) < 1e-10);
      }
    }
  }
}

TEST_CASE("constrained variant with no constraints is -N / m") {
  const auto spec = SystemSpec::spring(4);
  const State s = with_velocity(spec, 1);
  Model m(cfg(Variant::Cgnode), 2);
  m.params()[*m.params().find("log_mass")](0, 0) = std::log(2.0);
  const auto topo = build_topology(spec);
  num::Tape t;
  const auto b = m.params().bind(t, false);
  const Matrix n_hat = m.forces(b, topo, s).value();
  const Matrix a = predict(m, spec, s);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] + n_hat[i] / 2.0) < 1e-14);
}

TEST_CASE("MCGNODE internal forces cancel") {
  const auto spec = SystemSpec::spring(5);
  const auto topo = build_topology(spec);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Model m(cfg(Variant::Mcgnode, 0, false), seed);
    const State s = with_velocity(spec, seed);
    num::Tape t;
    const auto b = m.params().bind(t, false);
    const Matrix n_hat = m.forces(b, topo, s).value();
    double mag = 0.0;
    for (double x : n_hat.vec()) mag += std::abs(x);
    mag /= static_cast<double>(n_hat.size());
    for (std::size_t c = 0; c < 2; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < 5; ++i) total += n_hat(i, c);
      CHECK(std::abs(total) < 1e-12 * mag);
    }
  }
}

TEST_CASE("NODE is transductive") {
  const Model m(cfg(Variant::Node, 5), 1);
  const auto s4 = SystemSpec::pendulum(4);
  CHECK_THROWS_AS(predict(m, s4, physics::random_initial_state(s4, 1)), TransductiveError);
  CHECK_THROWS_AS(make_accel_fn(m, s4), TransductiveError);
  CHECK_NOTHROW(predict(m, SystemSpec::pendulum(5), physics::random_initial_state(SystemSpec::pendulum(5), 1)));
}

TEST_CASE("gradients through every variant match finite differences") {
  const auto spec = SystemSpec::pendulum(2);
  const State s = with_velocity(spec, 9);
  const Matrix target(2, 2, {0.1, -0.3, 0.2, 0.05});
  for (Variant v : {Variant::Node, Variant::Gnode, Variant::Cgnode, Variant::Cdgnode, Variant::Mcgnode}) {
    const Model base(cfg(v, 2), 30);
    const auto topo = build_topology(spec);
    const auto cons = cons_for(base, spec, s);
    auto loss_at = [&](const num::ParamSet& p) {
      const Model m(cfg(v, 2), p);
      const Matrix a = m.predict(topo, s, cons);
      double l = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) l += (a[i] - target[i]) * (a[i] - target[i]);
      return l;
    };
    num::Tape t;
    const auto b = base.params().bind(t, true);
    const auto err = num::sub(base.acceleration(b, topo, s, cons), t.constant(target));
    t.backward(num::sum(num::square(err)));
    const auto grads = base.params().gradients(t, b);
    std::vector<std::vector<double>> numeric(base.params().size());
    double scale = 0.0;
    for (std::size_t k = 0; k < base.params().size(); ++k) {
      numeric[k] = oracle::gradient(
          [&](const std::vector<double>& x) {
            num::ParamSet p = base.params();
            p[k].vec() = x;
            return loss_at(p);
          },
          base.params()[k].vec());
      for (double g : numeric[k]) scale = std::max(scale, std::abs(g));
    }
    for (std::size_t k = 0; k < base.params().size(); ++k) {
      CAPTURE(to_string(v));
      CAPTURE(base.params().name(k));
      // Blocks with tiny (or exactly zero, e.g. biases cancelled by the
      // antisymmetric pair force) gradients are judged against the overall
      // gradient scale rather than their own round-off.
      CHECK(oracle::rel_err(grads[k].vec(), numeric[k], 1e-3 * scale) < 1e-6);
    }
  }
}
