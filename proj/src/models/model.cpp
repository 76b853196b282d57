#include "gnode/models/model.hpp"

#include <random>

#include "gnode/num/error.hpp"
#include "gnode/num/ops.hpp"

namespace gnode::models {

using num::Head;
using num::Tape;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Node: return "node";
    case Variant::Gnode: return "gnode";
    case Variant::Cgnode: return "cgnode";
    case Variant::Cdgnode: return "cdgnode";
    case Variant::Mcgnode: return "mcgnode";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::Node, Variant::Gnode, Variant::Cgnode, Variant::Cdgnode, Variant::Mcgnode})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown model variant '" + s + "' (expected node | gnode | cgnode | cdgnode | mcgnode)");
}

void ModelConfig::validate() const {
  if (dim == 0) throw ConfigError("model: dim must be >= 1");
  if (type_vocab == 0) throw ConfigError("model: type vocabulary must be >= 1");
  if (embed_dim == 0 || hidden == 0) throw ConfigError("model: widths must be >= 1");
  if (variant == Variant::Node) {
    if (system_size == 0) throw ConfigError("model: NODE needs a fixed system size");
    if (node_hidden == 0) throw ConfigError("model: NODE hidden width must be >= 1");
  } else if (mp_layers == 0) {
    throw ConfigError("model: at least one message-passing layer is required");
  }
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  build_layout(seed);
}

Model::Model(ModelConfig config, num::ParamSet params) : config_(std::move(config)) {
  config_.validate();
  build_layout(0);
  if (params.size() != params_.size()) {
    throw ConfigError("model: checkpoint has " + std::to_string(params.size()) +
                      " parameter blocks, the " + to_string(config_.variant) + " layout needs " +
                      std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.name(i) != params_.name(i) || !params[i].same_shape(params_[i])) {
      throw ConfigError("model: checkpoint block '" + params.name(i) + "' (" + params[i].shape_str() +
                        ") does not match layout block '" + params_.name(i) + "' (" +
                        params_[i].shape_str() + ")");
    }
  }
  params_ = std::move(params);
}

bool Model::uses_constraints() const {
  return config_.variant == Variant::Cgnode || config_.variant == Variant::Cdgnode ||
         config_.variant == Variant::Mcgnode;
}

void Model::build_layout(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.dim, e = config_.embed_dim, h = config_.hidden,
                    v = config_.type_vocab;
  params_ = num::ParamSet();
  if (config_.variant == Variant::Node) {
    const std::size_t width = config_.system_size * d;
    const std::size_t nh = config_.node_hidden;
    node_mlp_ = num::add_mlp(params_, "node_mlp", {2 * width, nh, nh, width}, Head::Linear, rng);
    return;
  }
  const bool local_only = config_.variant == Variant::Cdgnode || config_.variant == Variant::Mcgnode;
  const std::size_t node_in = local_only ? v : v + 2 * d;
  node_embed_ = num::add_mlp(params_, "node_embed", {node_in, h, h, e}, Head::Squareplus, rng);
  edge_embed_ = num::add_mlp(params_, "edge_embed", {d, h, h, e}, Head::Squareplus, rng);
  for (std::size_t l = 0; l < config_.mp_layers; ++l) {
    const std::string p = "mp" + std::to_string(l);
    w_node_.push_back(params_.add(p + ".W_V", num::glorot_uniform(2 * e, e, rng)));
    w_edge_.push_back(params_.add(p + ".W_E", num::glorot_uniform(2 * e, e, rng)));
  }
  switch (config_.variant) {
    case Variant::Gnode:
    case Variant::Cgnode:
      decoder_ = num::add_mlp(params_, "decoder", {e, h, h, d}, Head::Linear, rng);
      break;
    case Variant::Cdgnode:
      global_ = num::add_mlp(params_, "global", {2 * d, h, h, e}, Head::Squareplus, rng);
      decoder_ = num::add_mlp(params_, "decoder", {2 * e, h, h, d}, Head::Linear, rng);
      break;
    case Variant::Mcgnode:
      edge_decoder_ = num::add_mlp(params_, "edge_decoder", {e, h, h, d}, Head::Linear, rng);
      if (config_.external_field)
        global_ = num::add_mlp(params_, "external", {2 * d, h, h, d}, Head::Linear, rng);
      break;
    case Variant::Node: break;
  }
  if (uses_constraints()) log_mass_ = params_.add("log_mass", Matrix(v, 1));
}

Var Model::global_features(Tape& tape, const State& state) const {
  const std::size_t n = state.q.rows(), d = config_.dim;
  Matrix g(n, 2 * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      g(i, k) = state.q(i, k);
      g(i, d + k) = state.qdot(i, k);
    }
  return tape.constant(std::move(g));
}

Var Model::node_features(Tape& tape, const GraphTopology& topo, const State& state) const {
  const std::size_t n = topo.node_count(), d = config_.dim, v = config_.type_vocab;
  const bool local_only = config_.variant == Variant::Cdgnode || config_.variant == Variant::Mcgnode;
  Matrix f(n, local_only ? v : v + 2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = topo.types()[i];
    if (t >= v) {
      throw ConfigError("encode: particle type " + std::to_string(t) + " outside vocabulary of " +
                        std::to_string(v));
    }
    f(i, t) = 1.0;
    if (!local_only)
      for (std::size_t k = 0; k < d; ++k) {
        f(i, v + k) = state.q(i, k);
        f(i, v + d + k) = state.qdot(i, k);
      }
  }
  return tape.constant(std::move(f));
}

GraphEmbeddings Model::encode(std::span<const Var> bound, const GraphTopology& topo,
                              const State& state) const {
  if (!is_graph()) throw ConfigError("encode: NODE has no graph encoder");
  if (state.q.rows() != topo.node_count() || state.q.cols() != config_.dim) {
    throw ShapeError("encode: state " + state.q.shape_str() + " for " +
                     std::to_string(topo.node_count()) + " nodes");
  }
  Tape& tape = *bound[0].tape;
  const std::size_t d = config_.dim;
  const auto& rec = topo.receivers();
  const auto& snd = topo.senders();
  Matrix w(rec.size(), d);
  for (std::size_t k = 0; k < rec.size(); ++k)
    for (std::size_t c = 0; c < d; ++c) w(k, c) = state.q(rec[k], c) - state.q(snd[k], c);
  const Var nodes = num::mlp_apply(node_embed_, bound, node_features(tape, topo, state));
  const Var edges = num::mlp_apply(edge_embed_, bound, tape.constant(std::move(w)));
  return {nodes, edges};
}

GraphEmbeddings Model::message_pass(std::span<const Var> bound, const GraphTopology& topo,
                                    GraphEmbeddings h) const {
  using namespace num;
  const std::size_t n = topo.node_count();
  for (std::size_t l = 0; l < config_.mp_layers; ++l) {
    const Var from_sender = gather_rows(h.nodes, topo.senders());
    const Var at_receiver = gather_rows(h.nodes, topo.receivers());
    const Var messages = matmul(concat_cols(from_sender, h.edges), bound[w_node_[l]]);
    const Var next_nodes = squareplus(add(h.nodes, scatter_add_rows(messages, topo.receivers(), n)));
    const Var next_edges =
        squareplus(add(h.edges, matmul(concat_cols(at_receiver, from_sender), bound[w_edge_[l]])));
    h = {next_nodes, next_edges};
  }
  return h;
}

Var Model::masses(std::span<const Var> bound, const GraphTopology& topo) const {
  if (!log_mass_) throw ConfigError("masses: " + to_string(config_.variant) + " has no learned masses");
  return num::exp(num::gather_rows(bound[*log_mass_], topo.types()));
}

Var Model::pair_forces(std::span<const Var> bound, const GraphTopology& topo, const State& state) const {
  using namespace num;
  if (config_.variant != Variant::Mcgnode) throw ConfigError("pair_forces: MCGNODE only");
  const GraphEmbeddings z = message_pass(bound, topo, encode(bound, topo, state));
  const Var f = mlp_apply(edge_decoder_, bound, z.edges);
  std::vector<std::uint32_t> forward, backward;
  for (std::uint32_t e = 0; e < topo.edge_count(); ++e) {
    forward.push_back(2 * e);
    backward.push_back(2 * e + 1);
  }
  // f_ij = -f_ji by construction.
  return scale(sub(gather_rows(f, std::move(forward)), gather_rows(f, std::move(backward))), 0.5);
}

Var Model::forces(std::span<const Var> bound, const GraphTopology& topo, const State& state) const {
  using namespace num;
  Tape& tape = *bound[0].tape;
  const std::size_t n = topo.node_count();
  switch (config_.variant) {
    case Variant::Cgnode: {
      const GraphEmbeddings z = message_pass(bound, topo, encode(bound, topo, state));
      return mlp_apply(decoder_, bound, z.nodes);
    }
    case Variant::Cdgnode: {
      const GraphEmbeddings z = message_pass(bound, topo, encode(bound, topo, state));
      const Var global = mlp_apply(global_, bound, global_features(tape, state));
      return mlp_apply(decoder_, bound, concat_cols(z.nodes, global));
    }
    case Variant::Mcgnode: {
      const Var pair = pair_forces(bound, topo, state);
      Var total = sub(scatter_add_rows(pair, topo.firsts(), n), scatter_add_rows(pair, topo.seconds(), n));
      if (config_.external_field)
        total = add(total, mlp_apply(global_, bound, global_features(tape, state)));
      // Net force on a particle enters the equation of motion as -N.
      return neg(total);
    }
    default:
      throw ConfigError("forces: " + to_string(config_.variant) + " does not predict forces");
  }
}

Var Model::node_forward(std::span<const Var> bound, const State& state) const {
  using namespace num;
  const std::size_t n = state.q.rows(), d = config_.dim;
  if (n != config_.system_size || state.q.cols() != d) {
    throw TransductiveError("NODE was built for a " + std::to_string(config_.system_size) +
                            "-particle system, got " + std::to_string(n));
  }
  Tape& tape = *bound[0].tape;
  Matrix x(1, 2 * n * d);
  for (std::size_t i = 0; i < n * d; ++i) {
    x[i] = state.q[i];
    x[n * d + i] = state.qdot[i];
  }
  const Var out = mlp_apply(node_mlp_, bound, tape.constant(std::move(x)));
  return reshape(out, n, d);
}

Var Model::acceleration(std::span<const Var> bound, const GraphTopology& topo, const State& state,
                        const ConstraintBlock& cons) const {
  if (bound.size() != params_.size()) throw ShapeError("acceleration: bound parameter count mismatch");
  switch (config_.variant) {
    case Variant::Node: return node_forward(bound, state);
    case Variant::Gnode: {
      const GraphEmbeddings z = message_pass(bound, topo, encode(bound, topo, state));
      return num::mlp_apply(decoder_, bound, z.nodes);
    }
    default:
      return physics::constrained_acceleration(masses(bound, topo), forces(bound, topo, state), cons,
                                               state.qdot);
  }
}

Matrix Model::predict(const GraphTopology& topo, const State& state, const ConstraintBlock& cons) const {
  Tape tape;
  const auto bound = params_.bind(tape, false);
  return acceleration(bound, topo, state, cons).value();
}

physics::AccelFn make_accel_fn(const Model& model, const physics::SystemSpec& spec) {
  if (!model.is_graph() && spec.n != model.config().system_size) {
    throw TransductiveError("NODE was built for a " + std::to_string(model.config().system_size) +
                            "-particle system, got " + std::to_string(spec.n));
  }
  const GraphTopology topo = build_topology(spec);
  const bool constrained = model.uses_constraints();
  return [&model, spec, topo, constrained](const State& s) {
    const ConstraintBlock cons =
        constrained ? physics::constraints(spec, s)
                    : ConstraintBlock{Matrix(0, 1), Matrix(0, spec.dof()), Matrix(0, spec.dof())};
    return model.predict(topo, s, cons);
  };
}

}  // namespace gnode::models
