#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnode/models/graph.hpp"
#include "gnode/num/mlp.hpp"
#include "gnode/num/params.hpp"
#include "gnode/physics/dynamics.hpp"

namespace gnode::models {

using num::Matrix;
using num::Var;
using physics::ConstraintBlock;
using physics::State;

enum class Variant { Node, Gnode, Cgnode, Cdgnode, Mcgnode };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
  Variant variant = Variant::Gnode;
  std::size_t dim = 2;
  std::size_t type_vocab = 1;
  std::size_t embed_dim = 5;
  std::size_t hidden = 5;
  std::size_t mp_layers = 1;
  // MCGNODE only: per-particle external-field force from (q, qd).
  bool external_field = true;
  // Plain NODE baseline: hidden width and the one system size it accepts.
  std::size_t node_hidden = 16;
  std::size_t system_size = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Node and edge embeddings after encoding / message passing. Edge rows follow
// the topology's directed-edge order.
struct GraphEmbeddings {
  Var nodes;  // n x embed
  Var edges;  // 2m x embed
};

class Model {
 public:
  // Builds the parameter layout and draws initial weights from `seed`.
  Model(ModelConfig config, std::uint64_t seed);
  // Adopts existing weights; names and shapes must match the layout.
  Model(ModelConfig config, num::ParamSet params);

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return config_.variant; }
  const num::ParamSet& params() const { return params_; }
  num::ParamSet& params() { return params_; }

  bool is_graph() const { return config_.variant != Variant::Node; }
  bool uses_constraints() const;

  GraphEmbeddings encode(std::span<const Var> bound, const GraphTopology& topo, const State& state) const;
  GraphEmbeddings message_pass(std::span<const Var> bound, const GraphTopology& topo,
                               GraphEmbeddings h) const;

  // Predicted conservative force N (n x d) of the constrained variants.
  Var forces(std::span<const Var> bound, const GraphTopology& topo, const State& state) const;
  // MCGNODE: antisymmetrised pair force per canonical edge (m x d); +F acts on
  // the edge's first endpoint and -F on its second.
  Var pair_forces(std::span<const Var> bound, const GraphTopology& topo, const State& state) const;
  // exp(learned log-mass of each particle's type), n x 1.
  Var masses(std::span<const Var> bound, const GraphTopology& topo) const;

  // Predicted acceleration (n x d). `cons` is required for constrained
  // variants on constrained systems; pass an empty block otherwise.
  Var acceleration(std::span<const Var> bound, const GraphTopology& topo, const State& state,
                   const ConstraintBlock& cons) const;

  // Gradient-free evaluation.
  Matrix predict(const GraphTopology& topo, const State& state, const ConstraintBlock& cons) const;

 private:
  void build_layout(std::uint64_t seed);
  Var node_features(num::Tape& tape, const GraphTopology& topo, const State& state) const;
  Var global_features(num::Tape& tape, const State& state) const;
  Var node_forward(std::span<const Var> bound, const State& state) const;

  ModelConfig config_;
  num::ParamSet params_;

  num::MlpSpec node_embed_{}, edge_embed_{}, decoder_{}, global_{}, edge_decoder_{}, node_mlp_{};
  std::vector<std::size_t> w_node_, w_edge_;
  std::optional<std::size_t> log_mass_;
};

// Acceleration field of a model on a given system: builds the topology once
// and recomputes the constraint block from each state.
physics::AccelFn make_accel_fn(const Model& model, const physics::SystemSpec& spec);

}  // namespace gnode::models
