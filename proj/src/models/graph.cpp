#include "gnode/models/graph.hpp"

#include <algorithm>
#include <string>

#include "gnode/num/error.hpp"

namespace gnode::models {

GraphTopology::GraphTopology(std::size_t n, std::vector<std::uint32_t> types, std::vector<Edge> edges)
    : n_(n), types_(std::move(types)) {
  if (types_.size() != n_) throw ShapeError("GraphTopology: type count != node count");
  for (auto& [a, b] : edges) {
    if (a >= n_ || b >= n_) throw ShapeError("GraphTopology: edge endpoint out of range");
    if (a == b) throw ShapeError("GraphTopology: self-loop at node " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ShapeError("GraphTopology: duplicate edge");
  }
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    receivers_.push_back(a);
    senders_.push_back(b);
    receivers_.push_back(b);
    senders_.push_back(a);
    firsts_.push_back(a);
    seconds_.push_back(b);
  }
}

GraphTopology build_topology(const physics::SystemSpec& spec) {
  std::vector<Edge> edges;
  if (spec.kind == physics::SystemKind::Pendulum) {
    for (std::uint32_t i = 0; i + 1 < spec.n; ++i) edges.emplace_back(i, i + 1);
  } else {
    edges = physics::spring_edges(spec.n);
  }
  return GraphTopology(spec.n, spec.types, std::move(edges));
}

}  // namespace gnode::models
