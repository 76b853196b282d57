#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gnode/physics/system.hpp"

namespace gnode::models {

using Edge = std::pair<std::uint32_t, std::uint32_t>;

// Undirected particle graph. Edges are stored once, canonically oriented
// (first < second) and sorted. Message passing runs over both orientations:
// directed edge 2e has receiver edges[e].first and sender edges[e].second,
// directed edge 2e + 1 the reverse.
class GraphTopology {
 public:
  GraphTopology() = default;
  // Canonicalises orientation; rejects self-loops, duplicates and
  // out-of-range endpoints.
  GraphTopology(std::size_t n, std::vector<std::uint32_t> types, std::vector<Edge> edges);

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::uint32_t>& types() const { return types_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const std::vector<std::uint32_t>& receivers() const { return receivers_; }
  const std::vector<std::uint32_t>& senders() const { return senders_; }
  // Canonical first / second endpoint of every undirected edge.
  const std::vector<std::uint32_t>& firsts() const { return firsts_; }
  const std::vector<std::uint32_t>& seconds() const { return seconds_; }

  bool operator==(const GraphTopology& o) const {
    return n_ == o.n_ && types_ == o.types_ && edges_ == o.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint32_t> types_;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> receivers_, senders_, firsts_, seconds_;
};

// Pendulum: path over the bobs (the pivot is not a node). Spring: the cycle.
GraphTopology build_topology(const physics::SystemSpec& spec);

}  // namespace gnode::models
