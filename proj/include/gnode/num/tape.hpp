#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "gnode/num/matrix.hpp"

namespace gnode::num {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node index
// order is a topological order of the recorded graph. A tape is confined to
// one thread; build one per sample / per evaluation.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() { nodes_.reserve(128); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix v);
  // Borrows `v`; the caller keeps it alive for the tape's lifetime.
  Var constant_ref(const Matrix& v);
  Var parameter_ref(const Matrix& v);
  Var variable(Matrix v);

  // Appends an op result. The backward rule is kept only when some parent
  // needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);

  const Matrix& value(Var v) const { return value(v.id); }
  const Matrix& value(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.borrowed ? *n.borrowed : n.value;
  }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }

  void accumulate(std::uint32_t id, const Matrix& g);
  // Zero-initialised on first use.
  Matrix& grad_slot(std::uint32_t id);

  // Reverse sweep from a scalar loss. Gradients of nodes the loss does not
  // reach stay zero. Calling it again starts from cleared gradients.
  void backward(Var loss);
  Matrix grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* borrowed = nullptr;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };
  Var push(Node n);

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape->value(id); }

}  // namespace gnode::num
