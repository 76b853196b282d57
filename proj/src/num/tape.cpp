#include "gnode/num/tape.hpp"

#include "gnode/num/error.hpp"

namespace gnode::num {

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix v) {
  Node n;
  n.value = std::move(v);
  return push(std::move(n));
}

Var Tape::constant_ref(const Matrix& v) {
  Node n;
  n.borrowed = &v;
  return push(std::move(n));
}

Var Tape::parameter_ref(const Matrix& v) {
  Node n;
  n.borrowed = &v;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::variable(Matrix v) {
  Node n;
  n.value = std::move(v);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape != this) throw Error("Tape::record: operand belongs to a different tape");
    n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Matrix& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Matrix& v = n.borrowed ? *n.borrowed : n.value;
    n.grad = Matrix(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::uint32_t id, const Matrix& g) {
  Matrix& slot = grad_slot(id);
  require_same_shape(slot, g, "accumulate");
  double* s = slot.data();
  const double* p = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) s[i] += p[i];
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error("Tape::backward: loss belongs to a different tape");
  if (value(loss).size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + value(loss).shape_str());
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  grad_slot(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  const Matrix& val = value(v);
  return Matrix(val.rows(), val.cols());
}

}  // namespace gnode::num
