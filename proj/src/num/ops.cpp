#include "gnode/num/ops.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "gnode/num/error.hpp"

namespace gnode::num {

double squareplus(double x, double b) { return 0.5 * (x + std::sqrt(x * x + b)); }

double squareplus_derivative(double x, double b) { return 0.5 * (1.0 + x / std::sqrt(x * x + b)); }

namespace {

Tape& tape_of(Var a) { return *a.tape; }

void same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw Error(std::string(op) + ": operands live on different tapes");
}

// out[i] = f(a[i]); backward multiplies by df computed from (a, out).
template <class F, class DF>
Var unary(Var a, F f, DF df) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const std::uint32_t ia = a.id;
  std::uint32_t io = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(out), {a}, [ia, io, df](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(io);
    Matrix& slot = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  const std::uint32_t ia = a.id, ib = b.id;
  return tape_of(a).record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  const std::uint32_t ia = a.id, ib = b.id;
  return tape_of(a).record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g);
    if (t.requires_grad(ib)) {
      Matrix& s = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) s[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b, "mul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "mul");
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const std::uint32_t ia = a.id, ib = b.id;
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(ib);
    if (t.requires_grad(ia)) {
      Matrix& s = t.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) s[i] += g[i] * y[i];
    }
    if (t.requires_grad(ib)) {
      Matrix& s = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) s[i] += g[i] * x[i];
    }
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double s) {
  const std::uint32_t ia = a.id;
  return tape_of(a).record(a.value() * s, {a}, [ia, s](Tape& t, const Matrix& g) {
    Matrix& slot = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += s * g[i];
  });
}

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  const std::uint32_t ia = a.id, ib = b.id;
  return tape_of(a).record(num::matmul(a.value(), b.value()), {a, b},
                           [ia, ib](Tape& t, const Matrix& g) {
                             const Matrix& x = t.value(ia);
                             const Matrix& y = t.value(ib);
                             const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
                             // dA = G B^T, dB = A^T G
                             if (t.requires_grad(ia)) {
                               Matrix& s = t.grad_slot(ia);
                               for (std::size_t i = 0; i < n; ++i)
                                 for (std::size_t p = 0; p < k; ++p) {
                                   double acc = 0.0;
                                   for (std::size_t j = 0; j < m; ++j) acc += g(i, j) * y(p, j);
                                   s(i, p) += acc;
                                 }
                             }
                             if (t.requires_grad(ib)) {
                               Matrix& s = t.grad_slot(ib);
                               for (std::size_t i = 0; i < n; ++i)
                                 for (std::size_t p = 0; p < k; ++p) {
                                   const double xip = x(i, p);
                                   for (std::size_t j = 0; j < m; ++j) s(p, j) += xip * g(i, j);
                                 }
                             }
                           });
}

Var transpose(Var a) {
  const std::uint32_t ia = a.id;
  return tape_of(a).record(a.value().transposed(), {a}, [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.transposed());
  });
}

Var add_row(Var x, Var b) {
  same_tape(x, b, "add_row");
  const Matrix& xv = x.value();
  const Matrix& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_row: " + xv.shape_str() + " + " + bv.shape_str());
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const std::uint32_t ix = x.id, ib = b.id;
  return tape_of(x).record(std::move(out), {x, b}, [ix, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ix)) t.accumulate(ix, g);
    if (t.requires_grad(ib)) {
      Matrix& s = t.grad_slot(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) s[c] += g(r, c);
    }
  });
}

Var mul_col(Var x, Var v) {
  same_tape(x, v, "mul_col");
  const Matrix& xv = x.value();
  const Matrix& vv = v.value();
  if (vv.cols() != 1 || vv.rows() != xv.rows()) {
    throw ShapeError("mul_col: " + xv.shape_str() + " * " + vv.shape_str());
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= vv[r];
  const std::uint32_t ix = x.id, iv = v.id;
  return tape_of(x).record(std::move(out), {x, v}, [ix, iv](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(ix);
    const Matrix& vv = t.value(iv);
    if (t.requires_grad(ix)) {
      Matrix& s = t.grad_slot(ix);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) s(r, c) += g(r, c) * vv[r];
    }
    if (t.requires_grad(iv)) {
      Matrix& s = t.grad_slot(iv);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) s[r] += g(r, c) * xv(r, c);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = tape_of(parts[0]);
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_cols");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + parts[0].value().shape_str() + " vs " +
                       p.value().shape_str());
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  bool any_grad = false;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    ids.push_back(p.id);
    offsets.push_back(off);
    off += v.cols();
    any_grad = any_grad || t.requires_grad(p);
  }
  // record() only sees two parents here, so fold the flag in via a parent
  // that requires grad when any part does.
  Var flag = parts[0];
  if (any_grad)
    for (const Var& p : parts)
      if (t.requires_grad(p)) flag = p;
  auto shared = std::make_shared<std::pair<std::vector<std::uint32_t>, std::vector<std::size_t>>>(
      std::move(ids), std::move(offsets));
  return t.record(std::move(out), {flag}, [shared](Tape& t, const Matrix& g) {
    const auto& [ids, offsets] = *shared;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Matrix& s = t.grad_slot(ids[k]);
      for (std::size_t r = 0; r < s.rows(); ++r)
        for (std::size_t c = 0; c < s.cols(); ++c) s(r, c) += g(r, offsets[k] + c);
    }
  });
}

Var concat_cols(Var a, Var b) {
  const Var parts[2] = {a, b};
  return concat_cols(std::span<const Var>(parts, 2));
}

Var gather_rows(Var a, std::vector<std::uint32_t> index) {
  const Matrix& av = a.value();
  Matrix out(index.size(), av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= av.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t c = 0; c < av.cols(); ++c) out(k, c) = av(index[k], c);
  }
  const std::uint32_t ia = a.id;
  auto idx = std::make_shared<std::vector<std::uint32_t>>(std::move(index));
  return tape_of(a).record(std::move(out), {a}, [ia, idx](Tape& t, const Matrix& g) {
    Matrix& s = t.grad_slot(ia);
    for (std::size_t k = 0; k < idx->size(); ++k)
      for (std::size_t c = 0; c < g.cols(); ++c) s((*idx)[k], c) += g(k, c);
  });
}

Var scatter_add_rows(Var a, std::vector<std::uint32_t> index, std::size_t n_rows) {
  const Matrix& av = a.value();
  if (index.size() != av.rows()) throw ShapeError("scatter_add_rows: index length != rows");
  Matrix out(n_rows, av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= n_rows) throw ShapeError("scatter_add_rows: index out of range");
    for (std::size_t c = 0; c < av.cols(); ++c) out(index[k], c) += av(k, c);
  }
  const std::uint32_t ia = a.id;
  auto idx = std::make_shared<std::vector<std::uint32_t>>(std::move(index));
  return tape_of(a).record(std::move(out), {a}, [ia, idx](Tape& t, const Matrix& g) {
    Matrix& s = t.grad_slot(ia);
    for (std::size_t k = 0; k < idx->size(); ++k)
      for (std::size_t c = 0; c < g.cols(); ++c) s(k, c) += g((*idx)[k], c);
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const std::uint32_t ia = a.id;
  return tape_of(a).record(a.value().reshaped(rows, cols), {a}, [ia](Tape& t, const Matrix& g) {
    Matrix& s = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) s[i] += g[i];
  });
}

Var sum(Var a) {
  const Matrix& av = a.value();
  double acc = 0.0;
  for (double x : av.span()) acc += x;
  const std::uint32_t ia = a.id;
  return tape_of(a).record(Matrix::scalar(acc), {a}, [ia](Tape& t, const Matrix& g) {
    Matrix& s = t.grad_slot(ia);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += g[0];
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var l2norm(Var a) { return sqrt(sum(square(a))); }

Var sqrt(Var a) {
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double, double y) { return 0.5 / y; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var reciprocal(Var a) {
  return unary(a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var squareplus(Var a, double b) {
  return unary(a, [b](double x) { return squareplus(x, b); },
               [b](double x, double) { return squareplus_derivative(x, b); });
}

Var solve_spd(Var s, Var y) {
  same_tape(s, y, "solve_spd");
  const Matrix& sv = s.value();
  const Matrix& yv = y.value();
  if (sv.rows() != sv.cols() || yv.rows() != sv.rows()) {
    throw ShapeError("solve_spd: " + sv.shape_str() + " \\ " + yv.shape_str());
  }
  auto factor = std::make_shared<Matrix>(cholesky(sv, "solve_spd"));
  Matrix x = yv;
  cholesky_solve_inplace(*factor, x);
  const std::uint32_t is = s.id, iy = y.id;
  Tape& t = tape_of(s);
  const std::uint32_t ix = static_cast<std::uint32_t>(t.size());
  return t.record(std::move(x), {s, y}, [is, iy, ix, factor](Tape& t, const Matrix& g) {
    // Adjoint: S^T gy = g (S symmetric), gS = -gy x^T.
    Matrix gy = g;
    cholesky_solve_inplace(*factor, gy);
    if (t.requires_grad(iy)) t.accumulate(iy, gy);
    if (t.requires_grad(is)) {
      const Matrix& xv = t.value(ix);
      Matrix& gs = t.grad_slot(is);
      for (std::size_t i = 0; i < gs.rows(); ++i)
        for (std::size_t j = 0; j < gs.cols(); ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < xv.cols(); ++c) acc += gy(i, c) * xv(j, c);
          gs(i, j) -= acc;
        }
    }
  });
}

}  // namespace gnode::num
