#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gnode/num/tape.hpp"

namespace gnode::num {

// Shape parameter of squareplus used throughout: value 1 and slope 1/2 at 0.
inline constexpr double kSquareplusB = 4.0;

double squareplus(double x, double b = kSquareplusB);
double squareplus_derivative(double x, double b = kSquareplusB);

// Differentiable primitives. Every op throws ShapeError on incompatible
// operands and records its backward rule on the operands' tape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var neg(Var a);
Var scale(Var a, double s);
Var matmul(Var a, Var b);
Var transpose(Var a);

// x (r x c) + b (1 x c), b broadcast over rows.
Var add_row(Var x, Var b);
// x (r x c) * v (r x 1), v broadcast over columns.
Var mul_col(Var x, Var v);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var gather_rows(Var a, std::vector<std::uint32_t> index);
// out (n_rows x c) with out[index[k]] += a[k].
Var scatter_add_rows(Var a, std::vector<std::uint32_t> index, std::size_t n_rows);
Var reshape(Var a, std::size_t rows, std::size_t cols);

Var sum(Var a);
Var mean(Var a);
Var l2norm(Var a);
Var sqrt(Var a);
Var square(Var a);
Var reciprocal(Var a);
Var exp(Var a);
Var squareplus(Var a, double b = kSquareplusB);

// X = S^{-1} Y for symmetric positive-definite S (k x k) and Y (k x m).
// The backward rule solves the adjoint system with the same factor; no
// inverse is formed. Non-SPD input raises SingularError("solve_spd").
Var solve_spd(Var s, Var y);

}  // namespace gnode::num
