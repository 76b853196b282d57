#include "gnode/num/mlp.hpp"

#include "gnode/num/error.hpp"
#include "gnode/num/ops.hpp"

namespace gnode::num {

std::size_t MlpSpec::scalar_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < 3; ++l) n += widths[l] * widths[l + 1] + widths[l + 1];
  return n;
}

MlpSpec add_mlp(ParamSet& params, const std::string& prefix, std::array<std::size_t, 4> widths,
                Head head, std::mt19937_64& rng) {
  for (std::size_t w : widths)
    if (w == 0) throw ConfigError("add_mlp(" + prefix + "): zero layer width");
  MlpSpec spec{widths, head, params.size()};
  for (std::size_t l = 0; l < 3; ++l) {
    params.add(prefix + ".W" + std::to_string(l), glorot_uniform(widths[l], widths[l + 1], rng));
    params.add(prefix + ".b" + std::to_string(l), Matrix(1, widths[l + 1]));
  }
  return spec;
}

Var mlp_apply(const MlpSpec& spec, std::span<const Var> bound, Var input) {
  if (input.cols() != spec.input_width()) {
    throw ShapeError("mlp_apply: input width " + std::to_string(input.cols()) + ", expected " +
                     std::to_string(spec.input_width()));
  }
  if (spec.first + 6 > bound.size()) throw ShapeError("mlp_apply: parameter set too small");
  Var h = input;
  for (std::size_t l = 0; l < 3; ++l) {
    const Var w = bound[spec.weight(l)];
    const Var b = bound[spec.bias(l)];
    if (w.rows() != spec.widths[l] || w.cols() != spec.widths[l + 1]) {
      throw ShapeError("mlp_apply: layer " + std::to_string(l) + " weight is " +
                       w.value().shape_str());
    }
    h = add_row(matmul(h, w), b);
    if (l < 2 || spec.head == Head::Squareplus) h = squareplus(h);
  }
  return h;
}

Matrix mlp_apply(const MlpSpec& spec, const ParamSet& params, const Matrix& input) {
  Tape tape;
  const auto bound = params.bind(tape, false);
  return mlp_apply(spec, bound, tape.constant_ref(input)).value();
}

}  // namespace gnode::num
