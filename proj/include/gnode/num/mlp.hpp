#pragma once

#include <array>
#include <random>
#include <span>
#include <string>

#include "gnode/num/params.hpp"

namespace gnode::num {

enum class Head { Linear, Squareplus };

// Two-hidden-layer perceptron stored inside a ParamSet as W0,b0,W1,b1,W2,b2
// starting at `first`. Hidden layers use squareplus; the output head is
// chosen per call site.
struct MlpSpec {
  std::array<std::size_t, 4> widths{};  // input, hidden, hidden, output
  Head head = Head::Linear;
  std::size_t first = 0;

  std::size_t input_width() const { return widths[0]; }
  std::size_t output_width() const { return widths[3]; }
  std::size_t weight(std::size_t layer) const { return first + 2 * layer; }
  std::size_t bias(std::size_t layer) const { return first + 2 * layer + 1; }
  std::size_t scalar_count() const;
};

// Appends the six parameter matrices (Glorot weights, zero biases).
MlpSpec add_mlp(ParamSet& params, const std::string& prefix, std::array<std::size_t, 4> widths,
                Head head, std::mt19937_64& rng);

// Applies the MLP row-wise to `input` (rows x input_width).
Var mlp_apply(const MlpSpec& spec, std::span<const Var> bound, Var input);

// Tape-free convenience for a single evaluation.
Matrix mlp_apply(const MlpSpec& spec, const ParamSet& params, const Matrix& input);

}  // namespace gnode::num
