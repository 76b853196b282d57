#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gnode/num/params.hpp"

namespace gnode::num {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamSet& params, AdamConfig config = {});
};

// One bias-corrected Adam update, in place.
void adam_step(ParamSet& params, std::span<const Matrix> grads, AdamState& state, double lr);

}  // namespace gnode::num
