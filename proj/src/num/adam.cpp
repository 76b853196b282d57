#include "gnode/num/adam.hpp"

#include <cmath>
#include <string>

#include "gnode/num/error.hpp"

namespace gnode::num {

AdamState AdamState::for_params(const ParamSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(ParamSet& params, std::span<const Matrix> grads, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "adam_step");
    require_same_shape(params[i], state.m[i], "adam_step");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    const Matrix& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / corr1;
      const double vhat = v[k] / corr2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace gnode::num
