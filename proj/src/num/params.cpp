#include "gnode/num/params.hpp"

#include <cmath>
#include <cstring>

#include "gnode/num/error.hpp"

namespace gnode::num {

std::size_t ParamSet::add(std::string name, Matrix init) {
  if (find(name)) throw ConfigError("ParamSet: duplicate parameter name '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::vector<Var> ParamSet::bind(Tape& tape, bool requires_grad) const {
  std::vector<Var> out;
  out.reserve(values_.size());
  for (const auto& v : values_)
    out.push_back(requires_grad ? tape.parameter_ref(v) : tape.constant_ref(v));
  return out;
}

std::vector<Matrix> ParamSet::gradients(const Tape& tape, const std::vector<Var>& bound) const {
  std::vector<Matrix> out;
  out.reserve(bound.size());
  for (const auto& v : bound) out.push_back(tape.grad(v));
  return out;
}

std::vector<Matrix> ParamSet::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.emplace_back(v.rows(), v.cols());
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (std::size_t i = 0; i < values_.size(); ++i) {
    mix(names_[i].data(), names_[i].size());
    const std::uint64_t shape[2] = {values_[i].rows(), values_[i].cols()};
    mix(shape, sizeof(shape));
    mix(values_[i].data(), values_[i].size() * sizeof(double));
  }
  return h;
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(fan_in, fan_out);
  for (auto& x : w.vec()) x = dist(rng);
  return w;
}

}  // namespace gnode::num
