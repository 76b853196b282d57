#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gnode/num/matrix.hpp"
#include "gnode/num/tape.hpp"

namespace gnode::num {

// Ordered, named set of learnable matrices. Values are shared read-only
// across concurrent evaluations; only a training loop mutates them.
class ParamSet {
 public:
  std::size_t add(std::string name, Matrix init);

  std::size_t size() const { return values_.size(); }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }
  Matrix& operator[](std::size_t i) { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  const std::vector<Matrix>& values() const { return values_; }

  // Parameters enter the tape by reference; the set must outlive the tape.
  std::vector<Var> bind(Tape& tape, bool requires_grad) const;
  std::vector<Matrix> gradients(const Tape& tape, const std::vector<Var>& bound) const;
  std::vector<Matrix> zeros_like() const;

  std::size_t scalar_count() const;
  // FNV-1a over names, shapes and the raw bytes of every value.
  std::uint64_t checksum() const;

  bool operator==(const ParamSet& o) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

// Glorot-uniform initialisation: U(-sqrt(6/(fan_in+fan_out)), +...).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace gnode::num
