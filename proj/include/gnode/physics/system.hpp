#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gnode/num/matrix.hpp"

namespace gnode::physics {

using num::Matrix;

enum class SystemKind { Pendulum, Spring };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& s);

// Physical definition of an n-pendulum (bobs on rigid bars hanging from a
// pivot at the origin) or an n-spring ring (closed cycle of linear springs).
struct SystemSpec {
  SystemKind kind = SystemKind::Pendulum;
  std::size_t n = 1;
  std::vector<double> masses;    // kg, one per particle
  std::vector<double> lengths;   // m, bar i joins particle i-1 (or the pivot) to i
  double rest_length = 1.0;      // m, springs
  double stiffness = 1.0;        // N/m, springs
  double gravity = 0.0;          // m/s^2 along -y
  std::size_t dim = 2;
  std::vector<std::uint32_t> types;
  std::size_t type_vocab = 1;
  // Half-width of the uniform per-coordinate initial velocity draw (springs).
  double init_velocity = 0.0;

  static SystemSpec pendulum(std::size_t n, double mass = 1.0, double length = 1.0,
                             double gravity = 9.81);
  static SystemSpec spring(std::size_t n, double mass = 1.0, double rest_length = 1.0,
                           double stiffness = 1.0, double init_velocity = 0.1);

  // Same physical parameters (taken from particle 0), different size.
  SystemSpec resized(std::size_t new_n) const;

  std::size_t dof() const { return n * dim; }
  // Throws ConfigError on any physically invalid field.
  void validate() const;

  bool operator==(const SystemSpec&) const = default;
};

// Spring cycle as canonical (i < j) pairs, deduplicated: n = 1 has none,
// n = 2 one, n >= 3 has n edges including (0, n-1).
std::vector<std::pair<std::uint32_t, std::uint32_t>> spring_edges(std::size_t n);

struct State {
  Matrix q;     // n x d, m
  Matrix qdot;  // n x d, m/s
  double t = 0.0;
};

struct Trajectory {
  SystemSpec spec;
  double dt_record = 0.0;
  std::vector<State> states;
  // Set when a learned rollout produced a non-finite state; `states` then holds
  // the finite prefix and `blow_up_step` the integrator step that failed.
  bool blew_up = false;
  std::optional<std::size_t> blow_up_step;
};

}  // namespace gnode::physics
