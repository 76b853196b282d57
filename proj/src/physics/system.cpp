#include "gnode/physics/system.hpp"

#include <cmath>

#include "gnode/num/error.hpp"

namespace gnode::physics {

std::string to_string(SystemKind kind) {
  return kind == SystemKind::Pendulum ? "pendulum" : "spring";
}

SystemKind system_kind_from_string(const std::string& s) {
  if (s == "pendulum") return SystemKind::Pendulum;
  if (s == "spring") return SystemKind::Spring;
  throw ConfigError("unknown system kind '" + s + "' (expected pendulum | spring)");
}

SystemSpec SystemSpec::pendulum(std::size_t n, double mass, double length, double gravity) {
  SystemSpec s;
  s.kind = SystemKind::Pendulum;
  s.n = n;
  s.masses.assign(n, mass);
  s.lengths.assign(n, length);
  s.gravity = gravity;
  s.types.assign(n, 0);
  s.stiffness = 0.0;
  return s;
}

SystemSpec SystemSpec::spring(std::size_t n, double mass, double rest_length, double stiffness,
                              double init_velocity) {
  SystemSpec s;
  s.kind = SystemKind::Spring;
  s.n = n;
  s.masses.assign(n, mass);
  s.rest_length = rest_length;
  s.stiffness = stiffness;
  s.gravity = 0.0;
  s.types.assign(n, 0);
  s.init_velocity = init_velocity;
  return s;
}

SystemSpec SystemSpec::resized(std::size_t new_n) const {
  SystemSpec s = *this;
  s.n = new_n;
  s.masses.assign(new_n, masses.empty() ? 1.0 : masses.front());
  if (!lengths.empty()) s.lengths.assign(new_n, lengths.front());
  s.types.assign(new_n, types.empty() ? 0u : types.front());
  return s;
}

void SystemSpec::validate() const {
  if (n < 1) throw ConfigError("system: n must be >= 1");
  if (dim != 2) throw ConfigError("system: only 2-dimensional systems are supported");
  if (masses.size() != n) throw ConfigError("system: expected " + std::to_string(n) + " masses");
  for (double m : masses)
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("system: masses must be positive");
  if (types.size() != n) throw ConfigError("system: expected " + std::to_string(n) + " type ids");
  if (type_vocab < 1) throw ConfigError("system: type vocabulary must be >= 1");
  for (auto t : types)
    if (t >= type_vocab) throw ConfigError("system: type id outside vocabulary");
  if (!std::isfinite(gravity)) throw ConfigError("system: gravity must be finite");
  if (!(init_velocity >= 0.0)) throw ConfigError("system: init_velocity must be >= 0");
  if (kind == SystemKind::Pendulum) {
    if (lengths.size() != n) throw ConfigError("system: expected " + std::to_string(n) + " lengths");
    for (double l : lengths)
      if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("system: lengths must be positive");
  } else {
    if (!(rest_length > 0.0)) throw ConfigError("system: rest length must be positive");
    if (!(stiffness >= 0.0)) throw ConfigError("system: stiffness must be >= 0");
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> spring_edges(std::size_t n) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  if (n < 2) return edges;
  for (std::uint32_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  if (n >= 3) edges.emplace_back(0, static_cast<std::uint32_t>(n - 1));
  return edges;
}

}  // namespace gnode::physics
