#include "gnode/cli/config.hpp"

#include <set>

#include "gnode/io/io.hpp"
#include "gnode/num/error.hpp"
#include "gnode/parallel.hpp"

namespace gnode::cli {

using nlohmann::json;

namespace {

// Every object is read through a Block: it records which keys were consumed
// so leftovers can be reported as unknown.
class Block {
 public:
  Block(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

physics::SystemSpec parse_system(const json& j) {
  Block b(j, "system");
  std::string kind = "pendulum";
  b.read("kind", kind);
  const auto k = physics::system_kind_from_string(kind);
  std::size_t n = 3;
  b.read("n", n);
  double mass = 1.0;
  b.read("mass", mass);
  physics::SystemSpec s;
  if (k == physics::SystemKind::Pendulum) {
    double length = 1.0, gravity = 9.81;
    b.read("length", length);
    b.read("gravity", gravity);
    s = physics::SystemSpec::pendulum(n, mass, length, gravity);
    b.read("lengths", s.lengths);
  } else {
    double r0 = 1.0, stiffness = 1.0, v0 = 0.1;
    b.read("rest_length", r0);
    b.read("stiffness", stiffness);
    b.read("init_velocity", v0);
    s = physics::SystemSpec::spring(n, mass, r0, stiffness, v0);
  }
  b.read("masses", s.masses);
  b.read("types", s.types);
  b.read("type_vocab", s.type_vocab);
  b.finish();
  return s;
}

training::DataConfig parse_data(const json& j, physics::SystemKind kind) {
  auto d = training::DataConfig::defaults_for(kind);
  if (j.is_null()) return d;
  Block b(j, "data");
  b.read("n_traj", d.n_traj);
  b.read("points", d.points);
  b.read("dt", d.dt);
  b.read("record_every", d.record_every);
  b.finish();
  return d;
}

models::ModelConfig parse_model(const json& j, const physics::SystemSpec& sys) {
  models::ModelConfig m;
  m.external_field = sys.kind == physics::SystemKind::Pendulum;
  if (!j.is_null()) {
    Block b(j, "model");
    std::string variant = "gnode";
    b.read("variant", variant);
    m.variant = models::variant_from_string(variant);
    b.read("embed_dim", m.embed_dim);
    b.read("hidden", m.hidden);
    b.read("mp_layers", m.mp_layers);
    b.read("external_field", m.external_field);
    b.read("node_hidden", m.node_hidden);
    b.finish();
  }
  m.dim = sys.dim;
  m.type_vocab = sys.type_vocab;
  m.system_size = sys.n;
  return m;
}

training::Hyperparams parse_train(const json& j) {
  training::Hyperparams h;
  if (j.is_null()) return h;
  Block b(j, "train");
  b.read("lr", h.lr);
  b.read("batch", h.batch);
  b.read("max_epochs", h.max_epochs);
  b.read("stop_window", h.stop_window);
  b.read("stop_threshold", h.stop_threshold);
  b.finish();
  return h;
}

EvalConfig parse_eval(const json& j, physics::SystemKind kind) {
  EvalConfig e;
  e.rollout = evaluation::RolloutConfig::defaults_for(kind);
  if (j.is_null()) return e;
  Block b(j, "eval");
  b.read("n_init", e.n_init);
  b.read("horizon", e.rollout.horizon);
  b.read("dt", e.rollout.dt);
  b.read("record_every", e.rollout.record_every);
  b.read("targets", e.targets);
  b.finish();
  return e;
}

}  // namespace

std::uint64_t RunConfig::data_seed() const { return derive_seed(seed, 1); }
std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, 2); }
std::uint64_t RunConfig::train_seed() const { return derive_seed(seed, 3); }
std::uint64_t RunConfig::eval_seed() const { return derive_seed(seed, 4); }

void RunConfig::reseed(std::uint64_t s) {
  seed = s;
  data.seed = data_seed();
  train.seed = train_seed();
}

void RunConfig::validate() const {
  system.validate();
  if (data.n_traj == 0 || data.points == 0) throw ConfigError("data: n_traj and points must be >= 1");
  if (!(data.dt > 0.0) || data.record_every == 0) throw ConfigError("data: dt must be positive, record_every >= 1");
  model.validate();
  if (model.type_vocab != system.type_vocab) throw ConfigError("model: type vocabulary differs from system");
  train.validate();
  eval.rollout.validate();
  if (eval.n_init < 2) throw ConfigError("eval: n_init must be >= 2");
  for (std::size_t n : eval.targets) {
    if (n == 0) throw ConfigError("eval: target sizes must be >= 1");
    if (model.variant == models::Variant::Node && n != system.n) {
      throw TransductiveError("eval: NODE cannot be evaluated on " + std::to_string(n) +
                              " particles (trained on " + std::to_string(system.n) + ")");
    }
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig parse_config(const json& j) {
  Block b(j, "config");
  int version = 0;
  b.read("version", version);
  if (version != kConfigVersion) {
    throw ConfigError("config: version must be " + std::to_string(kConfigVersion));
  }
  if (!b.has("system")) throw ConfigError("config: missing 'system' block");
  RunConfig c;
  c.system = parse_system(b.sub("system"));
  const auto opt = [&](const char* key) -> const json& {
    static const json null_json;
    return b.has(key) ? b.sub(key) : null_json;
  };
  c.data = parse_data(opt("data"), c.system.kind);
  c.model = parse_model(opt("model"), c.system);
  c.train = parse_train(opt("train"));
  c.eval = parse_eval(opt("eval"), c.system.kind);
  b.read("seed", c.seed);
  b.read("output_dir", c.output_dir);
  b.finish();
  c.reseed(c.seed);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(io::read_json(path)); }

json to_json(const RunConfig& c) {
  const auto& s = c.system;
  json sys{{"kind", physics::to_string(s.kind)}, {"n", s.n}, {"masses", s.masses},
           {"types", s.types}, {"type_vocab", s.type_vocab}};
  if (s.kind == physics::SystemKind::Pendulum) {
    sys["lengths"] = s.lengths;
    sys["gravity"] = s.gravity;
  } else {
    sys["rest_length"] = s.rest_length;
    sys["stiffness"] = s.stiffness;
    sys["init_velocity"] = s.init_velocity;
  }
  return json{{"version", kConfigVersion},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"system", std::move(sys)},
              {"data",
               {{"n_traj", c.data.n_traj}, {"points", c.data.points}, {"dt", c.data.dt},
                {"record_every", c.data.record_every}}},
              {"model",
               {{"variant", models::to_string(c.model.variant)}, {"embed_dim", c.model.embed_dim},
                {"hidden", c.model.hidden}, {"mp_layers", c.model.mp_layers},
                {"external_field", c.model.external_field}, {"node_hidden", c.model.node_hidden}}},
              {"train",
               {{"lr", c.train.lr}, {"batch", c.train.batch}, {"max_epochs", c.train.max_epochs},
                {"stop_window", c.train.stop_window}, {"stop_threshold", c.train.stop_threshold}}},
              {"eval",
               {{"n_init", c.eval.n_init}, {"horizon", c.eval.rollout.horizon}, {"dt", c.eval.rollout.dt},
                {"record_every", c.eval.rollout.record_every}, {"targets", c.eval.targets}}}};
}

}  // namespace gnode::cli
