#include "gnode/io/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gnode/num/error.hpp"

namespace gnode::io {

using num::Matrix;

namespace {

const json& req(const json& j, const char* key) {
  if (!j.is_object()) throw ConfigError(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ConfigError("expected a number, got " + j.dump());
  return j.get<double>();
}

json number_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json doubles(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(number_json(x));
  return a;
}

std::vector<double> doubles_from(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(number(x));
  return out;
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return req(j, key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json flat(const Matrix& m) {
  return json{{"shape", {m.rows(), m.cols()}}, {"data", doubles(m.vec())}};
}

Matrix flat_from(const json& j) {
  const auto shape = get_as<std::vector<std::size_t>>(j, "shape");
  if (shape.size() != 2) throw ConfigError("tensor shape must have two entries");
  const auto data = doubles_from(req(j, "data"));
  if (data.size() != shape[0] * shape[1]) throw ConfigError("tensor data does not match its shape");
  Matrix m(shape[0], shape[1]);
  m.vec() = data;
  return m;
}

json indices(const std::vector<std::size_t>& v) { return json(v); }

}  // namespace

json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(number_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("expected a nested array matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c]);
  }
  return m;
}

json to_json(const physics::SystemSpec& s) {
  return json{{"kind", physics::to_string(s.kind)},
              {"n", s.n},
              {"masses", s.masses},
              {"lengths", s.lengths},
              {"rest_length", s.rest_length},
              {"stiffness", s.stiffness},
              {"gravity", s.gravity},
              {"dim", s.dim},
              {"types", s.types},
              {"type_vocab", s.type_vocab},
              {"init_velocity", s.init_velocity}};
}

physics::SystemSpec spec_from_json(const json& j) {
  physics::SystemSpec s;
  s.kind = physics::system_kind_from_string(get_as<std::string>(j, "kind"));
  s.n = get_as<std::size_t>(j, "n");
  s.masses = get_as<std::vector<double>>(j, "masses");
  s.lengths = get_as<std::vector<double>>(j, "lengths");
  s.rest_length = get_as<double>(j, "rest_length");
  s.stiffness = get_as<double>(j, "stiffness");
  s.gravity = get_as<double>(j, "gravity");
  s.dim = get_as<std::size_t>(j, "dim");
  s.types = get_as<std::vector<std::uint32_t>>(j, "types");
  s.type_vocab = get_as<std::size_t>(j, "type_vocab");
  s.init_velocity = get_as<double>(j, "init_velocity");
  s.validate();
  return s;
}

json to_json(const physics::State& s) {
  return json{{"t", number_json(s.t)}, {"q", to_json(s.q)}, {"qdot", to_json(s.qdot)}};
}

physics::State state_from_json(const json& j) {
  return {matrix_from_json(req(j, "q")), matrix_from_json(req(j, "qdot")), number(req(j, "t"))};
}

json to_json(const physics::Trajectory& traj) {
  json states = json::array();
  for (const auto& s : traj.states) states.push_back(to_json(s));
  json j{{"version", kFormatVersion},
         {"spec", to_json(traj.spec)},
         {"dt_record", traj.dt_record},
         {"blew_up", traj.blew_up},
         {"blow_up_step", traj.blow_up_step ? json(*traj.blow_up_step) : json(nullptr)},
         {"states", std::move(states)}};
  return j;
}

physics::Trajectory trajectory_from_json(const json& j) {
  physics::Trajectory t;
  t.spec = spec_from_json(req(j, "spec"));
  t.dt_record = get_as<double>(j, "dt_record");
  t.blew_up = get_as<bool>(j, "blew_up");
  const auto& step = req(j, "blow_up_step");
  if (!step.is_null()) t.blow_up_step = step.get<std::size_t>();
  for (const auto& s : req(j, "states")) t.states.push_back(state_from_json(s));
  return t;
}

json to_json(const training::Dataset& ds) {
  json samples = json::array();
  for (const auto& s : ds.samples) {
    samples.push_back(json{{"trajectory", s.trajectory},
                           {"time_index", s.time_index},
                           {"q", to_json(s.q)},
                           {"qdot", to_json(s.qdot)},
                           {"target", to_json(s.target)}});
  }
  return json{{"version", kFormatVersion},
              {"spec", to_json(ds.spec)},
              {"dt_record", ds.dt_record},
              {"samples", std::move(samples)},
              {"train", indices(ds.train)},
              {"validation", indices(ds.validation)}};
}

training::Dataset dataset_from_json(const json& j) {
  training::Dataset ds;
  ds.spec = spec_from_json(req(j, "spec"));
  ds.dt_record = get_as<double>(j, "dt_record");
  for (const auto& s : req(j, "samples")) {
    ds.samples.push_back(training::Sample{matrix_from_json(req(s, "q")), matrix_from_json(req(s, "qdot")),
                                          matrix_from_json(req(s, "target")),
                                          get_as<std::size_t>(s, "trajectory"),
                                          get_as<std::size_t>(s, "time_index")});
  }
  ds.train = get_as<std::vector<std::size_t>>(j, "train");
  ds.validation = get_as<std::vector<std::size_t>>(j, "validation");
  for (const auto* part : {&ds.train, &ds.validation})
    for (std::size_t i : *part)
      if (i >= ds.samples.size()) throw ConfigError("dataset split index out of range");
  return ds;
}

json to_json(const num::ParamSet& params, std::uint64_t init_seed) {
  json tensors = json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    json t = flat(params[i]);
    t["name"] = params.name(i);
    tensors.push_back(std::move(t));
  }
  return json{{"seed", init_seed}, {"tensors", std::move(tensors)}};
}

num::ParamSet params_from_json(const json& j) {
  num::ParamSet p;
  for (const auto& t : req(j, "tensors")) p.add(get_as<std::string>(t, "name"), flat_from(t));
  return p;
}

json to_json(const models::ModelConfig& c) {
  return json{{"variant", models::to_string(c.variant)},
              {"dim", c.dim},
              {"type_vocab", c.type_vocab},
              {"embed_dim", c.embed_dim},
              {"hidden", c.hidden},
              {"mp_layers", c.mp_layers},
              {"external_field", c.external_field},
              {"node_hidden", c.node_hidden},
              {"system_size", c.system_size}};
}

models::ModelConfig model_config_from_json(const json& j) {
  models::ModelConfig c;
  c.variant = models::variant_from_string(get_as<std::string>(j, "variant"));
  c.dim = get_as<std::size_t>(j, "dim");
  c.type_vocab = get_as<std::size_t>(j, "type_vocab");
  c.embed_dim = get_as<std::size_t>(j, "embed_dim");
  c.hidden = get_as<std::size_t>(j, "hidden");
  c.mp_layers = get_as<std::size_t>(j, "mp_layers");
  c.external_field = get_as<bool>(j, "external_field");
  c.node_hidden = get_as<std::size_t>(j, "node_hidden");
  c.system_size = get_as<std::size_t>(j, "system_size");
  c.validate();
  return c;
}

json to_json(const training::TrainState& s) {
  json m = json::array(), v = json::array();
  for (const auto& x : s.adam.m) m.push_back(flat(x));
  for (const auto& x : s.adam.v) v.push_back(flat(x));
  return json{{"epoch", s.epoch},
              {"current", to_json(s.current, 0)},
              {"best", to_json(s.best, 0)},
              {"best_loss", number_json(s.best_loss)},
              {"best_epoch", s.best_epoch},
              {"adam",
               {{"beta1", s.adam.config.beta1},
                {"beta2", s.adam.config.beta2},
                {"epsilon", s.adam.config.epsilon},
                {"step", s.adam.step},
                {"m", std::move(m)},
                {"v", std::move(v)}}},
              {"train_loss", doubles(s.train_loss)},
              {"val_loss", doubles(s.val_loss)},
              {"best_history", doubles(s.best_history)}};
}

training::TrainState train_state_from_json(const json& j) {
  training::TrainState s;
  s.epoch = get_as<std::size_t>(j, "epoch");
  s.current = params_from_json(req(j, "current"));
  s.best = params_from_json(req(j, "best"));
  const double best = number(req(j, "best_loss"));
  s.best_loss = std::isnan(best) ? std::numeric_limits<double>::infinity() : best;
  s.best_epoch = get_as<std::size_t>(j, "best_epoch");
  const auto& a = req(j, "adam");
  s.adam.config = {get_as<double>(a, "beta1"), get_as<double>(a, "beta2"), get_as<double>(a, "epsilon")};
  s.adam.step = get_as<std::uint64_t>(a, "step");
  for (const auto& x : req(a, "m")) s.adam.m.push_back(flat_from(x));
  for (const auto& x : req(a, "v")) s.adam.v.push_back(flat_from(x));
  if (s.adam.m.size() != s.current.size() || s.adam.v.size() != s.current.size()) {
    throw ConfigError("resume state: optimizer moments do not match parameters");
  }
  s.train_loss = doubles_from(req(j, "train_loss"));
  s.val_loss = doubles_from(req(j, "val_loss"));
  s.best_history = doubles_from(req(j, "best_history"));
  return s;
}

json to_json(const Checkpoint& c) {
  json j{{"version", kFormatVersion},
         {"model", to_json(c.config)},
         {"params", to_json(c.params, c.init_seed)},
         {"trained_on", to_json(c.trained_on)},
         {"param_checksum", c.params.checksum()}};
  j["resume"] = c.resume ? to_json(*c.resume) : json(nullptr);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (get_as<int>(j, "version") != kFormatVersion) throw ConfigError("unsupported checkpoint version");
  Checkpoint c;
  c.config = model_config_from_json(req(j, "model"));
  c.params = params_from_json(req(j, "params"));
  c.init_seed = get_as<std::uint64_t>(req(j, "params"), "seed");
  c.trained_on = spec_from_json(req(j, "trained_on"));
  if (get_as<std::uint64_t>(j, "param_checksum") != c.params.checksum()) {
    throw ConfigError("checkpoint: parameter checksum mismatch");
  }
  if (const auto& r = req(j, "resume"); !r.is_null()) c.resume = train_state_from_json(r);
  // Validates names and shapes against the architecture.
  (void)c.model();
  return c;
}

json to_json(const training::TrainReport& r) {
  return json{{"epochs", r.epochs},
              {"best_epoch", r.best_epoch},
              {"best_loss", number_json(r.best_loss)},
              {"stop_reason", r.stop_reason},
              {"wall_seconds", r.wall_seconds},
              {"train_loss", doubles(r.train_loss)},
              {"val_loss", doubles(r.val_loss)}};
}

json to_json(const evaluation::MetricSeries& m) {
  return json{{"trajectory", m.trajectory},
              {"blew_up", m.blew_up},
              {"t", doubles(m.t)},
              {"re", doubles(m.re)},
              {"ee", doubles(m.ee)},
              {"me", doubles(m.me)},
              {"geometric_mean", {{"re", number_json(m.re_gm)}, {"ee", number_json(m.ee_gm)},
                                  {"me", number_json(m.me_gm)}}}};
}

json to_json(const evaluation::AggregateReport& r) {
  auto band = [](const evaluation::Band& b) {
    return json{{"mean", doubles(b.mean)}, {"lo", doubles(b.lo)}, {"hi", doubles(b.hi)}};
  };
  return json{{"count", r.count},
              {"blow_ups", r.blow_ups},
              {"band", "2.5/97.5 percentile, geometric mean"},
              {"t", doubles(r.t)},
              {"re", band(r.re)},
              {"ee", band(r.ee)},
              {"me", band(r.me)},
              {"geometric_mean", {{"re", number_json(r.re_gm)}, {"ee", number_json(r.ee_gm)},
                                  {"me", number_json(r.me_gm)}}}};
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string loss_curve_csv(const training::TrainReport& r) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
    out += std::to_string(e) + "," + fmt(r.train_loss[e]) + "," + fmt(r.val_loss.at(e)) + "\n";
  }
  return out;
}

std::string metric_csv(const evaluation::AggregateReport& r, const std::string& metric) {
  const evaluation::Band* b = metric == "re"   ? &r.re
                              : metric == "ee" ? &r.ee
                              : metric == "me" ? &r.me
                                               : nullptr;
  if (!b) throw ConfigError("unknown metric '" + metric + "' (re, ee, me)");
  std::string out = "t,metric,lo,hi\n";
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    out += fmt(r.t[k]) + "," + fmt(b->mean[k]) + "," + fmt(b->lo[k]) + "," + fmt(b->hi[k]) + "\n";
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, dump(j)); }

std::string dump(const json& j) { return j.dump(1) + "\n"; }

std::string checksum_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace gnode::io
