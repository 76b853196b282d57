#include "gnode/cli/commands.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

#include "gnode/io/io.hpp"
#include "gnode/num/error.hpp"
#include "gnode/parallel.hpp"

namespace gnode::cli {

using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const SingularError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  return 1;
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

// Writes `text` and returns its checksum.
std::string put(const fs::path& path, const std::string& text) {
  io::write_text(path, text);
  return io::checksum_hex(text);
}

io::Checkpoint load_checkpoint(const Paths& paths) {
  return io::checkpoint_from_json(io::read_json(paths.checkpoint_path()));
}

void check_model_matches(const RunConfig& cfg, const io::Checkpoint& ckpt) {
  if (ckpt.config.variant != cfg.model.variant) {
    throw ConfigError("checkpoint holds a " + models::to_string(ckpt.config.variant) + " model, config asks for " +
                      models::to_string(cfg.model.variant));
  }
}

}  // namespace

void cmd_generate(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  cfg.validate();
  ensure_dir(paths.out);
  log << "generating " << cfg.data.n_traj << " " << physics::to_string(cfg.system.kind) << "-" << cfg.system.n
      << " trajectories x " << cfg.data.points << " samples\n";
  const auto ds = training::generate_dataset(cfg.system, cfg.data);
  const fs::path file = paths.dataset_path();
  const std::string sum = put(file, io::dump(io::to_json(ds)));
  const json manifest{{"version", io::kFormatVersion},
                      {"seed", cfg.seed},
                      {"seeds",
                       {{"data", cfg.data_seed()},
                        {"init", cfg.init_seed()},
                        {"train", cfg.train_seed()},
                        {"eval", cfg.eval_seed()}}},
                      {"config", to_json(cfg)},
                      {"samples", ds.samples.size()},
                      {"train", ds.train.size()},
                      {"validation", ds.validation.size()},
                      {"files", {{file.filename().string(), sum}}}};
  io::write_json(paths.out / kManifestFile, manifest);
  log << "wrote " << file.string() << " (" << ds.samples.size() << " samples, checksum " << sum << ")\n";
}

void cmd_train(const RunConfig& cfg, const Paths& paths, bool resume, std::ostream& log) {
  cfg.validate();
  ensure_dir(paths.out);
  const auto ds = io::dataset_from_json(io::read_json(paths.dataset_path()));
  if (ds.spec.kind != cfg.system.kind) {
    throw ConfigError("dataset holds a " + physics::to_string(ds.spec.kind) + " system, config asks for " +
                      physics::to_string(cfg.system.kind));
  }
  io::Checkpoint ckpt;
  ckpt.config = cfg.model;
  ckpt.trained_on = ds.spec;
  ckpt.init_seed = cfg.init_seed();
  models::Model model(cfg.model, cfg.init_seed());
  training::TrainState state;
  if (resume) {
    const auto prev = load_checkpoint(paths);
    check_model_matches(cfg, prev);
    if (!(prev.config == cfg.model)) throw ConfigError("resume: checkpoint architecture differs from config");
    if (!prev.resume) throw ConfigError("resume: checkpoint has no training state");
    state = *prev.resume;
    ckpt.init_seed = prev.init_seed;
    log << "resuming at epoch " << state.epoch << "\n";
  } else {
    state = training::TrainState::fresh(model);
  }
  const std::size_t every = std::max<std::size_t>(1, cfg.train.max_epochs / 20);
  const auto report = training::train(model, ds, cfg.train, state, [&](std::size_t e, double tr, double va) {
    if (e % every == 0) log << "epoch " << e << "  train " << tr << "  val " << va << "\n";
  });
  ckpt.params = model.params();
  ckpt.resume = state;
  io::write_json(paths.checkpoint_path(), io::to_json(ckpt));
  io::write_json(paths.out / kTrainReportFile, io::to_json(report));
  io::write_text(paths.out / kLossCurveFile, io::loss_curve_csv(report));
  log << "stopped after " << report.epochs << " epochs (" << report.stop_reason << "), best val loss "
      << report.best_loss << " at epoch " << report.best_epoch << "\n";
}

void cmd_evaluate(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  cfg.validate();
  ensure_dir(paths.out);
  const auto ckpt = load_checkpoint(paths);
  check_model_matches(cfg, ckpt);
  const auto model = ckpt.model();
  std::vector<std::size_t> targets = cfg.eval.targets;
  if (targets.empty()) targets.push_back(ckpt.trained_on.n);

  std::map<std::size_t, evaluation::AggregateReport> reports;
  if (model.is_graph()) {
    reports = evaluation::zero_shot_eval(model, ckpt.trained_on, targets, cfg.eval.n_init, cfg.eval_seed(),
                                         cfg.eval.rollout);
  } else {
    for (std::size_t n : targets) {
      if (n != ckpt.trained_on.n) {
        throw TransductiveError("NODE checkpoint is tied to " + std::to_string(ckpt.trained_on.n) + " particles");
      }
    }
    reports[ckpt.trained_on.n] =
        evaluation::evaluate_ensemble(model, ckpt.trained_on, cfg.eval.n_init, cfg.eval_seed(), cfg.eval.rollout)
            .report;
  }
  json summary = json::object();
  for (const auto& [n, r] : reports) {
    const fs::path dir = paths.out / kEvalDir / ("n" + std::to_string(n));
    for (const char* m : {"re", "ee", "me"}) io::write_text(dir / (std::string(m) + ".csv"), io::metric_csv(r, m));
    io::write_json(dir / "report.json", io::to_json(r));
    summary[std::to_string(n)] = {{"re", r.re_gm}, {"ee", r.ee_gm}, {"me", r.me_gm},
                                  {"count", r.count}, {"blow_ups", r.blow_ups}};
    log << "n=" << n << "  RE " << r.re_gm << "  EE " << r.ee_gm << "  ME " << r.me_gm << "  blow-ups "
        << r.blow_ups << "/" << r.count << "\n";
  }
  io::write_json(paths.out / kEvalDir / "summary.json",
                 json{{"variant", models::to_string(model.variant())},
                      {"trained_on", ckpt.trained_on.n},
                      {"n_init", cfg.eval.n_init},
                      {"seed", cfg.eval_seed()},
                      {"geometric_mean", summary}});
}

void cmd_rollout(const RunConfig& cfg, const Paths& paths, bool oracle, std::ostream& log) {
  cfg.validate();
  ensure_dir(paths.out);
  physics::SystemSpec spec = cfg.system;
  if (!cfg.eval.targets.empty()) spec = spec.resized(cfg.eval.targets.front());
  const auto init = physics::random_initial_state(spec, derive_seed(cfg.eval_seed(), 0));
  const auto& rc = cfg.eval.rollout;
  const auto truth = physics::simulate(spec, init, rc.dt, rc.n_steps(), rc.record_every);
  physics::Trajectory pred;
  std::string source;
  if (oracle) {
    pred = evaluation::rollout([&spec](const physics::State& s) { return physics::ground_truth_acceleration(spec, s); },
                               spec, init, rc);
    source = "ground_truth";
  } else {
    const auto ckpt = load_checkpoint(paths);
    check_model_matches(cfg, ckpt);
    pred = evaluation::rollout(ckpt.model(), spec, init, rc);
    source = models::to_string(ckpt.config.variant);
  }
  const auto m = evaluation::metrics(pred, truth, spec);
  io::write_json(paths.out / kRolloutFile, json{{"version", io::kFormatVersion},
                                                {"source", source},
                                                {"seed", cfg.eval_seed()},
                                                {"predicted", io::to_json(pred)},
                                                {"truth", io::to_json(truth)},
                                                {"metrics", io::to_json(m)}});
  log << "rollout (" << source << ") " << pred.states.size() << "/" << truth.states.size() << " states"
      << (pred.blew_up ? ", blew up" : "") << "; RE " << m.re_gm << "  EE " << m.ee_gm << "  ME " << m.me_gm << "\n";
}

void cmd_report(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  std::ostringstream md;
  md << "# Run report\n\n";
  md << "system: " << physics::to_string(cfg.system.kind) << "-" << cfg.system.n << ", model: "
     << models::to_string(cfg.model.variant) << ", seed: " << cfg.seed << "\n\n";
  bool any = false;
  if (fs::exists(paths.out / kTrainReportFile)) {
    const auto r = io::read_json(paths.out / kTrainReportFile);
    md << "## Training\n\n| epochs | best epoch | best val loss | stop | wall s |\n|---|---|---|---|---|\n";
    md << "| " << r.at("epochs") << " | " << r.at("best_epoch") << " | " << r.at("best_loss") << " | "
       << r.at("stop_reason").get<std::string>() << " | " << std::fixed << std::setprecision(1)
       << r.at("wall_seconds").get<double>() << " |\n\n";
    md.unsetf(std::ios::fixed);
    md << std::setprecision(6);
    any = true;
  }
  if (fs::exists(paths.out / kEvalDir / "summary.json")) {
    const auto s = io::read_json(paths.out / kEvalDir / "summary.json");
    md << "## Evaluation (geometric means over " << s.at("n_init") << " rollouts)\n\n";
    md << "| n | RE | EE | ME | blow-ups |\n|---|---|---|---|---|\n";
    for (const auto& [n, v] : s.at("geometric_mean").items()) {
      md << "| " << n << " | " << v.at("re") << " | " << v.at("ee") << " | " << v.at("me") << " | "
         << v.at("blow_ups") << "/" << v.at("count") << " |\n";
    }
    md << "\n";
    any = true;
  }
  if (!any) throw IoError("nothing to report in '" + paths.out.string() + "' (run train or evaluate first)");
  io::write_text(paths.out / kReportFile, md.str());
  log << md.str();
}

}  // namespace gnode::cli
