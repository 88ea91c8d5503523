#include "rsb/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string timestamp_line() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "# generated_at %Y-%m-%dT%H:%M:%SZ\n", &tm);
  return buf;
}

CommandResult emit(const fs::path& path, const std::string& body, bool timestamp) {
  CommandResult r;
  r.csv_path = path;
  r.csv = (timestamp ? timestamp_line() : std::string()) + body;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << r.csv;
  return r;
}

fs::path out_dir(const ExperimentConfig& config, const CommandOptions& options) {
  return options.out_dir.empty() ? fs::path(config.output_dir) : options.out_dir;
}

std::vector<std::uint64_t> seeds_of(const ExperimentConfig& config, const CommandOptions& options) {
  if (options.seed) return {*options.seed};
  return config.seeds;
}

fs::path seed_dir(const fs::path& root, std::uint64_t seed) {
  return root / ("seed_" + std::to_string(seed));
}

bool bridge_needs_predictor(const TrainConfig& tc) {
  bool for_targets = tc.strategy != TrainingStrategy::Vanilla && !tc.oracle_posterior;
  const ConditioningFlags f = flags(tc.conditioning);
  bool for_inputs = (f.endpoint_is_x_star || f.condition_is_x_star);
  return for_targets || for_inputs;
}

std::string method_label(const Checkpoint& bridge) {
  std::string cond = bridge.meta.value("conditioning", "M1");
  if (cond != "M1") return cond;
  return bridge.meta.value("strategy", "joint");
}

std::string ablation_label(TrainingStrategy s) {
  return s == TrainingStrategy::Vanilla ? "no" : to_string(s);
}

void write_model(const fs::path& bridge_path, Checkpoint& bridge, const fs::path& predictor_path) {
  if (needs_predictor_at_inference(parse_conditioning(bridge.meta.value("conditioning", "M1"))))
    bridge.meta["predictor_file"] =
        fs::relative(predictor_path, bridge_path.parent_path()).generic_string();
  write_checkpoint(bridge_path, bridge);
}

TrainedModel as_model(const std::string& method, std::uint64_t seed, const Checkpoint& bridge,
                      const Checkpoint& predictor) {
  TrainedModel m{method, seed, bridge, std::nullopt};
  if (needs_predictor_at_inference(parse_conditioning(bridge.meta.value("conditioning", "M1"))))
    m.predictor = predictor;
  return m;
}

}  // namespace

std::string csv_body(const std::string& csv) {
  if (!csv.empty() && csv[0] == '#') {
    auto nl = csv.find('\n');
    return nl == std::string::npos ? std::string() : csv.substr(nl + 1);
  }
  return csv;
}

EvalSet make_eval_set(const ExperimentConfig& config, std::uint64_t seed) {
  Rng root = Rng(seed).split("eval");
  Rng pair_rng = root.split("pairs");
  Rng ref_rng = root.split("reference");
  const int d = data_dim(config.task);
  const int m = measurement_dim(config.task);
  const int n = config.eval.size;
  EvalSet e;
  e.x.resize(d, n);
  e.y.resize(m, n);
  e.x_star.resize(d, n);
  for (int j = 0; j < n; ++j) {
    TrainingPair p = sample_pair(config.task, pair_rng);
    e.x.col(j) = p.x;
    e.y.col(j) = p.y;
    e.x_star.col(j) = p.x_star;
  }
  e.reference = config.eval.reference_size > 0
                    ? clean_sampler(config.task, config.eval.reference_size, ref_rng)
                    : e.x;
  return e;
}

Checkpoint train_predictor_for_seed(const ExperimentConfig& config, std::uint64_t seed,
                                    std::vector<TrainingLogRow>* log) {
  TrainConfig tc = config.train;
  tc.seed = seed;
  TrainResult r =
      train_predictor(config.task, config.predictor_spec(), tc, Rng(seed).split("predictor"));
  if (log) *log = r.log;
  return r.checkpoint;
}

Checkpoint train_bridge_for_seed(const ExperimentConfig& config, std::uint64_t seed,
                                 TrainingStrategy strategy, ConditioningStrategy conditioning,
                                 const Checkpoint& predictor, std::vector<TrainingLogRow>* log) {
  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.strategy = strategy;
  tc.conditioning = conditioning;
  tc.validate();
  const Checkpoint* p = bridge_needs_predictor(tc) ? &predictor : nullptr;
  TrainResult r = train(config.task, config.bridge_spec(), tc, config.schedule, config.sampler, p,
                        Rng(seed).split("bridge"));
  if (log) *log = r.log;
  return r.checkpoint;
}

Rng evaluation_stream(std::uint64_t seed, int n_steps) {
  return Rng(seed).split("sample").split("steps_" + std::to_string(n_steps));
}

EvalReport evaluate_model(const ExperimentConfig& config, const TrainedModel& model,
                          const EvalSet& eval, int n_steps) {
  SamplerConfig sc = config.sampler;
  sc.n_steps = n_steps;
  Rng rng = evaluation_stream(model.seed, n_steps);
  BatchTrajectory tr = run_bridge(model.bridge, model.predictor ? &*model.predictor : nullptr,
                                  eval.y, sc, config.schedule, rng, false);
  return evaluate(tr, eval.x, eval.reference);
}

TrainedModel load_trained_model(const ExperimentConfig& config, const fs::path& path) {
  Checkpoint bridge = read_checkpoint(path);
  if (bridge.role != "bridge")
    throw CheckpointError(path.string() + " is not a bridge checkpoint");
  if (!(bridge.spec == config.bridge_spec()))
    throw CheckpointError(path.string() + " does not match the configured model");
  const auto& s = bridge.meta.value("schedule", nlohmann::json::object());
  if (s.value("c", -1.0) != config.schedule.c || s.value("k", -1.0) != config.schedule.k ||
      s.value("t_eps", -1.0) != config.schedule.t_eps)
    throw CheckpointError(path.string() + " was trained with a different noise schedule");

  TrainedModel m;
  m.method = method_label(bridge);
  m.seed = bridge.meta.value("seed", std::uint64_t{0});
  ConditioningStrategy cs = parse_conditioning(bridge.meta.value("conditioning", "M1"));
  if (needs_predictor_at_inference(cs)) {
    fs::path pp = path.parent_path() / bridge.meta.value("predictor_file", "predictor.json");
    Checkpoint pred = read_checkpoint(pp);
    if (checkpoint_hash(pred) != bridge.meta.value("predictor_hash", ""))
      throw CheckpointError(pp.string() + " is not the predictor this bridge was trained with");
    if (!(pred.spec == config.predictor_spec()))
      throw CheckpointError(pp.string() + " does not match the configured predictor");
    m.predictor = std::move(pred);
  }
  m.bridge = std::move(bridge);
  return m;
}

std::string sweep_csv(const ExperimentConfig& config, const std::vector<TrainedModel>& models,
                      const std::vector<int>& steps) {
  std::ostringstream os;
  os << "schema,method,seed,steps,mse,si_sdr_db,w2,energy_distance,cov_regularized\n";
  std::uint64_t cached_seed = 0;
  std::optional<EvalSet> eval;
  for (const TrainedModel& m : models) {
    if (!eval || cached_seed != m.seed) {
      eval = make_eval_set(config, m.seed);
      cached_seed = m.seed;
    }
    for (int n : steps) {
      EvalReport r = evaluate_model(config, m, *eval, n);
      os << kSweepSchema << ',' << m.method << ',' << m.seed << ',' << n << ',' << num(r.mse) << ','
         << num(r.si_sdr_db) << ',' << num(r.w2) << ',' << num(r.energy_distance) << ','
         << int(r.covariance_regularized) << '\n';
    }
  }
  return os.str();
}

std::string exposure_csv(const ExperimentConfig& config, const std::vector<TrainedModel>& models) {
  std::ostringstream os;
  os << "schema,method,seed,step,t,mean_error,mse,w2\n";
  const int n = config.sampler.n_steps;
  std::uint64_t cached_seed = 0;
  std::optional<EvalSet> eval;
  for (const TrainedModel& m : models) {
    if (!eval || cached_seed != m.seed) {
      eval = make_eval_set(config, m.seed);
      cached_seed = m.seed;
    }
    SamplerConfig sc = config.sampler;
    Rng rng = evaluation_stream(m.seed, n);
    BatchTrajectory tr = run_bridge(m.bridge, m.predictor ? &*m.predictor : nullptr, eval->y, sc,
                                    config.schedule, rng, false);
    std::vector<double> errors = per_step_errors(tr, eval->x);
    const double d = double(eval->x.rows());
    for (std::size_t i = 0; i < errors.size(); ++i) {
      os << kExposureSchema << ',' << m.method << ',' << m.seed << ',' << i + 1 << ','
         << num(tr.times[i]) << ',' << num(errors[i]) << ',' << num(errors[i] / d) << ','
         << num(moment_w2(tr.predictions[i], eval->reference)) << '\n';
    }
  }
  return os.str();
}

std::string summary_csv(const ExperimentConfig& config, const std::vector<TrainedModel>& models,
                        const char* schema, const char* label_column) {
  std::ostringstream os;
  os << "schema," << label_column << ",seed,steps,mse,si_sdr_db,w2,energy_distance\n";
  const int n = config.sampler.n_steps;
  std::uint64_t cached_seed = 0;
  std::optional<EvalSet> eval;
  for (const TrainedModel& m : models) {
    if (!eval || cached_seed != m.seed) {
      eval = make_eval_set(config, m.seed);
      cached_seed = m.seed;
    }
    EvalReport r = evaluate_model(config, m, *eval, n);
    os << schema << ',' << m.method << ',' << m.seed << ',' << n << ',' << num(r.mse) << ','
       << num(r.si_sdr_db) << ',' << num(r.w2) << ',' << num(r.energy_distance) << '\n';
  }
  return os.str();
}

std::string train_log_csv(const std::vector<TrainingLogRow>& log) {
  std::ostringstream os;
  os << "schema,epoch,train_loss,val_mse,val_w2,ema_best,wall_time\n";
  for (const TrainingLogRow& r : log)
    os << kTrainLogSchema << ',' << r.epoch << ',' << num(r.train_loss) << ',' << num(r.val_mse)
       << ',' << num(r.val_w2) << ',' << int(r.ema_best) << ',' << num(r.wall_time) << '\n';
  return os.str();
}

std::string eval_report_csv(const std::string& method, std::uint64_t seed, int n_steps,
                            const EvalReport& r) {
  std::ostringstream os;
  os << "schema,method,seed,steps,mse,si_sdr_db,w2,energy_distance,cov_regularized\n"
     << kEvalSchema << ',' << method << ',' << seed << ',' << n_steps << ',' << num(r.mse) << ','
     << num(r.si_sdr_db) << ',' << num(r.w2) << ',' << num(r.energy_distance) << ','
     << int(r.covariance_regularized) << '\n';
  return os.str();
}

std::string per_step_csv(const std::vector<double>& times, const std::vector<double>& errors) {
  std::ostringstream os;
  os << "schema,step,t,mean_error\n";
  for (std::size_t i = 0; i < errors.size(); ++i)
    os << kPerStepSchema << ',' << i + 1 << ',' << num(times[i]) << ',' << num(errors[i]) << '\n';
  return os.str();
}

CommandResult cmd_train(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path root = out_dir(config, options);
  std::string evals;
  std::vector<std::string> notes;
  for (std::uint64_t seed : seeds_of(config, options)) {
    const fs::path dir = seed_dir(root, seed);
    fs::create_directories(dir);
    std::vector<TrainingLogRow> plog, blog;
    Checkpoint predictor;
    bool have_predictor = bridge_needs_predictor(config.train);
    if (have_predictor) {
      predictor = train_predictor_for_seed(config, seed, &plog);
      write_checkpoint(dir / "predictor.json", predictor);
      emit(dir / "predictor_log.csv", train_log_csv(plog), false);
      notes.push_back("seed " + std::to_string(seed) + " predictor " + checkpoint_hash(predictor));
    }
    Checkpoint bridge = train_bridge_for_seed(config, seed, config.train.strategy,
                                              config.train.conditioning, predictor, &blog);
    write_model(dir / "bridge.json", bridge, dir / "predictor.json");
    emit(dir / "train_log.csv", train_log_csv(blog), false);
    notes.push_back("seed " + std::to_string(seed) + " bridge " + checkpoint_hash(bridge));

    TrainedModel m = as_model(method_label(bridge), seed, bridge, predictor);
    EvalReport r = evaluate_model(config, m, make_eval_set(config, seed), config.sampler.n_steps);
    std::string row = eval_report_csv(m.method, seed, config.sampler.n_steps, r);
    evals += evals.empty() ? row : row.substr(row.find('\n') + 1);
  }
  CommandResult res = emit(root / "eval.csv", evals, options.timestamp);
  res.notes = std::move(notes);
  return res;
}

namespace {

std::vector<TrainedModel> models_from(const ExperimentConfig& config,
                                      const CommandOptions& options) {
  std::vector<fs::path> paths = options.checkpoints;
  if (paths.empty())
    for (std::uint64_t seed : seeds_of(config, options))
      paths.push_back(seed_dir(out_dir(config, options), seed) / "bridge.json");
  std::vector<TrainedModel> models;
  for (const fs::path& p : paths) {
    models.push_back(load_trained_model(config, p));
    if (options.seed && models.back().seed != *options.seed) models.pop_back();
  }
  if (models.empty()) throw CheckpointError("no bridge checkpoints to evaluate");
  return models;
}

}  // namespace

CommandResult cmd_sweep_steps(const ExperimentConfig& config, const CommandOptions& options) {
  std::vector<int> steps = options.steps.empty() ? config.sweep_steps : options.steps;
  for (int s : steps)
    if (s < 1) throw ConfigError("step counts must be positive");
  return emit(out_dir(config, options) / "sweep_steps.csv",
              sweep_csv(config, models_from(config, options), steps), options.timestamp);
}

CommandResult cmd_exposure_bias(const ExperimentConfig& config, const CommandOptions& options) {
  return emit(out_dir(config, options) / "exposure_bias.csv",
              exposure_csv(config, models_from(config, options)), options.timestamp);
}

CommandResult cmd_strategies(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path root = out_dir(config, options);
  std::vector<TrainedModel> models;
  std::vector<std::string> notes;
  for (std::uint64_t seed : seeds_of(config, options)) {
    const fs::path dir = seed_dir(root, seed);
    Checkpoint predictor = train_predictor_for_seed(config, seed);
    write_checkpoint(dir / "predictor.json", predictor);
    for (int k = 0; k < 5; ++k) {
      auto cs = static_cast<ConditioningStrategy>(k);
      auto strategy = flags(cs).regularized ? TrainingStrategy::Joint : TrainingStrategy::Vanilla;
      Checkpoint bridge = train_bridge_for_seed(config, seed, strategy, cs, predictor);
      const fs::path path = dir / "strategies" / (to_string(cs) + ".json");
      write_model(path, bridge, dir / "predictor.json");
      notes.push_back("seed " + std::to_string(seed) + " " + to_string(cs) + " " +
                      checkpoint_hash(bridge));
      models.push_back(as_model(to_string(cs), seed, bridge, predictor));
    }
  }
  CommandResult res = emit(root / "strategies.csv",
                           summary_csv(config, models, kStrategiesSchema, "strategy"),
                           options.timestamp);
  res.notes = std::move(notes);
  return res;
}

CommandResult cmd_ablation(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path root = out_dir(config, options);
  std::vector<TrainedModel> models;
  std::vector<std::string> notes;
  for (std::uint64_t seed : seeds_of(config, options)) {
    const fs::path dir = seed_dir(root, seed);
    Checkpoint predictor = train_predictor_for_seed(config, seed);
    write_checkpoint(dir / "predictor.json", predictor);
    for (TrainingStrategy s :
         {TrainingStrategy::Vanilla, TrainingStrategy::InputOnly, TrainingStrategy::Joint}) {
      Checkpoint bridge = train_bridge_for_seed(config, seed, s, ConditioningStrategy::M1, predictor);
      write_model(dir / "ablation" / (ablation_label(s) + ".json"), bridge, dir / "predictor.json");
      notes.push_back("seed " + std::to_string(seed) + " " + ablation_label(s) + " " +
                      checkpoint_hash(bridge));
      models.push_back(as_model(ablation_label(s), seed, bridge, predictor));
    }
  }
  CommandResult res = emit(root / "ablation.csv",
                           summary_csv(config, models, kAblationSchema, "strategy"),
                           options.timestamp);
  res.notes = std::move(notes);
  return res;
}

CommandResult cmd_dump(const ExperimentConfig& config, const CommandOptions& options) {
  if (options.count < 1) throw ConfigError("dump count must be positive");
  const std::uint64_t seed = seeds_of(config, options).front();
  Rng rng = Rng(seed).split("data").split("dump");
  const int d = data_dim(config.task);
  const int m = measurement_dim(config.task);
  std::ostringstream os;
  os << "schema,index";
  for (int i = 0; i < d; ++i) os << ",x" << i;
  for (int i = 0; i < m; ++i) os << ",y" << i;
  for (int i = 0; i < d; ++i) os << ",x_star" << i;
  os << '\n';
  for (int j = 0; j < options.count; ++j) {
    TrainingPair p = sample_pair(config.task, rng);
    os << kPairsSchema << ',' << j;
    for (int i = 0; i < d; ++i) os << ',' << num(p.x(i));
    for (int i = 0; i < m; ++i) os << ',' << num(p.y(i));
    for (int i = 0; i < d; ++i) os << ',' << num(p.x_star(i));
    os << '\n';
  }
  return emit(out_dir(config, options) / "pairs.csv", os.str(), options.timestamp);
}

}  // namespace rsb
