#include "rsb/training.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <utility>

#include "rsb/errors.hpp"
#include "rsb/metrics.hpp"

namespace rsb {

ConditioningFlags flags(ConditioningStrategy s) {
  switch (s) {
    case ConditioningStrategy::M1: return {false, false, false};
    case ConditioningStrategy::M2: return {true, false, false};
    case ConditioningStrategy::M3: return {false, true, false};
    case ConditioningStrategy::M4: return {true, true, false};
    case ConditioningStrategy::M5: return {false, false, true};
  }
  throw std::logic_error("unknown conditioning strategy");
}

bool needs_predictor_at_inference(ConditioningStrategy s) {
  ConditioningFlags f = flags(s);
  return f.endpoint_is_x_star || f.condition_is_x_star;
}

std::string to_string(TrainingStrategy s) {
  switch (s) {
    case TrainingStrategy::Vanilla: return "vanilla";
    case TrainingStrategy::InputOnly: return "input_only";
    case TrainingStrategy::Joint: return "joint";
  }
  throw std::logic_error("unknown training strategy");
}

std::string to_string(ConditioningStrategy s) {
  return "M" + std::to_string(static_cast<int>(s) + 1);
}

TrainingStrategy parse_training_strategy(std::string_view name) {
  if (name == "vanilla" || name == "no") return TrainingStrategy::Vanilla;
  if (name == "input_only") return TrainingStrategy::InputOnly;
  if (name == "joint") return TrainingStrategy::Joint;
  throw ConfigError("unknown training strategy '" + std::string(name) + "'");
}

ConditioningStrategy parse_conditioning(std::string_view name) {
  if (name.size() == 2 && name[0] == 'M' && name[1] >= '1' && name[1] <= '5')
    return static_cast<ConditioningStrategy>(name[1] - '1');
  throw ConfigError("unknown conditioning strategy '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0 || steps_per_epoch < 1 || batch_size < 1)
    throw ConfigError("train counts must be positive");
  if (patience < 0) throw ConfigError("train.patience must be non-negative");
  if (validation_size < 1) throw ConfigError("train.validation_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("train.ema_decay must lie in [0, 1)");
  if (!(weight.exponent > 0.0)) throw ConfigError("train.weight_exponent must be positive");
  if (flags(conditioning).regularized && strategy != TrainingStrategy::Joint)
    throw ConfigError("conditioning M5 requires the joint training strategy");
}

TrainingExample make_training_example(const TrainingPair& pair, const Eigen::VectorXd& endpoint,
                                      const Eigen::VectorXd& condition, double t,
                                      TrainingStrategy strategy, const NoiseSchedule& schedule,
                                      const PerturbationWeight& weight, Rng& rng) {
  BridgeCoefficients coeffs = coefficients(schedule, t);
  TrainingExample ex;
  ex.t = t;
  ex.condition = condition;
  if (strategy == TrainingStrategy::Vanilla) {
    ex.state = sample_marginal(coeffs, pair.x, endpoint, rng);
    ex.target = pair.x;
    return ex;
  }
  Eigen::VectorXd perturbed = perturbed_target(pair, t, weight);
  ex.state = sample_marginal(coeffs, perturbed, endpoint, rng);
  ex.target = strategy == TrainingStrategy::Joint ? perturbed : pair.x;
  return ex;
}

LossAndGradients training_step(const ModelParameters& params, const MlpSpec& spec,
                               const TrainingPair& pair, double t, TrainingStrategy strategy,
                               const NoiseSchedule& schedule, Rng& rng,
                               const PerturbationWeight& weight) {
  pair.validate();
  TrainingExample ex =
      make_training_example(pair, pair.y, pair.y, t, strategy, schedule, weight, rng);
  Eigen::MatrixXd in = assemble_input(spec, ex.state, ex.t, ex.condition);
  return loss_and_gradients(params, in, Eigen::MatrixXd(ex.target));
}

MlpSpec predictor_spec(const Task& task, const std::vector<int>& hidden) {
  MlpSpec s;
  s.state_dim = 0;
  s.condition_dim = measurement_dim(task);
  s.time_embed_pairs = 0;
  s.hidden = hidden;
  s.output_dim = data_dim(task);
  return s;
}

MlpSpec bridge_spec(const Task& task, const std::vector<int>& hidden, int time_embed_pairs) {
  MlpSpec s;
  s.state_dim = data_dim(task);
  s.condition_dim = measurement_dim(task);
  s.time_embed_pairs = time_embed_pairs;
  s.hidden = hidden;
  s.output_dim = data_dim(task);
  return s;
}

Eigen::MatrixXd predict_x_star(const Checkpoint& predictor, const Eigen::MatrixXd& measurements) {
  if (predictor.role != "predictor") throw CheckpointError("expected a predictor checkpoint");
  Eigen::MatrixXd empty(0, measurements.cols());
  return forward_states(predictor.ema.shadow, predictor.spec, empty, 1.0, measurements);
}

namespace {

struct ValidationScore {
  double mse = 0.0;
  double w2 = 0.0;
};

struct LoopHooks {
  // Fills one (inputs, targets) batch.
  std::function<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>()> make_batch;
  std::function<ValidationScore(const ModelParameters&)> validate;
  bool select_on_w2 = false;
};

TrainResult run_loop(const MlpSpec& spec, const TrainConfig& config, int epochs,
                     int steps_per_epoch, Rng init_rng, const LoopHooks& hooks) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();

  TrainResult result;
  ModelParameters params = init_parameters(spec, init_rng);
  AdamState adam = AdamState::for_params(params, config.learning_rate);
  EmaState ema{params, config.ema_decay};

  Checkpoint& best = result.checkpoint;
  best.spec = spec;
  best.params = params;
  best.ema = ema;
  best.adam = adam;
  best.meta["best_epoch"] = 0;

  double best_selection = std::numeric_limits<double>::infinity();
  double best_stop = std::numeric_limits<double>::infinity();
  int stale = 0;
  int epoch = 0;
  for (epoch = 1; epoch <= epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      auto [inputs, targets] = hooks.make_batch();
      LossAndGradients lg = loss_and_gradients(params, inputs, targets);
      adam_update(params, lg.gradients, adam);
      ema_update(ema, params);
      loss_sum += lg.loss;
    }
    if (!params.all_finite()) throw DivergenceError("parameters became non-finite");

    ValidationScore score = hooks.validate(ema.shadow);
    TrainingLogRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / steps_per_epoch;
    row.val_mse = score.mse;
    row.val_w2 = score.w2;
    double selection = hooks.select_on_w2 ? score.w2 : score.mse;
    if (selection < best_selection) {
      best_selection = selection;
      best.params = params;
      best.ema = ema;
      best.adam = adam;
      best.meta["best_epoch"] = epoch;
      row.ema_best = true;
    }
    row.wall_time = std::chrono::duration<double>(clock::now() - started).count();
    result.log.push_back(row);

    if (score.mse < best_stop) {
      best_stop = score.mse;
      stale = 0;
    } else if (++stale > config.patience) {
      break;
    }
  }
  best.meta["epochs_run"] = std::min(epoch, epochs);
  return result;
}

}  // namespace

TrainResult train_predictor(const Task& task, const MlpSpec& spec, const TrainConfig& config,
                            Rng rng) {
  validate(task);
  config.validate();
  spec.validate();
  if (spec.state_dim != 0 || spec.time_embed_pairs != 0 ||
      spec.condition_dim != measurement_dim(task) || spec.output_dim != data_dim(task))
    throw ConfigError("predictor spec does not match the task");

  Rng data_rng = rng.split("data");
  Rng val_rng = rng.split("validation");
  const int d = data_dim(task);
  const int m = measurement_dim(task);

  Eigen::MatrixXd val_x(d, config.validation_size), val_y(m, config.validation_size);
  for (int j = 0; j < config.validation_size; ++j) {
    TrainingPair p = sample_pair(task, val_rng);
    val_x.col(j) = p.x;
    val_y.col(j) = p.y;
  }

  LoopHooks hooks;
  hooks.make_batch = [&]() {
    Eigen::MatrixXd in(m, config.batch_size), target(d, config.batch_size);
    for (int j = 0; j < config.batch_size; ++j) {
      Eigen::VectorXd x = sample_clean(task, data_rng);
      in.col(j) = measure(task, x, data_rng);
      target.col(j) = x;
    }
    return std::make_pair(std::move(in), std::move(target));
  };
  hooks.validate = [&](const ModelParameters& p) {
    Eigen::MatrixXd out = forward_batch(p, val_y);
    return ValidationScore{mse(out, val_x), moment_w2(out, val_x)};
  };
  hooks.select_on_w2 = false;

  int epochs = config.predictor_epochs >= 0 ? config.predictor_epochs : config.epochs;
  int steps = config.predictor_steps_per_epoch > 0 ? config.predictor_steps_per_epoch
                                                   : config.steps_per_epoch;
  TrainResult r = run_loop(spec, config, epochs, steps, rng.split("init"), hooks);
  r.checkpoint.role = "predictor";
  r.checkpoint.rng_lineage = {rng.split("init").lineage(), data_rng.lineage(), val_rng.lineage()};
  r.checkpoint.meta["seed"] = config.seed;
  return r;
}

TrainResult train(const Task& task, const MlpSpec& spec, const TrainConfig& config,
                  const NoiseSchedule& schedule, const SamplerConfig& sampler,
                  const Checkpoint* predictor, Rng rng) {
  validate(task);
  config.validate();
  schedule.validate();
  sampler.validate(schedule);
  spec.validate();
  const int d = data_dim(task);
  if (measurement_dim(task) != d)
    throw ConfigError("bridge training needs measurement and data of equal dimension");
  if (spec.state_dim != d || spec.condition_dim != d || spec.output_dim != d)
    throw ConfigError("bridge spec does not match the task");

  const ConditioningFlags cf = flags(config.conditioning);
  const bool needs_x_star = config.strategy != TrainingStrategy::Vanilla ||
                            cf.endpoint_is_x_star || cf.condition_is_x_star;
  const bool use_predictor = needs_x_star && !config.oracle_posterior;
  if (use_predictor && predictor == nullptr)
    throw ConfigError("training strategy needs a trained predictor");
  if (needs_predictor_at_inference(config.conditioning) && predictor == nullptr)
    throw ConfigError("conditioning strategy needs a predictor at inference");

  Rng data_rng = rng.split("data");
  Rng train_rng = rng.split("train");
  Rng val_rng = rng.split("validation");
  const Rng val_sample_root = rng.split("validation-sampling");

  auto x_star_for = [&](const Eigen::MatrixXd& ys, const Eigen::MatrixXd& analytic) {
    return predictor != nullptr && !config.oracle_posterior ? predict_x_star(*predictor, ys)
                                                            : analytic;
  };

  Eigen::MatrixXd val_x(d, config.validation_size), val_y(d, config.validation_size),
      val_post(d, config.validation_size);
  for (int j = 0; j < config.validation_size; ++j) {
    TrainingPair p = sample_pair(task, val_rng);
    val_x.col(j) = p.x;
    val_y.col(j) = p.y;
    val_post.col(j) = p.x_star;
  }
  const Eigen::MatrixXd val_x_star = x_star_for(val_y, val_post);

  LoopHooks hooks;
  hooks.make_batch = [&]() {
    const int b = config.batch_size;
    std::vector<TrainingPair> pairs;
    pairs.reserve(b);
    Eigen::MatrixXd ys(d, b), analytic(d, b);
    for (int j = 0; j < b; ++j) {
      pairs.push_back(sample_pair(task, data_rng));
      ys.col(j) = pairs.back().y;
      analytic.col(j) = pairs.back().x_star;
    }
    if (needs_x_star) {
      Eigen::MatrixXd xs = x_star_for(ys, analytic);
      for (int j = 0; j < b; ++j) pairs[j].x_star = xs.col(j);
    }
    Eigen::MatrixXd in(spec.input_dim(), b), target(d, b);
    for (int j = 0; j < b; ++j) {
      const TrainingPair& p = pairs[j];
      double t = train_rng.uniform(schedule.t_eps, 1.0);
      const Eigen::VectorXd& endpoint = cf.endpoint_is_x_star ? p.x_star : p.y;
      const Eigen::VectorXd& cond = cf.condition_is_x_star ? p.x_star : p.y;
      TrainingExample ex = make_training_example(p, endpoint, cond, t, config.strategy, schedule,
                                                 config.weight, train_rng);
      in.col(j) = assemble_input(spec, ex.state, ex.t, ex.condition);
      target.col(j) = ex.target;
    }
    return std::make_pair(std::move(in), std::move(target));
  };
  hooks.validate = [&](const ModelParameters& p) {
    Rng sample_rng = val_sample_root;
    const Eigen::MatrixXd& start = cf.endpoint_is_x_star ? val_x_star : val_y;
    const Eigen::MatrixXd& cond = cf.condition_is_x_star ? val_x_star : val_y;
    BatchPredictor net = [&](const Eigen::MatrixXd& s, double t, const Eigen::MatrixXd& c) {
      return forward_states(p, spec, s, t, c);
    };
    BatchTrajectory tr = sample_batch(net, start, cond, sampler, schedule, sample_rng, false);
    return ValidationScore{mse(tr.final, val_x), moment_w2(tr.final, val_x)};
  };
  hooks.select_on_w2 = true;

  TrainResult r = run_loop(spec, config, config.epochs, config.steps_per_epoch, rng.split("init"), hooks);
  Checkpoint& c = r.checkpoint;
  c.role = "bridge";
  c.rng_lineage = {rng.split("init").lineage(), data_rng.lineage(), train_rng.lineage(),
                   val_rng.lineage(), val_sample_root.lineage()};
  c.meta["seed"] = config.seed;
  c.meta["strategy"] = to_string(config.strategy);
  c.meta["conditioning"] = to_string(config.conditioning);
  c.meta["weight_exponent"] = config.weight.exponent;
  c.meta["oracle_posterior"] = config.oracle_posterior;
  c.meta["predictor_hash"] = predictor ? checkpoint_hash(*predictor) : std::string();
  c.meta["schedule"] = {{"c", schedule.c}, {"k", schedule.k}, {"t_eps", schedule.t_eps}};
  return r;
}

BatchTrajectory run_bridge(const Checkpoint& bridge, const Checkpoint* predictor,
                           const Eigen::MatrixXd& measurements, const SamplerConfig& sampler,
                           const NoiseSchedule& schedule, Rng& rng, bool keep_states) {
  if (bridge.role != "bridge") throw CheckpointError("expected a bridge checkpoint");
  ConditioningStrategy cs = parse_conditioning(bridge.meta.value("conditioning", "M1"));
  ConditioningFlags cf = flags(cs);
  Eigen::MatrixXd x_star;
  if (needs_predictor_at_inference(cs)) {
    if (predictor == nullptr)
      throw CheckpointError("conditioning " + to_string(cs) + " needs the predictor checkpoint");
    x_star = predict_x_star(*predictor, measurements);
  }
  const Eigen::MatrixXd& start = cf.endpoint_is_x_star ? x_star : measurements;
  const Eigen::MatrixXd& cond = cf.condition_is_x_star ? x_star : measurements;
  BatchPredictor net = [&](const Eigen::MatrixXd& s, double t, const Eigen::MatrixXd& c) {
    return forward_states(bridge.ema.shadow, bridge.spec, s, t, c);
  };
  return sample_batch(net, start, cond, sampler, schedule, rng, keep_states);
}

}  // namespace rsb
