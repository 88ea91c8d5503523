#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rsb/bridge.hpp"
#include "rsb/checkpoint.hpp"
#include "rsb/model.hpp"
#include "rsb/sampler.hpp"
#include "rsb/schedule.hpp"
#include "rsb/tasks.hpp"

namespace rsb {

/// Which parts of a training example carry simulated prediction error.
enum class TrainingStrategy {
  Vanilla,    // state from the exact bridge, target x
  InputOnly,  // perturbed state, target x
  Joint,      // perturbed state, perturbed target (RSB)
};

/// Distortion-perception tradeoff variants M1..M5.
enum class ConditioningStrategy { M1, M2, M3, M4, M5 };

struct ConditioningFlags {
  bool endpoint_is_x_star = false;   // bridge endpoint X_1 = x_star instead of y
  bool condition_is_x_star = false;  // network condition = x_star instead of y
  bool regularized = false;
};

ConditioningFlags flags(ConditioningStrategy s);
/// True when sampling needs the predictive model (M2, M3, M4).
bool needs_predictor_at_inference(ConditioningStrategy s);

std::string to_string(TrainingStrategy s);
std::string to_string(ConditioningStrategy s);
/// Throw ConfigError on unknown names.
TrainingStrategy parse_training_strategy(std::string_view name);
ConditioningStrategy parse_conditioning(std::string_view name);

struct TrainConfig {
  int epochs = 100;
  int steps_per_epoch = 100;
  int batch_size = 16;
  std::uint64_t seed = 1;
  TrainingStrategy strategy = TrainingStrategy::Joint;
  ConditioningStrategy conditioning = ConditioningStrategy::M1;
  int patience = 20;
  int validation_size = 50;
  double learning_rate = 1e-4;
  double ema_decay = 0.999;
  PerturbationWeight weight;
  /// Negative values fall back to epochs / steps_per_epoch.
  int predictor_epochs = -1;
  int predictor_steps_per_epoch = -1;
  /// Use the analytic posterior mean instead of D_phi(y) for x_star.
  bool oracle_posterior = false;

  void validate() const;
};

/// One network input/target triple.
struct TrainingExample {
  Eigen::VectorXd state;
  Eigen::VectorXd condition;
  Eigen::VectorXd target;
  double t = 1.0;
};

/// Builds the example for one pair at time t. `endpoint` is the bridge's
/// X_1 and `condition` the network's conditioning input; both are y for M1.
/// Consumes exactly one state-noise draw regardless of strategy.
TrainingExample make_training_example(const TrainingPair& pair, const Eigen::VectorXd& endpoint,
                                      const Eigen::VectorXd& condition, double t,
                                      TrainingStrategy strategy, const NoiseSchedule& schedule,
                                      const PerturbationWeight& weight, Rng& rng);

/// Loss and gradients for a single pair with endpoint = condition = y.
LossAndGradients training_step(const ModelParameters& params, const MlpSpec& spec,
                               const TrainingPair& pair, double t, TrainingStrategy strategy,
                               const NoiseSchedule& schedule, Rng& rng,
                               const PerturbationWeight& weight = {});

struct TrainingLogRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
  double val_w2 = 0.0;
  bool ema_best = false;  // this check produced the selected EMA checkpoint
  double wall_time = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainingLogRow> log;
};

/// Spec of the predictive network D_phi for a task: measurement in, clean
/// estimate out, no state or time inputs.
MlpSpec predictor_spec(const Task& task, const std::vector<int>& hidden);
/// Spec of the bridge network X_theta for a task.
MlpSpec bridge_spec(const Task& task, const std::vector<int>& hidden, int time_embed_pairs);

/// D_phi(y) for each column of `measurements`, using the EMA weights.
Eigen::MatrixXd predict_x_star(const Checkpoint& predictor, const Eigen::MatrixXd& measurements);

/// MSE regression of x on y. Early-stops on validation MSE; returns the EMA
/// checkpoint with the lowest validation MSE.
TrainResult train_predictor(const Task& task, const MlpSpec& spec, const TrainConfig& config,
                            Rng rng);

/// Bridge training. `predictor` may be
/// null only when neither the strategy nor the conditioning needs x_star, or
/// when config.oracle_posterior is set. Early-stops on validation MSE and
/// keeps the EMA checkpoint with the lowest validation W2.
TrainResult train(const Task& task, const MlpSpec& spec, const TrainConfig& config,
                  const NoiseSchedule& schedule, const SamplerConfig& sampler,
                  const Checkpoint* predictor, Rng rng);

/// Samples with the bridge's EMA weights. Throws CheckpointError when the
/// checkpoint's conditioning strategy needs a predictor and none is given.
BatchTrajectory run_bridge(const Checkpoint& bridge, const Checkpoint* predictor,
                           const Eigen::MatrixXd& measurements, const SamplerConfig& sampler,
                           const NoiseSchedule& schedule, Rng& rng, bool keep_states = false);

}  // namespace rsb
