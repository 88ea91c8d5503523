#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsb/checkpoint.hpp"
#include "rsb/config.hpp"
#include "rsb/metrics.hpp"
#include "rsb/training.hpp"

namespace rsb {

// CSV schema identifiers; each is the first column of its file.
inline constexpr const char* kSweepSchema = "rsb.sweep/v1";
inline constexpr const char* kExposureSchema = "rsb.exposure/v1";
inline constexpr const char* kStrategiesSchema = "rsb.strategies/v1";
inline constexpr const char* kAblationSchema = "rsb.ablation/v1";
inline constexpr const char* kEvalSchema = "rsb.eval/v1";
inline constexpr const char* kPerStepSchema = "rsb.per_step/v1";
inline constexpr const char* kTrainLogSchema = "rsb.train_log/v1";
inline constexpr const char* kPairsSchema = "rsb.pairs/v1";

/// Fixed evaluation data for one seed: pairs (columns) and a clean
/// reference set for the perception proxies.
struct EvalSet {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  Eigen::MatrixXd x_star;  // analytic posterior mean
  Eigen::MatrixXd reference;
};

EvalSet make_eval_set(const ExperimentConfig& config, std::uint64_t seed);

/// A bridge ready for evaluation. `predictor` is present only when the
/// bridge's conditioning strategy needs D_phi at inference.
struct TrainedModel {
  std::string method;
  std::uint64_t seed = 0;
  Checkpoint bridge;
  std::optional<Checkpoint> predictor;
};

Checkpoint train_predictor_for_seed(const ExperimentConfig& config, std::uint64_t seed,
                                    std::vector<TrainingLogRow>* log = nullptr);

/// The predictor is handed to training only when the strategy or the
/// conditioning uses x_star, so checkpoints that never touch D_phi do not
/// depend on it.
Checkpoint train_bridge_for_seed(const ExperimentConfig& config, std::uint64_t seed,
                                 TrainingStrategy strategy, ConditioningStrategy conditioning,
                                 const Checkpoint& predictor,
                                 std::vector<TrainingLogRow>* log = nullptr);

/// Sampler noise for n-step evaluation of a seed; shared by every method so
/// that comparisons use common random numbers.
Rng evaluation_stream(std::uint64_t seed, int n_steps);

EvalReport evaluate_model(const ExperimentConfig& config, const TrainedModel& model,
                          const EvalSet& eval, int n_steps);

/// Loads a bridge checkpoint, checks it against the config (CheckpointError
/// on mismatch) and, if its conditioning needs one, the sibling predictor
/// named in its metadata.
TrainedModel load_trained_model(const ExperimentConfig& config, const std::filesystem::path& path);

std::string sweep_csv(const ExperimentConfig& config, const std::vector<TrainedModel>& models,
                      const std::vector<int>& steps);
std::string exposure_csv(const ExperimentConfig& config, const std::vector<TrainedModel>& models);
/// One row per model at config.sampler.n_steps.
std::string summary_csv(const ExperimentConfig& config, const std::vector<TrainedModel>& models,
                        const char* schema, const char* label_column);
std::string train_log_csv(const std::vector<TrainingLogRow>& log);
std::string eval_report_csv(const std::string& method, std::uint64_t seed, int n_steps,
                            const EvalReport& report);
std::string per_step_csv(const std::vector<double>& times, const std::vector<double>& errors);

struct CommandOptions {
  std::filesystem::path out_dir;  // empty: config.output_dir
  std::optional<std::uint64_t> seed;
  std::vector<int> steps;
  std::vector<std::filesystem::path> checkpoints;
  int count = 1000;  // rows for the dump command
  bool timestamp = true;
};

struct CommandResult {
  std::filesystem::path csv_path;
  std::string csv;  // including the timestamp line when enabled
  std::vector<std::string> notes;  // human-readable progress / hashes
};

CommandResult cmd_train(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_sweep_steps(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_exposure_bias(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_strategies(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_ablation(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_dump(const ExperimentConfig& config, const CommandOptions& options);

/// CSV text without a leading '#' timestamp line.
std::string csv_body(const std::string& csv);

}  // namespace rsb
