#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsb/model.hpp"
#include "rsb/sampler.hpp"
#include "rsb/schedule.hpp"
#include "rsb/tasks.hpp"
#include "rsb/training.hpp"

namespace rsb {

struct ModelConfig {
  std::vector<int> hidden{128, 128};
  int time_embed_pairs = 8;
  std::vector<int> predictor_hidden{128, 128};
};

struct EvalConfig {
  int size = 1000;            // evaluation pairs per seed
  // Clean samples for the perception proxies. 0 compares against the
  // evaluation pairs' own clean signals, which removes most estimator noise
  // from method-to-method comparisons.
  int reference_size = 0;
};

/// Full description of an experiment. Parsed from a JSON document whose
/// top-level blocks are task, schedule, model, train, sampler, eval,
/// output_dir, seeds and sweep_steps; unknown keys are rejected.
struct ExperimentConfig {
  Task task = MixtureTask{};
  NoiseSchedule schedule;
  ModelConfig model;
  TrainConfig train;
  SamplerConfig sampler;
  EvalConfig eval;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  std::vector<int> sweep_steps{1, 2, 4, 8, 16, 32, 50};

  MlpSpec bridge_spec() const;
  MlpSpec predictor_spec() const;
  void validate() const;
};

/// Throws ConfigError on any malformed, unknown or out-of-range entry.
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Throws ConfigError if the file is missing or not valid JSON.
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace rsb
