// rsb: experiment driver. Exit codes: 0 ok, 2 config, 3 divergence,
// 4 checkpoint mismatch, 1 anything else.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsb/config.hpp"
#include "rsb/errors.hpp"
#include "rsb/experiments.hpp"

namespace {

std::vector<int> parse_steps(const std::string& text) {
  std::vector<int> steps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      steps.push_back(v);
    } catch (const std::exception&) {
      throw rsb::ConfigError("--steps expects a comma-separated list of integers");
    }
  }
  return steps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger bridge experiments on synthetic inverse problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  std::string steps;
  std::vector<std::string> checkpoints;
  int count = 1000;
  bool no_timestamp = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "run only this seed");
    sub->add_flag("--no-timestamp", no_timestamp, "omit the generated_at line from CSV output");
  };

  CLI::App* train = app.add_subcommand("train", "train the predictor and bridge, then evaluate");
  CLI::App* sweep = app.add_subcommand("sweep-steps", "distortion/perception vs sampling steps");
  CLI::App* exposure = app.add_subcommand("exposure-bias", "per-step prediction error");
  CLI::App* strategies = app.add_subcommand("strategies", "train and evaluate M1..M5");
  CLI::App* ablation = app.add_subcommand("ablation", "no / input_only / joint perturbation");
  CLI::App* dump = app.add_subcommand("dump", "write sampled (x, y, x_star) pairs as CSV");
  for (CLI::App* sub : {train, sweep, exposure, strategies, ablation, dump}) add_common(sub);
  for (CLI::App* sub : {sweep, exposure})
    sub->add_option("--checkpoint", checkpoints, "bridge checkpoint (repeatable)");
  sweep->add_option("--steps", steps, "comma-separated step counts");
  dump->add_option("--count", count, "number of pairs");

  CLI11_PARSE(app, argc, argv);

  try {
    rsb::ExperimentConfig config = rsb::load_config(config_path);
    rsb::CommandOptions options;
    options.out_dir = out;
    for (CLI::App* sub : app.get_subcommands())
      if (sub->count("--seed")) options.seed = seed;
    if (!steps.empty()) options.steps = parse_steps(steps);
    for (const auto& c : checkpoints) options.checkpoints.emplace_back(c);
    options.count = count;
    options.timestamp = !no_timestamp;

    rsb::CommandResult result;
    if (app.got_subcommand(train)) result = rsb::cmd_train(config, options);
    else if (app.got_subcommand(sweep)) result = rsb::cmd_sweep_steps(config, options);
    else if (app.got_subcommand(exposure)) result = rsb::cmd_exposure_bias(config, options);
    else if (app.got_subcommand(strategies)) result = rsb::cmd_strategies(config, options);
    else if (app.got_subcommand(ablation)) result = rsb::cmd_ablation(config, options);
    else result = rsb::cmd_dump(config, options);

    for (const auto& note : result.notes) std::cerr << note << '\n';
    std::cerr << "wrote " << result.csv_path.string() << '\n';
    return 0;
  } catch (const rsb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const rsb::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return 3;
  } catch (const rsb::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
