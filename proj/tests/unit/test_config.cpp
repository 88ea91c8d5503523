#include <doctest.h>

#include "rsb/config.hpp"
#include "rsb/errors.hpp"

using namespace rsb;
using nlohmann::json;

TEST_CASE("defaults") {
  ExperimentConfig c = parse_config(json::object());
  CHECK(std::holds_alternative<MixtureTask>(c.task));
  CHECK(c.schedule.c == 0.40);
  CHECK(c.schedule.k == 2.6);
  CHECK(c.schedule.t_eps == 1e-4);
  CHECK(c.train.learning_rate == 1e-4);
  CHECK(c.train.ema_decay == 0.999);
  CHECK(c.train.batch_size == 16);
  CHECK(c.train.patience == 20);
  CHECK(c.train.validation_size == 50);
  CHECK(c.train.weight.exponent == 2.0);
  CHECK(c.sweep_steps == std::vector<int>{1, 2, 4, 8, 16, 32, 50});
}

TEST_CASE("round trip through json") {
  json doc = json::parse(R"({
    "task": {"kind": "linear_gaussian", "mu0": [0, 1], "Sigma0": [[1, 0.2], [0.2, 2]],
             "A": [[1, 0], [0, 1]], "Sigma_n": [[0.5, 0], [0, 0.5]]},
    "train": {"strategy": "input_only", "conditioning": "M3", "epochs": 7},
    "sampler": {"n_steps": 12, "kind": "ode", "t_min": 0.01},
    "model": {"hidden": [32], "time_embed_pairs": 3},
    "seeds": [3, 4]
  })");
  ExperimentConfig c = parse_config(doc);
  CHECK(c.train.strategy == TrainingStrategy::InputOnly);
  CHECK(c.train.conditioning == ConditioningStrategy::M3);
  CHECK(c.sampler.kind == SamplerKind::Ode);
  CHECK(*c.sampler.t_min == 0.01);
  CHECK(c.bridge_spec().state_dim == 2);
  CHECK(c.bridge_spec().input_dim() == 2 + 2 + 6);
  CHECK(to_json(parse_config(to_json(c))) == to_json(c));
}

TEST_CASE("invalid configs are rejected") {
  auto rejects = [](const char* text) {
    CHECK_THROWS_AS(parse_config(json::parse(text)), ConfigError);
  };
  rejects(R"({"tasks": {}})");
  rejects(R"({"train": {"epoch": 3}})");
  rejects(R"({"task": {"kind": "mixture", "sigma": 1}})");
  rejects(R"({"task": {"kind": "speech"}})");
  rejects(R"({"train": {"strategy": "both"}})");
  rejects(R"({"train": {"strategy": "vanilla", "conditioning": "M5"}})");
  rejects(R"({"train": {"epochs": "many"}})");
  rejects(R"({"sampler": {"kind": "heun"}})");
  rejects(R"({"sampler": {"n_steps": 0}})");
  rejects(R"({"schedule": {"k": 0.5}})");
  rejects(R"({"seeds": []})");
  rejects(R"({"model": {"activation": "relu"}})");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
