#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rsb/checkpoint.hpp"
#include "rsb/errors.hpp"
#include "rsb/rng.hpp"

using namespace rsb;

namespace {
Checkpoint sample_checkpoint() {
  MlpSpec spec{1, 1, 3, {5, 4}, 1};
  Rng rng(42);
  Checkpoint c;
  c.role = "bridge";
  c.spec = spec;
  c.params = init_parameters(spec, rng);
  for (auto& l : c.params.layers) l.bias = rng.normal_vector(l.bias.size()) * 1e-3;
  c.ema = {c.params, 0.999};
  c.ema.shadow.layers[0].weight(0, 0) = 1.0 / 3.0;
  c.adam = AdamState::for_params(c.params, 1e-4);
  c.adam.step = 17;
  c.adam.v.layers[1].weight(2, 1) = 5e-300;
  c.rng_lineage = {"42/bridge/init", "42/bridge/train"};
  c.meta["seed"] = 42;
  return c;
}
}  // namespace

TEST_CASE("serialization round trip is bit-exact") {
  Checkpoint c = sample_checkpoint();
  const std::string text = serialize_checkpoint(c);
  Checkpoint back = parse_checkpoint(text);
  CHECK(back.role == c.role);
  CHECK(back.spec == c.spec);
  CHECK(back.params.flatten() == c.params.flatten());
  CHECK(back.ema.shadow.flatten() == c.ema.shadow.flatten());
  CHECK(back.ema.decay == c.ema.decay);
  CHECK(back.adam.m.flatten() == c.adam.m.flatten());
  CHECK(back.adam.v.flatten() == c.adam.v.flatten());
  CHECK(back.adam.step == 17);
  CHECK(back.rng_lineage == c.rng_lineage);
  CHECK(back.meta == c.meta);
  CHECK(serialize_checkpoint(back) == text);
  CHECK(checkpoint_hash(back) == checkpoint_hash(c));
  CHECK(checkpoint_hash(c).size() == 16);
}

TEST_CASE("files and malformed input") {
  const auto dir = std::filesystem::temp_directory_path() / "rsb_ckpt_test";
  std::filesystem::create_directories(dir);
  Checkpoint c = sample_checkpoint();
  write_checkpoint(dir / "a.json", c);
  CHECK(read_checkpoint(dir / "a.json").params.flatten() == c.params.flatten());
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.json"), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint("{not json"), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint("{\"format\": \"other\"}"), CheckpointError);

  std::string text = serialize_checkpoint(c);
  auto pos = text.find("\"shape\"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 7, "\"shapX\"");
  CHECK_THROWS_AS(parse_checkpoint(text), CheckpointError);
  std::filesystem::remove_all(dir);
}
