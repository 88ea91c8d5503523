#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rsb/errors.hpp"
#include "rsb/experiments.hpp"

using namespace rsb;
namespace fs = std::filesystem;

namespace {
ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c = parse_config(nlohmann::json::parse(R"({
    "model": {"hidden": [12, 12], "time_embed_pairs": 3, "predictor_hidden": [12]},
    "train": {"epochs": 2, "steps_per_epoch": 30, "validation_size": 20},
    "sampler": {"n_steps": 6},
    "eval": {"size": 64},
    "seeds": [1, 2],
    "sweep_steps": [1, 3, 6]
  })"));
  c.output_dir = out.string();
  return c;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("rsb_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv_body(csv));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}
}  // namespace

TEST_CASE("train is reproducible and strategies share the predictor") {
  fs::path a = scratch("train_a"), b = scratch("train_b"), v = scratch("train_v");
  ExperimentConfig ca = tiny(a), cb = tiny(b), cv = tiny(v);
  CommandOptions opts;
  CommandResult ra = cmd_train(ca, opts);
  CommandResult rb = cmd_train(cb, opts);
  CHECK(csv_body(ra.csv) == csv_body(rb.csv));
  CHECK(ra.csv.rfind("# generated_at", 0) == 0);
  CHECK(rows(ra.csv)[0][0] == "schema");
  CHECK(rows(ra.csv).size() == 3);
  CHECK(ra.notes == rb.notes);
  CHECK(slurp(a / "seed_1" / "bridge.json") == slurp(b / "seed_1" / "bridge.json"));

  cv.train.strategy = TrainingStrategy::Vanilla;
  cv.train.conditioning = ConditioningStrategy::M2;
  cmd_train(cv, opts);
  CHECK(slurp(a / "seed_1" / "predictor.json") == slurp(v / "seed_1" / "predictor.json"));
  CHECK(slurp(a / "seed_1" / "bridge.json") != slurp(v / "seed_1" / "bridge.json"));
  CHECK(fs::exists(a / "seed_2" / "train_log.csv"));
  CHECK(rows(slurp(a / "seed_1" / "train_log.csv"))[1][0] == kTrainLogSchema);
  for (auto p : {a, b, v}) fs::remove_all(p);
}

TEST_CASE("sweep, exposure and checkpoint checks") {
  fs::path dir = scratch("sweep");
  ExperimentConfig c = tiny(dir);
  CommandOptions opts;
  opts.seed = 2;
  cmd_train(c, opts);
  opts.checkpoints = {dir / "seed_2" / "bridge.json"};
  opts.steps = {1};
  CommandResult sweep = cmd_sweep_steps(c, opts);
  auto r = rows(sweep.csv);
  REQUIRE(r.size() == 2);
  CHECK(r[1][0] == kSweepSchema);
  CHECK(r[1][3] == "1");

  // One step is a single network call at t = 1 on the evaluation set.
  TrainedModel m = load_trained_model(c, dir / "seed_2" / "bridge.json");
  EvalSet e = make_eval_set(c, 2);
  Eigen::MatrixXd once = forward_states(m.bridge.ema.shadow, m.bridge.spec, e.y, 1.0, e.y);
  CHECK(std::stod(r[1][4]) == doctest::Approx(mse(once, e.x)).epsilon(1e-9));

  CommandResult exposure = cmd_exposure_bias(c, opts);
  auto er = rows(exposure.csv);
  CHECK(er.size() == 1 + 6);
  CHECK(er[0] == std::vector<std::string>{"schema", "method", "seed", "step", "t", "mean_error", "mse", "w2"});

  ExperimentConfig other = c;
  other.model.hidden = {13, 12};
  CHECK_THROWS_AS(cmd_sweep_steps(other, opts), CheckpointError);
  ExperimentConfig resched = c;
  resched.schedule.k = 3.0;
  CHECK_THROWS_AS(cmd_sweep_steps(resched, opts), CheckpointError);
  opts.checkpoints = {dir / "missing.json"};
  CHECK_THROWS_AS(cmd_sweep_steps(c, opts), CheckpointError);
  fs::remove_all(dir);
}

TEST_CASE("strategies table") {
  fs::path dir = scratch("strategies"), solo = scratch("solo");
  ExperimentConfig c = tiny(dir);
  CommandOptions opts;
  opts.seed = 1;
  CommandResult res = cmd_strategies(c, opts);
  auto r = rows(res.csv);
  REQUIRE(r.size() == 6);
  for (int k = 1; k <= 5; ++k) CHECK(r[k][1] == "M" + std::to_string(k));

  // M1 is plain vanilla training.
  ExperimentConfig v = tiny(solo);
  v.train.strategy = TrainingStrategy::Vanilla;
  CommandResult alone = cmd_train(v, opts);
  auto ar = rows(alone.csv);
  for (std::size_t col = 2; col < r[1].size(); ++col) CHECK(r[1][col] == ar[1][col]);
  CHECK(slurp(dir / "seed_1" / "strategies" / "M1.json") == slurp(solo / "seed_1" / "bridge.json"));

  // M5 needs no predictor at inference; M2 does.
  fs::remove(dir / "seed_1" / "predictor.json");
  opts.checkpoints = {dir / "seed_1" / "strategies" / "M5.json"};
  CommandResult m5 = cmd_sweep_steps(c, opts);
  CHECK(rows(m5.csv).size() == 4);
  opts.checkpoints = {dir / "seed_1" / "strategies" / "M2.json"};
  CHECK_THROWS_AS(cmd_sweep_steps(c, opts), CheckpointError);
  fs::remove_all(dir);
  fs::remove_all(solo);
}

TEST_CASE("ablation rows share seeds") {
  fs::path dir = scratch("ablation");
  ExperimentConfig c = tiny(dir);
  CommandResult res = cmd_ablation(c, {});
  auto r = rows(res.csv);
  REQUIRE(r.size() == 7);
  CHECK(r[0][1] == "strategy");
  std::vector<std::string> labels;
  for (std::size_t i = 1; i < r.size(); ++i) labels.push_back(r[i][1] + "/" + r[i][2]);
  CHECK(labels == std::vector<std::string>{"no/1", "input_only/1", "joint/1", "no/2", "input_only/2",
                                           "joint/2"});
  CommandOptions again;
  again.out_dir = dir / "again";
  CHECK(csv_body(cmd_ablation(c, again).csv) == csv_body(res.csv));
  fs::remove_all(dir);
}

TEST_CASE("dump writes coordinate-major pairs") {
  fs::path dir = scratch("dump");
  ExperimentConfig c = tiny(dir);
  MixtureTask m;
  m.dim = 2;
  c.task = m;
  CommandOptions opts;
  opts.count = 5;
  opts.timestamp = false;
  CommandResult res = cmd_dump(c, opts);
  auto r = rows(res.csv);
  CHECK(r.size() == 6);
  CHECK(r[0] == std::vector<std::string>{"schema", "index", "x0", "x1", "y0", "y1", "x_star0", "x_star1"});
  CHECK(res.csv == slurp(dir / "pairs.csv"));
  fs::remove_all(dir);
}
