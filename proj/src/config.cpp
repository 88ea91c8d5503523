#include "rsb/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!keys.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

Eigen::VectorXd vector_from(const json& j, const std::string& where) {
  std::vector<double> v;
  try {
    v = j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(where + " must be a list of numbers");
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& where) {
  std::vector<std::vector<double>> rows;
  try {
    rows = j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception&) {
    throw ConfigError(where + " must be a list of rows");
  }
  if (rows.empty()) throw ConfigError(where + " must be nonempty");
  Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ConfigError(where + " has ragged rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Task parse_task(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("task needs a kind");
  std::string kind = get<std::string>(j, "kind", "task", "");
  if (kind == "mixture") {
    require_object(j, "task", {"kind", "centers", "weights", "s2", "noise_var", "dim"});
    MixtureTask t;
    t.centers = get(j, "centers", "task", t.centers);
    t.weights = get(j, "weights", "task", t.weights);
    t.s2 = get(j, "s2", "task", t.s2);
    t.noise_var = get(j, "noise_var", "task", t.noise_var);
    t.dim = get(j, "dim", "task", t.dim);
    return t;
  }
  if (kind == "linear_gaussian") {
    require_object(j, "task", {"kind", "mu0", "Sigma0", "A", "Sigma_n"});
    LinearGaussianTask t;
    if (j.contains("mu0")) t.mu0 = vector_from(j["mu0"], "task.mu0");
    const auto d = t.mu0.size();
    t.Sigma0 = j.contains("Sigma0") ? matrix_from(j["Sigma0"], "task.Sigma0")
                                    : Eigen::MatrixXd::Identity(d, d);
    t.A = j.contains("A") ? matrix_from(j["A"], "task.A") : Eigen::MatrixXd::Identity(d, d);
    t.Sigma_n = j.contains("Sigma_n") ? matrix_from(j["Sigma_n"], "task.Sigma_n")
                                      : Eigen::MatrixXd::Identity(t.A.rows(), t.A.rows());
    return t;
  }
  throw ConfigError("unknown task kind '" + kind + "'");
}

json task_to_json(const Task& task) {
  if (const auto* m = std::get_if<MixtureTask>(&task))
    return {{"kind", "mixture"}, {"centers", m->centers}, {"weights", m->weights},
            {"s2", m->s2},       {"noise_var", m->noise_var}, {"dim", m->dim}};
  const auto& l = std::get<LinearGaussianTask>(task);
  std::vector<double> mu(l.mu0.data(), l.mu0.data() + l.mu0.size());
  return {{"kind", "linear_gaussian"},
          {"mu0", mu},
          {"Sigma0", matrix_to_json(l.Sigma0)},
          {"A", matrix_to_json(l.A)},
          {"Sigma_n", matrix_to_json(l.Sigma_n)}};
}

}  // namespace

MlpSpec ExperimentConfig::bridge_spec() const {
  return rsb::bridge_spec(task, model.hidden, model.time_embed_pairs);
}

MlpSpec ExperimentConfig::predictor_spec() const {
  return rsb::predictor_spec(task, model.predictor_hidden);
}

void ExperimentConfig::validate() const {
  rsb::validate(task);
  schedule.validate();
  train.validate();
  sampler.validate(schedule);
  bridge_spec().validate();
  predictor_spec().validate();
  if (eval.size < 1 || eval.reference_size < 0) throw ConfigError("eval sizes must be positive");
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (sweep_steps.empty()) throw ConfigError("sweep_steps must be nonempty");
  for (int s : sweep_steps)
    if (s < 1) throw ConfigError("sweep_steps entries must be positive");
}

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "config",
                 {"task", "schedule", "model", "train", "sampler", "eval", "output_dir", "seeds",
                  "sweep_steps"});
  ExperimentConfig c;
  if (doc.contains("task")) c.task = parse_task(doc["task"]);

  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    require_object(s, "schedule", {"c", "k", "t_eps"});
    c.schedule.c = get(s, "c", "schedule", c.schedule.c);
    c.schedule.k = get(s, "k", "schedule", c.schedule.k);
    c.schedule.t_eps = get(s, "t_eps", "schedule", c.schedule.t_eps);
  }

  if (doc.contains("model")) {
    const json& m = doc["model"];
    require_object(m, "model", {"hidden", "time_embed_pairs", "predictor_hidden", "activation"});
    c.model.hidden = get(m, "hidden", "model", c.model.hidden);
    c.model.time_embed_pairs = get(m, "time_embed_pairs", "model", c.model.time_embed_pairs);
    c.model.predictor_hidden = get(m, "predictor_hidden", "model", c.model.predictor_hidden);
    if (get<std::string>(m, "activation", "model", "tanh") != "tanh")
      throw ConfigError("model.activation must be tanh");
  }

  if (doc.contains("train")) {
    const json& t = doc["train"];
    require_object(t, "train",
                   {"epochs", "steps_per_epoch", "batch_size", "strategy", "conditioning",
                    "patience", "validation_size", "learning_rate", "ema_decay", "weight_exponent",
                    "predictor_epochs", "predictor_steps_per_epoch", "oracle_posterior"});
    TrainConfig& tc = c.train;
    tc.epochs = get(t, "epochs", "train", tc.epochs);
    tc.steps_per_epoch = get(t, "steps_per_epoch", "train", tc.steps_per_epoch);
    tc.batch_size = get(t, "batch_size", "train", tc.batch_size);
    tc.strategy = parse_training_strategy(get<std::string>(t, "strategy", "train", "joint"));
    tc.conditioning = parse_conditioning(get<std::string>(t, "conditioning", "train", "M1"));
    tc.patience = get(t, "patience", "train", tc.patience);
    tc.validation_size = get(t, "validation_size", "train", tc.validation_size);
    tc.learning_rate = get(t, "learning_rate", "train", tc.learning_rate);
    tc.ema_decay = get(t, "ema_decay", "train", tc.ema_decay);
    tc.weight.exponent = get(t, "weight_exponent", "train", tc.weight.exponent);
    tc.predictor_epochs = get(t, "predictor_epochs", "train", tc.predictor_epochs);
    tc.predictor_steps_per_epoch =
        get(t, "predictor_steps_per_epoch", "train", tc.predictor_steps_per_epoch);
    tc.oracle_posterior = get(t, "oracle_posterior", "train", tc.oracle_posterior);
  }

  if (doc.contains("sampler")) {
    const json& s = doc["sampler"];
    require_object(s, "sampler", {"n_steps", "kind", "t_min", "grid"});
    c.sampler.n_steps = get(s, "n_steps", "sampler", c.sampler.n_steps);
    std::string kind = get<std::string>(s, "kind", "sampler", "sde");
    if (kind == "sde") c.sampler.kind = SamplerKind::Sde;
    else if (kind == "ode") c.sampler.kind = SamplerKind::Ode;
    else throw ConfigError("sampler.kind must be sde or ode");
    if (s.contains("t_min") && !s["t_min"].is_null())
      c.sampler.t_min = get(s, "t_min", "sampler", 0.0);
    if (get<std::string>(s, "grid", "sampler", "uniform") != "uniform")
      throw ConfigError("sampler.grid must be uniform");
  }

  if (doc.contains("eval")) {
    const json& e = doc["eval"];
    require_object(e, "eval", {"size", "reference_size"});
    c.eval.size = get(e, "size", "eval", c.eval.size);
    c.eval.reference_size = get(e, "reference_size", "eval", c.eval.reference_size);
  }

  c.output_dir = get(doc, "output_dir", "config", c.output_dir);
  c.seeds = get(doc, "seeds", "config", c.seeds);
  c.sweep_steps = get(doc, "sweep_steps", "config", c.sweep_steps);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json sampler = {{"n_steps", c.sampler.n_steps},
                  {"kind", c.sampler.kind == SamplerKind::Sde ? "sde" : "ode"},
                  {"grid", "uniform"}};
  sampler["t_min"] = c.sampler.t_min ? json(*c.sampler.t_min) : json(nullptr);
  return {{"task", task_to_json(c.task)},
          {"schedule", {{"c", c.schedule.c}, {"k", c.schedule.k}, {"t_eps", c.schedule.t_eps}}},
          {"model",
           {{"hidden", c.model.hidden},
            {"time_embed_pairs", c.model.time_embed_pairs},
            {"predictor_hidden", c.model.predictor_hidden},
            {"activation", "tanh"}}},
          {"train",
           {{"epochs", c.train.epochs},
            {"steps_per_epoch", c.train.steps_per_epoch},
            {"batch_size", c.train.batch_size},
            {"strategy", to_string(c.train.strategy)},
            {"conditioning", to_string(c.train.conditioning)},
            {"patience", c.train.patience},
            {"validation_size", c.train.validation_size},
            {"learning_rate", c.train.learning_rate},
            {"ema_decay", c.train.ema_decay},
            {"weight_exponent", c.train.weight.exponent},
            {"predictor_epochs", c.train.predictor_epochs},
            {"predictor_steps_per_epoch", c.train.predictor_steps_per_epoch},
            {"oracle_posterior", c.train.oracle_posterior}}},
          {"sampler", sampler},
          {"eval", {{"size", c.eval.size}, {"reference_size", c.eval.reference_size}}},
          {"output_dir", c.output_dir},
          {"seeds", c.seeds},
          {"sweep_steps", c.sweep_steps}};
}

}  // namespace rsb
