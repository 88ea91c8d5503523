#include "rsb/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rsb/errors.hpp"
#include "rsb/rng.hpp"

namespace rsb {
namespace {

using nlohmann::json;

json arrays_to_json(const ModelParameters& p) {
  json out = json::array();
  p.visit_arrays([&](const std::string& name, const Eigen::Ref<const Eigen::MatrixXd>& a) {
    json data = json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
    out.push_back({{"name", name}, {"shape", {a.rows(), a.cols()}}, {"data", std::move(data)}});
  });
  return out;
}

ModelParameters arrays_from_json(const json& j) {
  if (!j.is_array() || j.size() % 2 != 0) throw CheckpointError("malformed parameter list");
  ModelParameters p;
  auto read = [](const json& entry, const std::string& expected) {
    if (entry.at("name").get<std::string>() != expected)
      throw CheckpointError("unexpected parameter array " + entry.at("name").get<std::string>());
    auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    const json& data = entry.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw CheckpointError("parameter array " + expected + " has wrong element count");
    Eigen::MatrixXd m(rows, cols);
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[at++].get<double>();
    return m;
  };
  for (std::size_t i = 0; i < j.size() / 2; ++i) {
    std::string prefix = "layer" + std::to_string(i);
    Eigen::MatrixXd w = read(j[2 * i], prefix + ".weight");
    Eigen::MatrixXd b = read(j[2 * i + 1], prefix + ".bias");
    if (b.cols() != 1 || b.rows() != w.rows()) throw CheckpointError("bias shape mismatch in " + prefix);
    p.layers.push_back({std::move(w), b.col(0)});
  }
  return p;
}

}  // namespace

json spec_to_json(const MlpSpec& spec) {
  return {{"state_dim", spec.state_dim},
          {"condition_dim", spec.condition_dim},
          {"time_embed_pairs", spec.time_embed_pairs},
          {"hidden", spec.hidden},
          {"output_dim", spec.output_dim},
          {"activation", "tanh"}};
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec s;
  s.state_dim = j.at("state_dim").get<int>();
  s.condition_dim = j.at("condition_dim").get<int>();
  s.time_embed_pairs = j.at("time_embed_pairs").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.output_dim = j.at("output_dim").get<int>();
  return s;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json j;
  j["format"] = kCheckpointFormat;
  j["role"] = ckpt.role;
  j["spec"] = spec_to_json(ckpt.spec);
  j["parameters"] = arrays_to_json(ckpt.params);
  j["ema"] = {{"decay", ckpt.ema.decay}, {"shadow", arrays_to_json(ckpt.ema.shadow)}};
  j["optimizer"] = {{"kind", "adam"},
                    {"step", ckpt.adam.step},
                    {"learning_rate", ckpt.adam.learning_rate},
                    {"beta1", ckpt.adam.beta1},
                    {"beta2", ckpt.adam.beta2},
                    {"eps_hat", ckpt.adam.eps_hat},
                    {"m", arrays_to_json(ckpt.adam.m)},
                    {"v", arrays_to_json(ckpt.adam.v)}};
  j["rng_lineage"] = ckpt.rng_lineage;
  j["meta"] = ckpt.meta;
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw CheckpointError("unsupported checkpoint format");
    Checkpoint c;
    c.role = j.at("role").get<std::string>();
    c.spec = spec_from_json(j.at("spec"));
    c.params = arrays_from_json(j.at("parameters"));
    c.ema.decay = j.at("ema").at("decay").get<double>();
    c.ema.shadow = arrays_from_json(j.at("ema").at("shadow"));
    const json& opt = j.at("optimizer");
    c.adam.step = opt.at("step").get<long>();
    c.adam.learning_rate = opt.at("learning_rate").get<double>();
    c.adam.beta1 = opt.at("beta1").get<double>();
    c.adam.beta2 = opt.at("beta2").get<double>();
    c.adam.eps_hat = opt.at("eps_hat").get<double>();
    c.adam.m = arrays_from_json(opt.at("m"));
    c.adam.v = arrays_from_json(opt.at("v"));
    c.rng_lineage = j.at("rng_lineage").get<std::vector<std::string>>();
    c.meta = j.at("meta");
    if (!c.params.same_shape(c.ema.shadow) || !c.params.same_shape(c.adam.m) ||
        !c.params.same_shape(c.adam.v))
      throw CheckpointError("checkpoint arrays disagree in shape");
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(ckpt);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

std::string checkpoint_hash(const Checkpoint& ckpt) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_checkpoint(ckpt))));
  return hex;
}

}  // namespace rsb
