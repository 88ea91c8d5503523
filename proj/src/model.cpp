#include "rsb/model.hpp"

#include <cmath>
#include <stdexcept>

#include "rsb/errors.hpp"

namespace rsb {

void MlpSpec::validate() const {
  if (state_dim < 0 || condition_dim < 0 || time_embed_pairs < 0)
    throw ConfigError("model dimensions must be non-negative");
  if (input_dim() < 1) throw ConfigError("model input dimension must be positive");
  if (output_dim < 1) throw ConfigError("model output dimension must be positive");
  if (hidden.empty()) throw ConfigError("model needs at least one hidden layer");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
}

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool ModelParameters::same_shape(const ModelParameters& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size())
      return false;
  }
  return true;
}

bool ModelParameters::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers)
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  return z;
}

void ModelParameters::visit_arrays_mut(
    const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& fn) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::string prefix = "layer" + std::to_string(i);
    fn(prefix + ".weight", layers[i].weight);
    fn(prefix + ".bias", layers[i].bias);
  }
}

void ModelParameters::visit_arrays(
    const std::function<void(const std::string&, const Eigen::Ref<const Eigen::MatrixXd>&)>& fn)
    const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::string prefix = "layer" + std::to_string(i);
    fn(prefix + ".weight", layers[i].weight);
    fn(prefix + ".bias", layers[i].bias);
  }
}

Eigen::VectorXd ModelParameters::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[at++] = l.weight(r, c);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat[at++] = l.bias[r];
  }
  return flat;
}

void ModelParameters::assign_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count()))
    throw DimensionError("flat parameter vector has wrong length");
  Eigen::Index at = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[at++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[at++];
  }
}

Eigen::VectorXd time_embedding(double t, int pairs) {
  Eigen::VectorXd e(2 * pairs);
  for (int k = 0; k < pairs; ++k) {
    double freq = pairs == 1 ? 1.0 : std::pow(1000.0, double(k) / (pairs - 1));
    e[2 * k] = std::sin(freq * t);
    e[2 * k + 1] = std::cos(freq * t);
  }
  return e;
}

Eigen::VectorXd assemble_input(const MlpSpec& spec, const Eigen::VectorXd& x_t, double t,
                               const Eigen::VectorXd& condition) {
  if (x_t.size() != spec.state_dim) throw DimensionError("state has wrong dimension for model");
  if (condition.size() != spec.condition_dim)
    throw DimensionError("condition has wrong dimension for model");
  if (!x_t.allFinite() || !condition.allFinite() || !std::isfinite(t))
    throw std::invalid_argument("non-finite model input");
  Eigen::VectorXd in(spec.input_dim());
  in << x_t, condition, time_embedding(t, spec.time_embed_pairs);
  return in;
}

ModelParameters init_parameters(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<int> widths{spec.input_dim()};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_dim);
  ModelParameters p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    int fan_in = widths[i];
    int fan_out = widths[i + 1];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Eigen::MatrixXd forward_batch(const ModelParameters& params, const Eigen::MatrixXd& inputs) {
  if (params.layers.empty()) throw std::invalid_argument("model has no layers");
  if (inputs.rows() != params.layers.front().weight.cols())
    throw DimensionError("input width does not match the first layer");
  Eigen::MatrixXd h = inputs;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = l.weight * h;
    z.colwise() += l.bias;
    h = i + 1 < params.layers.size() ? Eigen::MatrixXd(z.array().tanh()) : std::move(z);
  }
  return h;
}

Eigen::VectorXd forward(const ModelParameters& params, const MlpSpec& spec,
                        const Eigen::VectorXd& x_t, double t, const Eigen::VectorXd& condition) {
  Eigen::MatrixXd out = forward_batch(params, assemble_input(spec, x_t, t, condition));
  if (out.rows() != spec.output_dim) throw DimensionError("model output width differs from spec");
  return out.col(0);
}

Eigen::MatrixXd forward_states(const ModelParameters& params, const MlpSpec& spec,
                               const Eigen::MatrixXd& states, double t,
                               const Eigen::MatrixXd& conditions) {
  if (states.rows() != spec.state_dim || conditions.rows() != spec.condition_dim ||
      states.cols() != conditions.cols())
    throw DimensionError("batched model input has wrong shape");
  const Eigen::Index n = states.cols();
  Eigen::MatrixXd in(spec.input_dim(), n);
  in.topRows(spec.state_dim) = states;
  in.middleRows(spec.state_dim, spec.condition_dim) = conditions;
  if (spec.time_embed_pairs > 0)
    in.bottomRows(2 * spec.time_embed_pairs).colwise() = time_embedding(t, spec.time_embed_pairs);
  if (!in.allFinite()) throw std::invalid_argument("non-finite model input");
  return forward_batch(params, in);
}

LossAndGradients loss_and_gradients(const ModelParameters& params, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& targets) {
  if (inputs.cols() == 0) throw std::invalid_argument("empty batch");
  if (targets.cols() != inputs.cols()) throw DimensionError("inputs and targets differ in batch size");
  const std::size_t n_layers = params.layers.size();

  // Forward pass, keeping each layer's input activation.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(n_layers + 1);
  acts.push_back(inputs);
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = l.weight * acts.back();
    z.colwise() += l.bias;
    if (i + 1 < n_layers) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  const Eigen::MatrixXd& out = acts.back();
  if (out.rows() != targets.rows()) throw DimensionError("targets differ from output width");

  const double scale = 1.0 / double(out.size());
  Eigen::MatrixXd diff = out - targets;
  LossAndGradients result;
  result.loss = scale * diff.squaredNorm();
  if (!std::isfinite(result.loss)) throw DivergenceError("non-finite training loss");

  result.gradients = params.zeros_like();
  Eigen::MatrixXd delta = 2.0 * scale * diff;  // dL/dz of the output layer
  for (std::size_t i = n_layers; i-- > 0;) {
    auto& g = result.gradients.layers[i];
    g.weight.noalias() = delta * acts[i].transpose();
    g.bias = delta.rowwise().sum();
    if (i == 0) break;
    Eigen::MatrixXd back = params.layers[i].weight.transpose() * delta;
    // acts[i] = tanh(z_{i-1}); d tanh = 1 - tanh^2.
    delta = back.array() * (1.0 - acts[i].array().square());
  }
  return result;
}

AdamState AdamState::for_params(const ModelParameters& params, double learning_rate) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  s.learning_rate = learning_rate;
  return s;
}

void adam_update(ModelParameters& params, const ModelParameters& grads, AdamState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v))
    throw DimensionError("adam_update shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= state.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps_hat);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grads.layers[i].weight, state.m.layers[i].weight,
           state.v.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias, state.m.layers[i].bias,
           state.v.layers[i].bias);
  }
}

void ema_update(EmaState& ema, const ModelParameters& params) {
  if (!ema.shadow.same_shape(params)) throw DimensionError("EMA shadow shape mismatch");
  const double d = ema.decay;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& s = ema.shadow.layers[i];
    s.weight = d * s.weight + (1.0 - d) * params.layers[i].weight;
    s.bias = d * s.bias + (1.0 - d) * params.layers[i].bias;
  }
}

}  // namespace rsb
