#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsb/rng.hpp"

namespace rsb {

/// Fully-connected tanh network over the input [state; condition; embed(t)].
/// A predictor that only sees the measurement uses state_dim = 0 and
/// time_embed_pairs = 0.
struct MlpSpec {
  int state_dim = 1;
  int condition_dim = 1;
  int time_embed_pairs = 8;
  std::vector<int> hidden{128, 128};
  int output_dim = 1;

  int input_dim() const { return state_dim + condition_dim + 2 * time_embed_pairs; }
  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Layers in forward order. Every layer but the last is followed by tanh.
struct ModelParameters {
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  bool same_shape(const ModelParameters& other) const;
  bool all_finite() const;
  ModelParameters zeros_like() const;

  /// Visits each weight/bias array with a stable name ("layer0.weight", ...).
  void visit_arrays_mut(const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& fn);
  void visit_arrays(
      const std::function<void(const std::string&, const Eigen::Ref<const Eigen::MatrixXd>&)>& fn)
      const;

  /// Flat copy in layer order, each array row-major.
  Eigen::VectorXd flatten() const;
  void assign_flat(const Eigen::VectorXd& flat);
};

/// sin/cos pairs at frequencies geometric between 1 and 1000.
Eigen::VectorXd time_embedding(double t, int pairs);

Eigen::VectorXd assemble_input(const MlpSpec& spec, const Eigen::VectorXd& x_t, double t,
                               const Eigen::VectorXd& condition);

/// Glorot-uniform weights, zero biases.
ModelParameters init_parameters(const MlpSpec& spec, Rng& rng);

/// Raw network map; `inputs` holds one assembled input per column.
Eigen::MatrixXd forward_batch(const ModelParameters& params, const Eigen::MatrixXd& inputs);

/// Throws DimensionError on shape mismatch, std::invalid_argument on a
/// non-finite input.
Eigen::VectorXd forward(const ModelParameters& params, const MlpSpec& spec,
                        const Eigen::VectorXd& x_t, double t, const Eigen::VectorXd& condition);

/// Batched form of `forward` with one (state, condition) per column and a
/// shared time.
Eigen::MatrixXd forward_states(const ModelParameters& params, const MlpSpec& spec,
                               const Eigen::MatrixXd& states, double t,
                               const Eigen::MatrixXd& conditions);

struct LossAndGradients {
  double loss = 0.0;
  ModelParameters gradients;
};

/// Mean over the batch of the mean squared coordinate error, with exact
/// reverse-mode gradients. Throws DivergenceError on a non-finite loss.
LossAndGradients loss_and_gradients(const ModelParameters& params, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& targets);

struct AdamState {
  ModelParameters m;
  ModelParameters v;
  long step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState for_params(const ModelParameters& params, double learning_rate = 1e-4);
};

void adam_update(ModelParameters& params, const ModelParameters& grads, AdamState& state);

struct EmaState {
  ModelParameters shadow;
  double decay = 0.999;
};

void ema_update(EmaState& ema, const ModelParameters& params);

}  // namespace rsb
