#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "cgpi/rng.hpp"

namespace cgpi {

// Reverse-mode gradients of (upstream . output) w.r.t. all parameters and the
// network input. Parameter gradients use the same flat layout as Mlp::params().
struct GradientBundle {
  Eigen::VectorXd param_grads;
  Eigen::MatrixXd input_grads;  // one column per batch column
};

// Activations saved by a forward pass: [input, hidden_1, ..., output].
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
};

// Feed-forward network with ReLU hidden units. The first `tanh_output_dims`
// output components pass through tanh, the rest are linear. All parameters
// live in one flat vector (per layer: weight matrix, then bias) so optimizer
// steps, Polyak averaging, and checkpointing operate on a single array.
class Mlp {
 public:
  Mlp() = default;

  // Weights initialized uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  Mlp(std::vector<int> layer_sizes, int tanh_output_dims, Rng& rng);

  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int tanh_output_dims() const { return tanh_output_dims_; }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  // Batched forward: one column per sample.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  // Exact reverse-mode gradients; param grads are summed over batch columns.
  GradientBundle backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream) const;
  GradientBundle backward(const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) const;

  // Throws if any parameter is non-finite; `context` names the network.
  void check_finite(const std::string& context) const;

  // Versioned binary checkpoint; parameter arrays stored row-major.
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

 private:
  std::vector<int> layer_sizes_;
  int tanh_output_dims_ = 0;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> weight_offsets_;
  std::vector<Eigen::Index> bias_offsets_;

  void build_offsets();
};

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Eigen::Index n, double lr = 3e-4);
};

// Standard bias-corrected Adam update, in place. Throws on non-finite
// gradients, naming `context`.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               const std::string& context = "");

// target <- (1 - tau) * target + tau * online, componentwise.
void ema_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double tau);

}  // namespace cgpi
