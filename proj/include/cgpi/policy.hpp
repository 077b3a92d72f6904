#pragma once

#include <utility>

#include <Eigen/Core>

#include "cgpi/diffnet.hpp"
#include "cgpi/rng.hpp"

namespace cgpi {

// Exploration / target-smoothing noise parameters (TD3 rows of the
// hyperparameter table).
struct NoiseSpec {
  double rollout_sigma = 0.1;
  double target_sigma = 0.2;
  double target_clip = 0.5;   // inner clip, symmetric about 0
  double action_limit = 1.0;  // actions live in [-limit, limit]
};

// Deterministic actor mu(s): tanh-bounded network output.
struct DeterministicPolicy {
  Mlp net;  // state -> action, tanh on every output
  int action_dim = 0;

  static DeterministicPolicy make(int state_dim, int action_dim,
                                  const std::vector<int>& hidden, Rng& rng);
};

Eigen::VectorXd act_deterministic(const DeterministicPolicy& policy, const Eigen::VectorXd& state);
Eigen::MatrixXd act_deterministic(const DeterministicPolicy& policy, const Eigen::MatrixXd& states);

// Adds N(0, rollout_sigma^2) per component (no inner clip), then clips the sum
// into the action bounds.
Eigen::VectorXd rollout_noise(const Eigen::VectorXd& action, const NoiseSpec& spec, Rng& rng);

// TD3 target-policy smoothing: noise ~ N(0, target_sigma^2) clipped into
// [-target_clip, target_clip] per component, added, then bound-clipped.
Eigen::VectorXd target_smoothing(const Eigen::VectorXd& action, const NoiseSpec& spec, Rng& rng);
Eigen::MatrixXd target_smoothing(const Eigen::MatrixXd& actions, const NoiseSpec& spec, Rng& rng);

// Squashed-Gaussian actor with learned per-state log-std head. The network
// emits 2*action_dim values: pre-squash mean, then log-std (clamped before use).
struct GaussianPolicy {
  Mlp net;  // state -> [u_mean; log_std], linear outputs
  int action_dim = 0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  static GaussianPolicy make(int state_dim, int action_dim,
                             const std::vector<int>& hidden, Rng& rng);
};

// One reparameterized batch draw plus everything needed to backpropagate
// through it later.
struct SquashedSample {
  Eigen::MatrixXd actions;    // tanh(u), action_dim x N
  Eigen::VectorXd log_probs;  // N
  Eigen::MatrixXd pre_squash;  // u = mean + sigma .* eta
  Eigen::MatrixXd sigma;       // exp(clamped log_std)
  Eigen::MatrixXd eta;
  Eigen::MatrixXd raw_log_std;  // pre-clamp head output (clamp mask for grads)
  ForwardCache net_cache;
};

SquashedSample sample_squashed(const GaussianPolicy& policy, const Eigen::MatrixXd& states,
                               const Eigen::MatrixXd& eta);
std::pair<Eigen::VectorXd, double> sample_squashed(const GaussianPolicy& policy,
                                                   const Eigen::VectorXd& state,
                                                   const Eigen::VectorXd& eta);

// Gradient w.r.t. policy parameters of
//   sum_j [ g_action(:,j) . action_j + g_logprob(j) * log_prob_j ]
// for the fixed-eta draw captured in `sample`. Gradients through the log-std
// clamp are zero outside the clamp range.
Eigen::VectorXd squashed_param_grads(const GaussianPolicy& policy, const SquashedSample& sample,
                                     const Eigen::MatrixXd& g_action,
                                     const Eigen::VectorXd& g_logprob);

// Mean action tanh(u_mean); the evaluation-time policy for SAC/TDS.
Eigen::VectorXd act_mean(const GaussianPolicy& policy, const Eigen::VectorXd& state);

// Per-dimension std exp(clamped log_std) for each state column.
Eigen::MatrixXd policy_std(const GaussianPolicy& policy, const Eigen::MatrixXd& states);

// Differential entropy of a 1-D Gaussian: ln(sigma * sqrt(2*pi*e)).
double gaussian_entropy(double sigma);

}  // namespace cgpi
