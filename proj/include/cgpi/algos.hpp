#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgpi/critic.hpp"
#include "cgpi/envs.hpp"
#include "cgpi/policy.hpp"
#include "cgpi/replay.hpp"

namespace cgpi {

// One trainer, four specializations. Two axes distinguish them: stochastic
// actor (reparameterized Gaussian vs deterministic) and entropy term.
enum class AlgoVariant { Ddpg, Td3, Tds, Sac };

AlgoVariant parse_variant(const std::string& name);
const char* variant_name(AlgoVariant v);

struct VariantTraits {
  bool stochastic_actor = false;
  bool entropy_term = false;
  bool twin_critic = true;        // DDPG drops the twin-min heuristic
  bool has_target_policy = false;
  bool target_smoothing = false;  // TD3 only
  int policy_update_period = 1;
};

VariantTraits variant_traits(AlgoVariant v);

// Full hyperparameter record. Defaults follow the reference table; fields the
// table omits (gamma, batch size, initial alpha) carry documented defaults.
struct AlgoConfig {
  std::int64_t collection_steps = 1000;
  std::int64_t random_action_steps = 10000;
  std::string hidden_layers = "256:256:256";
  double learning_rate = 3e-4;
  std::int64_t buffer_size = 1000000;
  double action_limit = 1.0;
  double tau = 5e-3;
  int critic_updates_per_env_step = 1;
  int policy_update_period = 1;  // 2 for TD3: one policy/target update per 2 critic updates
  bool has_target_policy = false;
  double entropy_target = std::numeric_limits<double>::quiet_NaN();  // NaN = -dim(A)
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double target_sigma = 0.2;
  double target_clip = 0.5;
  double rollout_sigma = 0.1;
  double gamma = 0.99;
  std::int64_t batch_size = 256;
  double initial_alpha = 1.0;
  int eval_episodes = 10;

  static AlgoConfig for_variant(AlgoVariant v);

  std::vector<int> hidden() const;
  double resolved_entropy_target(int action_dim) const;
  NoiseSpec noise_spec() const;

  // Throws on unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

// Flat `key = value` config file; '#' starts a comment; unknown keys are errors.
void load_config_file(const std::string& path, AlgoConfig& config);

// Auto-tuned SAC temperature, optimized in log space so alpha stays positive.
struct TemperatureState {
  Eigen::VectorXd log_alpha = Eigen::VectorXd::Zero(1);
  double target_entropy = -1.0;
  AdamState opt = AdamState::zeros(1);

  double alpha() const { return std::exp(log_alpha[0]); }
};

// One Adam step on log_alpha along d/d(log_alpha) of
// J(alpha) = -alpha * mean(log_prob + target_entropy):
// alpha rises when measured entropy is below target, falls when above.
void temperature_update(TemperatureState& ts, const Eigen::VectorXd& log_probs);

// Whichever actor networks the variant needs.
struct ActorSet {
  std::optional<DeterministicPolicy> det;
  std::optional<DeterministicPolicy> det_target;
  std::optional<GaussianPolicy> gauss;
};

// Per-sample Bellman targets, built from target critics.
// TD3/DDPG: smoothed (TD3) target-policy action; TDS: fresh reparameterized
// sample from the current policy; SAC: same, with the entropy-augmented value.
Eigen::VectorXd compute_targets(AlgoVariant variant, const TwinCritic& critic,
                                const ActorSet& actors, const BellmanBatch& batch, double alpha,
                                double gamma, const NoiseSpec& noise, Rng& rng);

struct ActorGrads {
  double loss = 0.0;               // scalar objective being minimized (-J_pi)
  Eigen::VectorXd grads;           // w.r.t. the actor's parameters
  Eigen::VectorXd log_probs;       // empty for deterministic variants
};

// Gradient of the policy-improvement loss on `states`, with eta fixed so the
// result is checkable against finite differences. TD3/DDPG chain through Q1
// only; TDS through the twin min; SAC adds the entropy term.
ActorGrads actor_gradient(AlgoVariant variant, const TwinCritic& critic, const ActorSet& actors,
                          const Eigen::MatrixXd& states, double alpha, const Eigen::MatrixXd& eta);

struct CurvePoint {
  std::int64_t step = 0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
  double sigma_mean = 0.0;  // constant rollout sigma for deterministic variants
  double alpha = std::numeric_limits<double>::quiet_NaN();  // NaN unless SAC
};

struct LearningCurve {
  std::vector<CurvePoint> points;
};

// The generalized-policy-iteration loop: act, store, critic step per env step,
// delayed actor/temperature/target steps, periodic deterministic evaluation.
class Trainer {
 public:
  Trainer(AlgoVariant variant, AlgoConfig config, const std::string& env_name,
          std::uint64_t seed);

  LearningCurve train(std::int64_t total_steps, std::int64_t eval_every);

  AlgoVariant variant() const { return variant_; }
  const AlgoConfig& config() const { return config_; }
  const TwinCritic& critic() const { return critic_; }
  const ActorSet& actors() const { return actors_; }
  double alpha() const;
  const Eigen::MatrixXd& probe_states() const { return probe_states_; }
  std::int64_t critic_updates() const { return critic_update_count_; }
  std::int64_t actor_updates() const { return actor_update_count_; }

  // Evaluation-time action (mean action; no exploration noise).
  Eigen::VectorXd eval_action(const Eigen::VectorXd& state) const;

  // Mean and sample std of undiscounted returns over fresh episodes.
  std::pair<double, double> evaluate(int episodes, Rng& rng) const;

  // Mean log pi over fresh on-policy samples from `n` replay states.
  double mean_log_prob(std::int64_t n);

 private:
  AlgoVariant variant_;
  VariantTraits traits_;
  AlgoConfig config_;
  std::string env_name_;
  std::unique_ptr<Env> env_;
  std::uint64_t seed_;
  Rng rng_;

  ActorSet actors_;
  TwinCritic critic_;
  ReplayBuffer buffer_;
  AdamState q1_opt_, q2_opt_, actor_opt_;
  TemperatureState temperature_;
  Eigen::MatrixXd probe_states_;

  std::int64_t env_step_count_ = 0;
  std::int64_t critic_update_count_ = 0;
  std::int64_t actor_update_count_ = 0;

  Eigen::VectorXd select_action(const Eigen::VectorXd& state);
  void update_once();
  double current_sigma_mean() const;
};

}  // namespace cgpi
