#include "cgpi/algos.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cgpi {

AlgoVariant parse_variant(const std::string& name) {
  if (name == "ddpg") return AlgoVariant::Ddpg;
  if (name == "td3") return AlgoVariant::Td3;
  if (name == "tds") return AlgoVariant::Tds;
  if (name == "sac") return AlgoVariant::Sac;
  throw std::invalid_argument("algos: unknown variant '" + name + "'");
}

const char* variant_name(AlgoVariant v) {
  switch (v) {
    case AlgoVariant::Ddpg: return "ddpg";
    case AlgoVariant::Td3: return "td3";
    case AlgoVariant::Tds: return "tds";
    case AlgoVariant::Sac: return "sac";
  }
  return "?";
}

VariantTraits variant_traits(AlgoVariant v) {
  VariantTraits t;
  switch (v) {
    case AlgoVariant::Ddpg:
      t.twin_critic = false;
      t.has_target_policy = true;
      break;
    case AlgoVariant::Td3:
      t.has_target_policy = true;
      t.target_smoothing = true;
      t.policy_update_period = 2;
      break;
    case AlgoVariant::Tds:
      t.stochastic_actor = true;
      break;
    case AlgoVariant::Sac:
      t.stochastic_actor = true;
      t.entropy_term = true;
      break;
  }
  return t;
}

AlgoConfig AlgoConfig::for_variant(AlgoVariant v) {
  const VariantTraits t = variant_traits(v);
  AlgoConfig c;
  c.policy_update_period = t.policy_update_period;
  c.has_target_policy = t.has_target_policy;
  return c;
}

std::vector<int> AlgoConfig::hidden() const {
  std::vector<int> out;
  std::stringstream ss(hidden_layers);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    const int v = std::stoi(tok);
    if (v <= 0) throw std::invalid_argument("algos: hidden layer sizes must be positive");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("algos: empty hidden_layers");
  return out;
}

double AlgoConfig::resolved_entropy_target(int action_dim) const {
  return std::isnan(entropy_target) ? -static_cast<double>(action_dim) : entropy_target;
}

NoiseSpec AlgoConfig::noise_spec() const {
  return {rollout_sigma, target_sigma, target_clip, action_limit};
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("algos: bad value '" + value + "' for key '" + key + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("algos: bad value '" + value + "' for key '" + key + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("algos: bad value '" + value + "' for key '" + key + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void AlgoConfig::set(const std::string& key, const std::string& value) {
  if (key == "collection_steps") collection_steps = parse_int(key, value);
  else if (key == "random_action_steps") random_action_steps = parse_int(key, value);
  else if (key == "hidden_layers") hidden_layers = value;
  else if (key == "learning_rate") learning_rate = parse_double(key, value);
  else if (key == "buffer_size") buffer_size = parse_int(key, value);
  else if (key == "action_limit") action_limit = parse_double(key, value);
  else if (key == "tau") tau = parse_double(key, value);
  else if (key == "critic_updates_per_env_step")
    critic_updates_per_env_step = static_cast<int>(parse_int(key, value));
  else if (key == "policy_update_period")
    policy_update_period = static_cast<int>(parse_int(key, value));
  else if (key == "has_target_policy") has_target_policy = parse_bool(key, value);
  else if (key == "entropy_target")
    entropy_target = value == "auto" ? std::numeric_limits<double>::quiet_NaN()
                                     : parse_double(key, value);
  else if (key == "log_std_min") log_std_min = parse_double(key, value);
  else if (key == "log_std_max") log_std_max = parse_double(key, value);
  else if (key == "target_sigma") target_sigma = parse_double(key, value);
  else if (key == "target_clip") target_clip = parse_double(key, value);
  else if (key == "rollout_sigma") rollout_sigma = parse_double(key, value);
  else if (key == "gamma") gamma = parse_double(key, value);
  else if (key == "batch_size") batch_size = parse_int(key, value);
  else if (key == "initial_alpha") initial_alpha = parse_double(key, value);
  else if (key == "eval_episodes") eval_episodes = static_cast<int>(parse_int(key, value));
  else
    throw std::invalid_argument("algos: unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> AlgoConfig::to_key_values() const {
  return {
      {"collection_steps", std::to_string(collection_steps)},
      {"random_action_steps", std::to_string(random_action_steps)},
      {"hidden_layers", hidden_layers},
      {"learning_rate", format_double(learning_rate)},
      {"buffer_size", std::to_string(buffer_size)},
      {"action_limit", format_double(action_limit)},
      {"tau", format_double(tau)},
      {"critic_updates_per_env_step", std::to_string(critic_updates_per_env_step)},
      {"policy_update_period", std::to_string(policy_update_period)},
      {"has_target_policy", has_target_policy ? "true" : "false"},
      {"entropy_target", std::isnan(entropy_target) ? "auto" : format_double(entropy_target)},
      {"log_std_min", format_double(log_std_min)},
      {"log_std_max", format_double(log_std_max)},
      {"target_sigma", format_double(target_sigma)},
      {"target_clip", format_double(target_clip)},
      {"rollout_sigma", format_double(rollout_sigma)},
      {"gamma", format_double(gamma)},
      {"batch_size", std::to_string(batch_size)},
      {"initial_alpha", format_double(initial_alpha)},
      {"eval_episodes", std::to_string(eval_episodes)},
  };
}

void load_config_file(const std::string& path, AlgoConfig& config) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("algos: cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("algos: " + path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void temperature_update(TemperatureState& ts, const Eigen::VectorXd& log_probs) {
  const double residual = log_probs.mean() + ts.target_entropy;
  Eigen::VectorXd grad(1);
  grad[0] = -ts.alpha() * residual;
  adam_step(ts.opt, ts.log_alpha, grad, "temperature");
}

Eigen::VectorXd compute_targets(AlgoVariant variant, const TwinCritic& critic,
                                const ActorSet& actors, const BellmanBatch& batch, double alpha,
                                double gamma, const NoiseSpec& noise, Rng& rng) {
  if (batch.size() == 0) throw std::invalid_argument("algos: empty batch");
  const VariantTraits t = variant_traits(variant);

  Eigen::VectorXd next_value;
  if (t.stochastic_actor) {
    const Eigen::MatrixXd eta = rng.normal_matrix(critic.action_dim,
                                                  static_cast<int>(batch.size()));
    const SquashedSample s = sample_squashed(*actors.gauss, batch.next_states, eta);
    auto [q1, q2] = twin_eval(critic, batch.next_states, s.actions, CriticSet::Target);
    const double effective_alpha = t.entropy_term ? alpha : 0.0;
    next_value = soft_value(min_q(q1, q2), effective_alpha, s.log_probs);
  } else {
    Eigen::MatrixXd next_actions = act_deterministic(*actors.det_target, batch.next_states);
    if (t.target_smoothing) next_actions = target_smoothing(next_actions, noise, rng);
    auto [q1, q2] = twin_eval(critic, batch.next_states, next_actions, CriticSet::Target);
    next_value = t.twin_critic ? min_q(q1, q2) : q1;
  }
  if (!next_value.allFinite())
    throw std::runtime_error("algos: non-finite value in target computation");
  return bellman_target(batch.rewards, batch.dones, gamma, next_value);
}

ActorGrads actor_gradient(AlgoVariant variant, const TwinCritic& critic, const ActorSet& actors,
                          const Eigen::MatrixXd& states, double alpha,
                          const Eigen::MatrixXd& eta) {
  if (states.cols() == 0) throw std::invalid_argument("algos: empty state batch");
  const VariantTraits t = variant_traits(variant);
  const double n = static_cast<double>(states.cols());
  ActorGrads out;

  if (!t.stochastic_actor) {
    // Chain -1/N * grad_a Q1(s, a)|_{a = mu(s)} through the actor (Q1 only).
    ForwardCache actor_cache;
    const Eigen::MatrixXd actions = actors.det->net.forward(states, &actor_cache);
    const Eigen::MatrixXd x = critic.pack_input(states, actions);
    ForwardCache q_cache;
    const Eigen::MatrixXd q = critic.q1.forward(x, &q_cache);
    out.loss = -q.row(0).mean();
    const Eigen::MatrixXd upstream =
        Eigen::MatrixXd::Constant(1, states.cols(), -1.0 / n);
    const GradientBundle qb = critic.q1.backward(q_cache, upstream);
    const Eigen::MatrixXd g_action = qb.input_grads.bottomRows(critic.action_dim);
    out.grads = actors.det->net.backward(actor_cache, g_action).param_grads;
    return out;
  }

  const SquashedSample sample = sample_squashed(*actors.gauss, states, eta);
  const Eigen::MatrixXd x = critic.pack_input(states, sample.actions);
  ForwardCache c1, c2;
  const Eigen::MatrixXd q1 = critic.q1.forward(x, &c1);
  const Eigen::MatrixXd q2 = critic.q2.forward(x, &c2);

  // Route -1/N through whichever critic attains the per-sample min.
  Eigen::MatrixXd up1 = Eigen::MatrixXd::Zero(1, states.cols());
  Eigen::MatrixXd up2 = Eigen::MatrixXd::Zero(1, states.cols());
  double q_min_sum = 0.0;
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    if (q1(0, j) <= q2(0, j)) {
      up1(0, j) = -1.0 / n;
      q_min_sum += q1(0, j);
    } else {
      up2(0, j) = -1.0 / n;
      q_min_sum += q2(0, j);
    }
  }
  const Eigen::MatrixXd g_action =
      (critic.q1.backward(c1, up1).input_grads + critic.q2.backward(c2, up2).input_grads)
          .bottomRows(critic.action_dim);

  const double effective_alpha = t.entropy_term ? alpha : 0.0;
  out.loss = (effective_alpha * sample.log_probs.sum() - q_min_sum) / n;
  const Eigen::VectorXd g_logprob =
      Eigen::VectorXd::Constant(states.cols(), effective_alpha / n);
  out.grads = squashed_param_grads(*actors.gauss, sample, g_action, g_logprob);
  out.log_probs = sample.log_probs;
  return out;
}

Trainer::Trainer(AlgoVariant variant, AlgoConfig config, const std::string& env_name,
                 std::uint64_t seed)
    : variant_(variant),
      traits_(variant_traits(variant)),
      config_(std::move(config)),
      env_name_(env_name),
      env_(make_env(env_name)),
      seed_(seed),
      rng_(seed),
      buffer_(config_.buffer_size, env_->spec().state_dim, env_->spec().action_dim) {
  const int sdim = env_->spec().state_dim;
  const int adim = env_->spec().action_dim;
  const std::vector<int> hidden = config_.hidden();

  if (traits_.stochastic_actor) {
    actors_.gauss = GaussianPolicy::make(sdim, adim, hidden, rng_);
    actors_.gauss->log_std_min = config_.log_std_min;
    actors_.gauss->log_std_max = config_.log_std_max;
    actor_opt_ = AdamState::zeros(actors_.gauss->net.param_count(), config_.learning_rate);
  } else {
    actors_.det = DeterministicPolicy::make(sdim, adim, hidden, rng_);
    actors_.det_target = actors_.det;
    actor_opt_ = AdamState::zeros(actors_.det->net.param_count(), config_.learning_rate);
  }
  critic_ = TwinCritic::make(sdim, adim, hidden, rng_);
  q1_opt_ = AdamState::zeros(critic_.q1.param_count(), config_.learning_rate);
  q2_opt_ = AdamState::zeros(critic_.q2.param_count(), config_.learning_rate);

  temperature_.log_alpha[0] = std::log(config_.initial_alpha);
  temperature_.target_entropy = config_.resolved_entropy_target(adim);
  temperature_.opt = AdamState::zeros(1, config_.learning_rate);

  // Fixed probe set for the policy-std trace, independent of the training stream.
  Rng probe_rng(seed ^ 0x51f15eedcafeull);
  const int n_probes = 16;
  probe_states_.resize(sdim, n_probes);
  const auto probe_env = make_env(env_name);
  for (int i = 0; i < n_probes; ++i) probe_states_.col(i) = probe_env->reset(probe_rng);
}

double Trainer::alpha() const {
  return traits_.entropy_term ? temperature_.alpha() : 0.0;
}

Eigen::VectorXd Trainer::eval_action(const Eigen::VectorXd& state) const {
  return traits_.stochastic_actor ? act_mean(*actors_.gauss, state)
                                  : act_deterministic(*actors_.det, state);
}

Eigen::VectorXd Trainer::select_action(const Eigen::VectorXd& state) {
  const int adim = env_->spec().action_dim;
  if (env_step_count_ < config_.random_action_steps) {
    Eigen::VectorXd a(adim);
    for (int i = 0; i < adim; ++i) a[i] = rng_.uniform(-config_.action_limit, config_.action_limit);
    return a;
  }
  if (traits_.stochastic_actor)
    return sample_squashed(*actors_.gauss, state, rng_.normal_vector(adim)).first;
  return rollout_noise(act_deterministic(*actors_.det, state), config_.noise_spec(), rng_);
}

void Trainer::update_once() {
  const BellmanBatch batch = buffer_.sample(config_.batch_size, rng_);
  const Eigen::VectorXd targets = compute_targets(variant_, critic_, actors_, batch, alpha(),
                                                  config_.gamma, config_.noise_spec(), rng_);
  const CriticGrads cg = critic_loss_and_grads(critic_, batch.states, batch.actions, targets);
  if (!std::isfinite(cg.loss))
    throw std::runtime_error("algos: NaN critic loss at env step " +
                             std::to_string(env_step_count_));
  adam_step(q1_opt_, critic_.q1.params(), cg.q1_grads, "q1");
  if (traits_.twin_critic) adam_step(q2_opt_, critic_.q2.params(), cg.q2_grads, "q2");
  ++critic_update_count_;

  if (critic_update_count_ % config_.policy_update_period == 0) {
    const int adim = env_->spec().action_dim;
    const Eigen::MatrixXd eta =
        traits_.stochastic_actor
            ? rng_.normal_matrix(adim, static_cast<int>(batch.size()))
            : Eigen::MatrixXd();
    const ActorGrads ag = actor_gradient(variant_, critic_, actors_, batch.states, alpha(), eta);
    if (!std::isfinite(ag.loss))
      throw std::runtime_error("algos: NaN actor loss at env step " +
                               std::to_string(env_step_count_));
    Eigen::VectorXd& actor_params =
        traits_.stochastic_actor ? actors_.gauss->net.params() : actors_.det->net.params();
    adam_step(actor_opt_, actor_params, ag.grads, "actor");
    if (traits_.entropy_term) temperature_update(temperature_, ag.log_probs);
    ++actor_update_count_;

    polyak_update(critic_, config_.tau);
    if (traits_.has_target_policy)
      ema_update(actors_.det_target->net.params(), actors_.det->net.params(), config_.tau);
  }
}

double Trainer::current_sigma_mean() const {
  if (!traits_.stochastic_actor) return config_.rollout_sigma;
  return policy_std(*actors_.gauss, probe_states_).mean();
}

std::pair<double, double> Trainer::evaluate(int episodes, Rng& rng) const {
  const auto env = make_env(env_name_);
  Eigen::VectorXd returns(episodes);
  for (int e = 0; e < episodes; ++e) {
    Eigen::VectorXd s = env->reset(rng);
    double total = 0.0;
    while (true) {
      const StepResult r = env->step(eval_action(s));
      total += r.reward;
      if (r.episode_over()) break;
      s = r.next_state;
    }
    returns[e] = total;
  }
  const double mean = returns.mean();
  const double sd = episodes > 1
                        ? std::sqrt((returns.array() - mean).square().sum() / (episodes - 1))
                        : 0.0;
  return {mean, sd};
}

double Trainer::mean_log_prob(std::int64_t n) {
  if (!traits_.stochastic_actor)
    throw std::logic_error("algos: mean_log_prob needs a stochastic actor");
  const BellmanBatch batch = buffer_.sample(n, rng_);
  const Eigen::MatrixXd eta =
      rng_.normal_matrix(env_->spec().action_dim, static_cast<int>(n));
  return sample_squashed(*actors_.gauss, batch.states, eta).log_probs.mean();
}

LearningCurve Trainer::train(std::int64_t total_steps, std::int64_t eval_every) {
  LearningCurve curve;
  Eigen::VectorXd state = env_->reset(rng_);
  for (std::int64_t step = 1; step <= total_steps; ++step) {
    const Eigen::VectorXd action = select_action(state);
    const StepResult res = env_->step(action);
    buffer_.push({state, action, res.reward, res.next_state, res.terminal ? 1.0 : 0.0});
    ++env_step_count_;
    state = res.episode_over() ? env_->reset(rng_) : res.next_state;

    if (env_step_count_ >= config_.collection_steps)
      for (int k = 0; k < config_.critic_updates_per_env_step; ++k) update_once();

    if (eval_every > 0 && step % eval_every == 0) {
      Rng eval_rng(seed_ * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(step));
      const auto [mean, sd] = evaluate(config_.eval_episodes, eval_rng);
      CurvePoint p;
      p.step = step;
      p.eval_mean = mean;
      p.eval_std = sd;
      p.sigma_mean = current_sigma_mean();
      if (traits_.entropy_term) p.alpha = temperature_.alpha();
      curve.points.push_back(p);
    }
  }
  return curve;
}

}  // namespace cgpi
