#include "cgpi/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace cgpi {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kLogTwo = 0.6931471805599453094172321214582;

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
  const double a = std::abs(u);
  return 2.0 * (kLogTwo - a - softplus(-2.0 * a));
}

}  // namespace

DeterministicPolicy DeterministicPolicy::make(int state_dim, int action_dim,
                                              const std::vector<int>& hidden, Rng& rng) {
  DeterministicPolicy p;
  p.net = Mlp(with_io(state_dim, hidden, action_dim), action_dim, rng);
  p.action_dim = action_dim;
  return p;
}

Eigen::VectorXd act_deterministic(const DeterministicPolicy& policy, const Eigen::VectorXd& state) {
  return policy.net.forward(state);
}

Eigen::MatrixXd act_deterministic(const DeterministicPolicy& policy, const Eigen::MatrixXd& states) {
  return policy.net.forward(states);
}

Eigen::VectorXd rollout_noise(const Eigen::VectorXd& action, const NoiseSpec& spec, Rng& rng) {
  Eigen::VectorXd out(action.size());
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    const double noisy = action[i] + spec.rollout_sigma * rng.normal();
    out[i] = std::clamp(noisy, -spec.action_limit, spec.action_limit);
  }
  return out;
}

Eigen::VectorXd target_smoothing(const Eigen::VectorXd& action, const NoiseSpec& spec, Rng& rng) {
  Eigen::VectorXd out(action.size());
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    const double noise =
        std::clamp(spec.target_sigma * rng.normal(), -spec.target_clip, spec.target_clip);
    out[i] = std::clamp(action[i] + noise, -spec.action_limit, spec.action_limit);
  }
  return out;
}

Eigen::MatrixXd target_smoothing(const Eigen::MatrixXd& actions, const NoiseSpec& spec, Rng& rng) {
  Eigen::MatrixXd out(actions.rows(), actions.cols());
  for (Eigen::Index c = 0; c < actions.cols(); ++c)
    for (Eigen::Index r = 0; r < actions.rows(); ++r) {
      const double noise =
          std::clamp(spec.target_sigma * rng.normal(), -spec.target_clip, spec.target_clip);
      out(r, c) = std::clamp(actions(r, c) + noise, -spec.action_limit, spec.action_limit);
    }
  return out;
}

GaussianPolicy GaussianPolicy::make(int state_dim, int action_dim,
                                    const std::vector<int>& hidden, Rng& rng) {
  GaussianPolicy p;
  p.net = Mlp(with_io(state_dim, hidden, 2 * action_dim), 0, rng);
  p.action_dim = action_dim;
  return p;
}

SquashedSample sample_squashed(const GaussianPolicy& policy, const Eigen::MatrixXd& states,
                               const Eigen::MatrixXd& eta) {
  const int adim = policy.action_dim;
  if (eta.rows() != adim || eta.cols() != states.cols())
    throw std::invalid_argument("policy: eta shape does not match action_dim x batch");
  if (!eta.allFinite()) throw std::invalid_argument("policy: non-finite eta");

  SquashedSample s;
  s.eta = eta;
  const Eigen::MatrixXd head = policy.net.forward(states, &s.net_cache);
  const Eigen::MatrixXd mean = head.topRows(adim);
  s.raw_log_std = head.bottomRows(adim);
  const Eigen::MatrixXd log_std =
      s.raw_log_std.array().max(policy.log_std_min).min(policy.log_std_max);
  s.sigma = log_std.array().exp();
  s.pre_squash = mean + s.sigma.cwiseProduct(eta);
  s.actions = s.pre_squash.array().tanh();

  s.log_probs = Eigen::VectorXd::Zero(states.cols());
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    double lp = 0.0;
    for (int r = 0; r < adim; ++r) {
      lp += -0.5 * kLogTwoPi - log_std(r, c) - 0.5 * eta(r, c) * eta(r, c);
      lp -= log_one_minus_tanh_sq(s.pre_squash(r, c));
    }
    s.log_probs[c] = lp;
  }
  return s;
}

std::pair<Eigen::VectorXd, double> sample_squashed(const GaussianPolicy& policy,
                                                   const Eigen::VectorXd& state,
                                                   const Eigen::VectorXd& eta) {
  const SquashedSample s =
      sample_squashed(policy, Eigen::MatrixXd(state), Eigen::MatrixXd(eta));
  return {s.actions.col(0), s.log_probs[0]};
}

Eigen::VectorXd squashed_param_grads(const GaussianPolicy& policy, const SquashedSample& sample,
                                     const Eigen::MatrixXd& g_action,
                                     const Eigen::VectorXd& g_logprob) {
  const int adim = policy.action_dim;
  const Eigen::Index n = sample.actions.cols();
  if (g_action.rows() != adim || g_action.cols() != n || g_logprob.size() != n)
    throw std::invalid_argument("policy: upstream gradient shape mismatch");

  const auto& t = sample.actions;
  // dL/du: action path through tanh plus d(log pi)/du = 2*tanh(u).
  Eigen::MatrixXd d_u = g_action.cwiseProduct((1.0 - t.array().square()).matrix());
  d_u += (2.0 * t.array()).matrix() * g_logprob.asDiagonal();

  Eigen::MatrixXd upstream(2 * adim, n);
  upstream.topRows(adim) = d_u;
  // dL/d(log_std): through u (du/dls = sigma*eta) and the explicit -ls term.
  Eigen::MatrixXd d_ls = d_u.cwiseProduct(sample.sigma.cwiseProduct(sample.eta));
  d_ls -= Eigen::MatrixXd::Ones(adim, 1) * g_logprob.transpose();
  // Clamped head outputs pass no gradient.
  const Eigen::ArrayXXd inside = ((sample.raw_log_std.array() > policy.log_std_min) &&
                                  (sample.raw_log_std.array() < policy.log_std_max))
                                     .cast<double>();
  upstream.bottomRows(adim) = d_ls.array() * inside;

  return policy.net.backward(sample.net_cache, upstream).param_grads;
}

Eigen::VectorXd act_mean(const GaussianPolicy& policy, const Eigen::VectorXd& state) {
  const Eigen::VectorXd head = policy.net.forward(state);
  return head.head(policy.action_dim).array().tanh();
}

Eigen::MatrixXd policy_std(const GaussianPolicy& policy, const Eigen::MatrixXd& states) {
  const Eigen::MatrixXd head = policy.net.forward(states);
  return head.bottomRows(policy.action_dim)
      .array()
      .max(policy.log_std_min)
      .min(policy.log_std_max)
      .exp();
}

double gaussian_entropy(double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("policy: gaussian_entropy needs sigma > 0");
  return std::log(sigma) + 0.5 * (1.0 + kLogTwoPi);
}

}  // namespace cgpi
