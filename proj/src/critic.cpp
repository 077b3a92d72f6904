#include "cgpi/critic.hpp"

#include <stdexcept>

namespace cgpi {

TwinCritic TwinCritic::make(int state_dim, int action_dim, const std::vector<int>& hidden,
                            Rng& rng) {
  TwinCritic c;
  c.state_dim = state_dim;
  c.action_dim = action_dim;
  std::vector<int> sizes;
  sizes.push_back(state_dim + action_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  c.q1 = Mlp(sizes, 0, rng);
  c.q2 = Mlp(sizes, 0, rng);
  c.q1_target = c.q1;
  c.q2_target = c.q2;
  return c;
}

Eigen::MatrixXd TwinCritic::pack_input(const Eigen::MatrixXd& states,
                                       const Eigen::MatrixXd& actions) const {
  if (states.rows() != state_dim || actions.rows() != action_dim ||
      states.cols() != actions.cols())
    throw std::invalid_argument("critic: state/action shape mismatch");
  Eigen::MatrixXd x(state_dim + action_dim, states.cols());
  x.topRows(state_dim) = states;
  x.bottomRows(action_dim) = actions;
  return x;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> twin_eval(const TwinCritic& c,
                                                      const Eigen::MatrixXd& states,
                                                      const Eigen::MatrixXd& actions,
                                                      CriticSet which) {
  const Eigen::MatrixXd x = c.pack_input(states, actions);
  const Mlp& a = which == CriticSet::Online ? c.q1 : c.q1_target;
  const Mlp& b = which == CriticSet::Online ? c.q2 : c.q2_target;
  return {a.forward(x).transpose(), b.forward(x).transpose()};
}

std::pair<double, double> twin_eval(const TwinCritic& c, const Eigen::VectorXd& state,
                                    const Eigen::VectorXd& action, CriticSet which) {
  auto [v1, v2] = twin_eval(c, Eigen::MatrixXd(state), Eigen::MatrixXd(action), which);
  return {v1[0], v2[0]};
}

Eigen::VectorXd min_q(const Eigen::VectorXd& q1, const Eigen::VectorXd& q2) {
  return q1.cwiseMin(q2);
}

double bellman_target(double reward, double done, double gamma, double next_value) {
  return reward + gamma * (1.0 - done) * next_value;
}

Eigen::VectorXd bellman_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                               double gamma, const Eigen::VectorXd& next_values) {
  return rewards.array() + gamma * (1.0 - dones.array()) * next_values.array();
}

double soft_value(double q_min, double alpha, double log_prob) {
  return q_min - alpha * log_prob;
}

Eigen::VectorXd soft_value(const Eigen::VectorXd& q_min, double alpha,
                           const Eigen::VectorXd& log_probs) {
  return q_min - alpha * log_probs;
}

CriticGrads critic_loss_and_grads(const TwinCritic& c, const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets) {
  if (!targets.allFinite()) throw std::invalid_argument("critic: non-finite target");
  const Eigen::MatrixXd x = c.pack_input(states, actions);
  if (targets.size() != x.cols()) throw std::invalid_argument("critic: target length mismatch");
  const double n = static_cast<double>(x.cols());

  CriticGrads out;
  for (int k = 0; k < 2; ++k) {
    const Mlp& net = k == 0 ? c.q1 : c.q2;
    ForwardCache cache;
    const Eigen::MatrixXd pred = net.forward(x, &cache);
    const Eigen::RowVectorXd residual = pred.row(0) - targets.transpose();
    out.loss += residual.squaredNorm() / n;
    // d(mse)/d(pred) = 2 * residual / n; targets are constants.
    const Eigen::MatrixXd upstream = (2.0 / n) * residual;
    (k == 0 ? out.q1_grads : out.q2_grads) = net.backward(cache, upstream).param_grads;
  }
  return out;
}

void polyak_update(TwinCritic& c, double tau) {
  ema_update(c.q1_target.params(), c.q1.params(), tau);
  ema_update(c.q2_target.params(), c.q2.params(), tau);
}

}  // namespace cgpi
