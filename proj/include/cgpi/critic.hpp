#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cgpi/diffnet.hpp"
#include "cgpi/rng.hpp"

namespace cgpi {

// Aligned minibatch of replay transitions; one column per sample.
struct BellmanBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd dones;  // 1 only at true terminal states

  Eigen::Index size() const { return rewards.size(); }
};

enum class CriticSet { Online, Target };

// Twin Q-networks over concat(state, action), with Polyak-averaged targets.
struct TwinCritic {
  Mlp q1, q2;
  Mlp q1_target, q2_target;
  int state_dim = 0;
  int action_dim = 0;

  // Targets start as exact copies of the online networks.
  static TwinCritic make(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& rng);

  Eigen::MatrixXd pack_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;
};

std::pair<Eigen::VectorXd, Eigen::VectorXd> twin_eval(const TwinCritic& c,
                                                      const Eigen::MatrixXd& states,
                                                      const Eigen::MatrixXd& actions,
                                                      CriticSet which);
std::pair<double, double> twin_eval(const TwinCritic& c, const Eigen::VectorXd& state,
                                    const Eigen::VectorXd& action, CriticSet which);

Eigen::VectorXd min_q(const Eigen::VectorXd& q1, const Eigen::VectorXd& q2);
inline double min_q(double q1, double q2) { return q1 < q2 ? q1 : q2; }

// r + gamma * (1 - done) * next_value.
double bellman_target(double reward, double done, double gamma, double next_value);
Eigen::VectorXd bellman_target(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                               double gamma, const Eigen::VectorXd& next_values);

// q_min - alpha * log_prob: the entropy-augmented state value inside SAC targets.
double soft_value(double q_min, double alpha, double log_prob);
Eigen::VectorXd soft_value(const Eigen::VectorXd& q_min, double alpha,
                           const Eigen::VectorXd& log_probs);

struct CriticGrads {
  double loss = 0.0;  // mse(q1, y) + mse(q2, y)
  Eigen::VectorXd q1_grads;
  Eigen::VectorXd q2_grads;
};

// Mean squared error of each online critic against the shared constant
// targets; gradients averaged over the batch.
CriticGrads critic_loss_and_grads(const TwinCritic& c, const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets);

void polyak_update(TwinCritic& c, double tau);

}  // namespace cgpi
