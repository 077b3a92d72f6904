#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "cgpi/critic.hpp"
#include "cgpi/rng.hpp"

namespace cgpi {

// One environment interaction tuple.
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  double done = 0.0;  // 1 only at true terminal states; truncation bootstraps
};

// Fixed-capacity FIFO ring with uniform with-replacement minibatch sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::int64_t capacity, int state_dim, int action_dim);

  void push(const Transition& t);
  BellmanBatch sample(std::int64_t n, Rng& rng) const;

  std::int64_t count() const { return count_; }
  std::int64_t capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  // Slot accessor for tests (index in [0, count)); 0 is the oldest live entry.
  Transition at_age(std::int64_t age_index) const;

 private:
  std::int64_t capacity_;
  int state_dim_;
  int action_dim_;
  std::int64_t write_cursor_ = 0;
  std::int64_t count_ = 0;
  Eigen::MatrixXd states_, actions_, next_states_;
  Eigen::VectorXd rewards_, dones_;
};

}  // namespace cgpi
