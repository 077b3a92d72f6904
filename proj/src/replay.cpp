#include "cgpi/replay.hpp"

#include <stdexcept>

namespace cgpi {

ReplayBuffer::ReplayBuffer(std::int64_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity <= 0) throw std::invalid_argument("replay: capacity must be positive");
  states_.resize(state_dim, capacity);
  actions_.resize(action_dim, capacity);
  next_states_.resize(state_dim, capacity);
  rewards_.resize(capacity);
  dones_.resize(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ ||
      t.action.size() != action_dim_)
    throw std::invalid_argument("replay: transition dimensions do not match buffer");
  states_.col(write_cursor_) = t.state;
  actions_.col(write_cursor_) = t.action;
  next_states_.col(write_cursor_) = t.next_state;
  rewards_[write_cursor_] = t.reward;
  dones_[write_cursor_] = t.done;
  write_cursor_ = (write_cursor_ + 1) % capacity_;
  if (count_ < capacity_) ++count_;
}

BellmanBatch ReplayBuffer::sample(std::int64_t n, Rng& rng) const {
  if (count_ == 0) throw std::runtime_error("replay: cannot sample from an empty buffer");
  BellmanBatch b;
  b.states.resize(state_dim_, n);
  b.actions.resize(action_dim_, n);
  b.next_states.resize(state_dim_, n);
  b.rewards.resize(n);
  b.dones.resize(n);
  for (std::int64_t j = 0; j < n; ++j) {
    const auto i = static_cast<std::int64_t>(rng.next_index(static_cast<std::uint64_t>(count_)));
    b.states.col(j) = states_.col(i);
    b.actions.col(j) = actions_.col(i);
    b.next_states.col(j) = next_states_.col(i);
    b.rewards[j] = rewards_[i];
    b.dones[j] = dones_[i];
  }
  return b;
}

Transition ReplayBuffer::at_age(std::int64_t age_index) const {
  if (age_index < 0 || age_index >= count_) throw std::out_of_range("replay: age index");
  const std::int64_t oldest = count_ < capacity_ ? 0 : write_cursor_;
  const std::int64_t i = (oldest + age_index) % capacity_;
  return {states_.col(i), actions_.col(i), rewards_[i], next_states_.col(i), dones_[i]};
}

}  // namespace cgpi
