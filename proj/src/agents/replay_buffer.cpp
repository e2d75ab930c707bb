#include "cnfp/agents/replay_buffer.hpp"

#include "cnfp/errors.hpp"

namespace cnfp::agents {

ReplayBuffer::ReplayBuffer(std::size_t capacity)
    : capacity_(capacity),
      obs_(kObsDim, static_cast<Eigen::Index>(capacity)),
      actions_(kActionDim, static_cast<Eigen::Index>(capacity)),
      rewards_(static_cast<Eigen::Index>(capacity)),
      next_obs_(kObsDim, static_cast<Eigen::Index>(capacity)),
      flags_(4, static_cast<Eigen::Index>(capacity)) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::add(const Transition& t) {
  const auto c = static_cast<Eigen::Index>(next_);
  obs_.col(c) = t.obs;
  actions_.col(c) = t.action;
  rewards_(c) = t.reward;
  next_obs_.col(c) = t.next_obs;
  flags_(0, c) = t.terminal;
  flags_(1, c) = t.truncated;
  flags_(2, c) = t.violated_obstacle;
  flags_(3, c) = t.violated_battery;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.obs.resize(kObsDim, n);
  b.actions.resize(kActionDim, n);
  b.rewards.resize(n);
  b.next_obs.resize(kObsDim, n);
  b.terminal.resize(n);
  b.costs.resize(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t slot = indices[static_cast<std::size_t>(j)];
    if (slot >= size_) throw ShapeError("replay slot out of range");
    const auto c = static_cast<Eigen::Index>(slot);
    b.obs.col(j) = obs_.col(c);
    b.actions.col(j) = actions_.col(c);
    b.rewards(j) = rewards_(c);
    b.next_obs.col(j) = next_obs_.col(c);
    b.terminal(j) = flags_(0, c);
    b.costs(0, j) = flags_(2, c);
    b.costs(1, j) = flags_(3, c);
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw ProtocolError("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.index(size_);
  return gather(idx);
}

Transition ReplayBuffer::at(std::size_t slot) const {
  if (slot >= size_) throw ShapeError("replay slot out of range");
  const auto c = static_cast<Eigen::Index>(slot);
  Transition t;
  t.obs = obs_.col(c);
  t.action = actions_.col(c);
  t.reward = rewards_(c);
  t.next_obs = next_obs_.col(c);
  t.terminal = flags_(0, c);
  t.truncated = flags_(1, c);
  t.violated_obstacle = flags_(2, c);
  t.violated_battery = flags_(3, c);
  return t;
}

void ReplayBuffer::set_cursor(std::size_t next, std::size_t size) {
  if (size > capacity_ || next >= capacity_ || size < size_) throw ShapeError("replay cursor out of range");
  next_ = next;
  size_ = size;
}

}  // namespace cnfp::agents
