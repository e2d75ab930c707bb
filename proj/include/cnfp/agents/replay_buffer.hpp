#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "cnfp/agents/gaussian_head.hpp"
#include "cnfp/rng.hpp"

namespace cnfp::agents {

struct Transition {
  regions::Observation obs;
  Eigen::Vector2d action;  // executed action
  double reward = 0.0;     // reward the agent learns from (shaped for the penalty variant)
  regions::Observation next_obs;
  bool terminal = false;   // true end of the MDP; the navigation task has none
  bool truncated = false;
  bool violated_obstacle = false;
  bool violated_battery = false;
};

/// Column-per-sample view of a minibatch.
struct Batch {
  Eigen::MatrixXd obs;       // 5 x B
  Eigen::MatrixXd actions;   // 2 x B
  Eigen::VectorXd rewards;   // B
  Eigen::MatrixXd next_obs;  // 5 x B
  Eigen::VectorXd terminal;  // B, 1 where the episode truly ended
  Eigen::MatrixXd costs;     // 2 x B, obstacle and battery indicators

  Eigen::Index size() const { return obs.cols(); }
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(const Transition& t);
  Batch sample(std::size_t batch_size, Rng& rng) const;

  /// Copies out the slots at the given indices.
  Batch gather(const std::vector<std::size_t>& indices) const;
  Transition at(std::size_t slot) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t next_slot() const { return next_; }

  /// Restores the ring position after a checkpoint load; slots are re-added in order first.
  void set_cursor(std::size_t next, std::size_t size);

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  Eigen::MatrixXd obs_;
  Eigen::MatrixXd actions_;
  Eigen::VectorXd rewards_;
  Eigen::MatrixXd next_obs_;
  Eigen::Matrix<unsigned char, 4, Eigen::Dynamic> flags_;  // terminal, truncated, obstacle, battery
};

}  // namespace cnfp::agents
