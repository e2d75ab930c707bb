#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cnfp/agents/gaussian_head.hpp"
#include "cnfp/agents/replay_buffer.hpp"
#include "cnfp/diffcore/optimizer.hpp"
#include "cnfp/flows/chain.hpp"
#include "cnfp/regions/world.hpp"
#include "cnfp/rng.hpp"

namespace cnfp::agents {

enum class Variant { kCnfp, kUnconstrained, kPenalty, kLagrangian };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

inline constexpr int kNumConstraints = 2;  // obstacle, battery

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double initial_alpha = 0.2;
  bool auto_alpha = true;
  double target_entropy = -2.0;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 100000;
  std::size_t warmup_steps = 1000;
  int update_every = 1;        // environment steps between update rounds
  int updates_per_round = 1;   // gradient updates per round
  double penalty = 100.0;      // penalty variant
  double lambda_lr = 1e-3;     // Lagrangian variant
  double lambda_max = 100.0;
  double lambda_init = 0.0;
  std::array<double, kNumConstraints> cost_epsilon{0.0, 0.0};
  double cost_gamma = 0.99;
  HeadSettings head;
  std::vector<int> critic_hidden = {64, 64};
  diffcore::Activation critic_activation = diffcore::Activation::kRelu;

  void validate() const;
};

struct PolicySample {
  Eigen::Vector2d action;  // executed action, after the flow
  Eigen::Vector2d latent;  // Gaussian sample before the flow
  Eigen::Vector2d noise;   // standard normal draw behind the latent
  double log_prob = 0.0;   // log-density of `action`
};

/// Per-sample policy evaluation for a batch, kept for backpropagation.
struct PolicyBatch {
  HeadOutput head;
  Eigen::MatrixXd noise;    // 2 x B
  Eigen::MatrixXd latent;   // 2 x B
  Eigen::MatrixXd actions;  // 2 x B
  Eigen::VectorXd log_det;  // B
  Eigen::VectorXd log_prob; // B
  std::vector<flows::FlowChain> chains;
};

struct CriticLoss {
  double loss = 0.0;  // sum of the twin critics' mean squared errors
  std::array<diffcore::Gradients, 2> grads;
  std::array<double, kNumConstraints> cost_loss{0.0, 0.0};
  std::vector<diffcore::Gradients> cost_grads;  // Lagrangian variant only
};

struct ActorLoss {
  double loss = 0.0;
  diffcore::Gradients grads;
  double mean_log_prob = 0.0;
  std::array<double, kNumConstraints> mean_cost_value{0.0, 0.0};  // cost critics at on-policy actions
};

struct UpdateStats {
  bool skipped = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double mean_log_prob = 0.0;
  std::array<double, kNumConstraints> lambda{0.0, 0.0};
};

/// Everything learned, plus optimiser state; laid out for checkpointing.
struct AgentState {
  GaussianPolicyHead actor;
  std::array<diffcore::Mlp, 2> critics;
  std::array<diffcore::Mlp, 2> critic_targets;
  std::vector<diffcore::Mlp> cost_critics;
  std::vector<diffcore::Mlp> cost_targets;
  diffcore::Adam actor_opt;
  std::array<diffcore::Adam, 2> critic_opt;
  std::vector<diffcore::Adam> cost_opt;
  double log_alpha = 0.0;
  diffcore::ScalarAdam alpha_opt;
  std::array<double, kNumConstraints> lambda{0.0, 0.0};
};

/// Soft actor-critic with twin critics. The variant only changes the flow
/// that shapes the policy (constraint chain vs. plain action box), the
/// Lagrangian cost terms, and, outside the agent, reward shaping.
class SacAgent {
 public:
  SacAgent(Variant variant, SacConfig config, regions::World world, std::uint64_t seed);

  Variant variant() const { return variant_; }
  const SacConfig& config() const { return config_; }
  const regions::World& world() const { return world_; }
  double alpha() const { return std::exp(state_.log_alpha); }

  /// Constraint chain for CNFP; the [-max_step, max_step] box otherwise.
  flows::FlowChain policy_chain(const regions::Observation& obs) const;

  /// Reparametrised sample with the given standard normal noise.
  PolicySample sample_action(const regions::Observation& obs, const Eigen::Vector2d& noise) const;
  /// Draws the noise from the agent's own stream; zero noise when deterministic.
  PolicySample act(const regions::Observation& obs, bool deterministic);
  /// Uniform draw from the region the policy can reach (warmup exploration).
  Eigen::Vector2d random_action(const regions::Observation& obs);

  /// Log-density of an executed action; -inf outside the reachable region.
  double log_density(const regions::Observation& obs, const Eigen::Vector2d& action) const;
  /// Same, for the 2 x N actions of one observation.
  Eigen::VectorXd log_density(const regions::Observation& obs, const Eigen::MatrixXd& actions) const;

  PolicyBatch policy_batch(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& noise) const;

  /// Pure losses with their parameter gradients; the noise matrices are 2 x B.
  CriticLoss critic_loss(const Batch& batch, const Eigen::MatrixXd& next_noise) const;
  ActorLoss actor_loss(const Batch& batch, const Eigen::MatrixXd& noise) const;
  /// d/d(log alpha) of E[-alpha (log pi + target_entropy)].
  double temperature_gradient(double mean_log_prob) const;

  /// One full SAC update: critics, actor, temperature, multipliers, targets.
  /// A non-finite loss or gradient skips the whole update.
  UpdateStats update(const Batch& batch);

  AgentState& state() { return state_; }
  const AgentState& state() const { return state_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& features, const Eigen::MatrixXd& actions) const;
  Eigen::MatrixXd draw_noise(Eigen::Index n);

  Variant variant_;
  SacConfig config_;
  regions::World world_;
  ObservationScaler scaler_;
  AgentState state_;
  Rng rng_;
};

}  // namespace cnfp::agents
