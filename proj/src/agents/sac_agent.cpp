#include "cnfp/agents/sac_agent.hpp"

#include <cmath>
#include <limits>

#include "cnfp/agents/lagrange.hpp"
#include "cnfp/errors.hpp"
#include "cnfp/regions/constructors.hpp"

namespace cnfp::agents {

using diffcore::Gradients;
using diffcore::Mlp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Variant parse_variant(std::string_view name) {
  if (name == "cnfp") return Variant::kCnfp;
  if (name == "unconstrained") return Variant::kUnconstrained;
  if (name == "penalty") return Variant::kPenalty;
  if (name == "lagrangian") return Variant::kLagrangian;
  throw ConfigError("unknown agent variant '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kCnfp: return "cnfp";
    case Variant::kUnconstrained: return "unconstrained";
    case Variant::kPenalty: return "penalty";
    case Variant::kLagrangian: return "lagrangian";
  }
  return "unknown";
}

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(cost_gamma >= 0.0 && cost_gamma <= 1.0)) throw ConfigError("cost_gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(actor_lr >= 0.0 && critic_lr >= 0.0 && alpha_lr >= 0.0 && lambda_lr >= 0.0))
    throw ConfigError("learning rates must be non-negative");
  if (!(initial_alpha >= 0.0)) throw ConfigError("initial_alpha must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
  if (update_every <= 0 || updates_per_round < 0) throw ConfigError("update cadence must be positive");
  if (!(penalty >= 0.0)) throw ConfigError("penalty must be non-negative");
  if (!(lambda_init >= 0.0 && lambda_max >= lambda_init)) throw ConfigError("lambda bounds out of order");
  if (critic_hidden.empty() || head.hidden.empty()) throw ConfigError("networks need at least one hidden layer");
}

namespace {

Mlp make_critic(const SacConfig& config, std::uint64_t seed) {
  std::vector<int> widths{kObsDim + kActionDim};
  widths.insert(widths.end(), config.critic_hidden.begin(), config.critic_hidden.end());
  widths.push_back(1);
  return Mlp::uniform_init(widths, config.critic_activation, seed);
}

bool finite(const Gradients& g) { return g.all_finite(); }

}  // namespace

SacAgent::SacAgent(Variant variant, SacConfig config, regions::World world, std::uint64_t seed)
    : variant_(variant),
      config_(std::move(config)),
      world_(std::move(world)),
      scaler_(ObservationScaler::for_world(world_)),
      rng_(derive_seed(seed, 100)) {
  config_.validate();
  world_.validate();
  if (config_.initial_alpha <= 0.0 && config_.auto_alpha)
    throw ConfigError("automatic temperature tuning needs a positive initial alpha");
  state_.actor = GaussianPolicyHead(config_.head, derive_seed(seed, 1));
  for (int i = 0; i < 2; ++i) {
    state_.critics[i] = make_critic(config_, derive_seed(seed, 2 + i));
    state_.critic_targets[i] = state_.critics[i];
    state_.critic_opt[i] = diffcore::Adam(state_.critics[i]);
  }
  if (variant_ == Variant::kLagrangian) {
    for (int k = 0; k < kNumConstraints; ++k) {
      state_.cost_critics.push_back(make_critic(config_, derive_seed(seed, 10 + k)));
      state_.cost_targets.push_back(state_.cost_critics.back());
      state_.cost_opt.emplace_back(state_.cost_critics.back());
    }
    state_.lambda.fill(config_.lambda_init);
  }
  state_.actor_opt = diffcore::Adam(state_.actor.net());
  state_.log_alpha = config_.initial_alpha > 0.0 ? std::log(config_.initial_alpha)
                                                 : -std::numeric_limits<double>::infinity();
}

flows::FlowChain SacAgent::policy_chain(const regions::Observation& obs) const {
  if (variant_ == Variant::kCnfp) return regions::constraint_chain(world_, obs);
  const double s = world_.layout.max_step;
  return flows::FlowChain{{flows::FlowStep{flows::Box(VectorXd::Constant(2, -s), VectorXd::Constant(2, s))}}};
}

PolicyBatch SacAgent::policy_batch(const MatrixXd& obs, const MatrixXd& noise) const {
  if (obs.rows() != kObsDim || noise.rows() != kActionDim || noise.cols() != obs.cols())
    throw ShapeError("policy batch needs 5 x B observations and 2 x B noise");
  const Eigen::Index n = obs.cols();
  PolicyBatch pb;
  pb.head = state_.actor.forward(scaler_.apply(obs));
  pb.noise = noise;
  pb.latent = pb.head.mean + (pb.head.log_std.array().exp() * noise.array()).matrix();
  pb.actions.resize(kActionDim, n);
  pb.log_det.resize(n);
  pb.log_prob.resize(n);
  pb.chains.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    pb.chains.push_back(policy_chain(obs.col(j)));
    const flows::ChainOutput out = flows::chain_forward(pb.latent.col(j), pb.chains.back());
    pb.actions.col(j) = out.point;
    pb.log_det(j) = out.log_det;
    pb.log_prob(j) = standard_normal_log_density(noise.col(j)) - pb.head.log_std.col(j).sum() - out.log_det;
  }
  return pb;
}

PolicySample SacAgent::sample_action(const regions::Observation& obs, const Eigen::Vector2d& noise) const {
  const PolicyBatch pb = policy_batch(obs, noise);
  PolicySample s;
  s.action = pb.actions.col(0);
  s.latent = pb.latent.col(0);
  s.noise = noise;
  s.log_prob = pb.log_prob(0);
  return s;
}

PolicySample SacAgent::act(const regions::Observation& obs, bool deterministic) {
  Eigen::Vector2d noise = Eigen::Vector2d::Zero();
  if (!deterministic) noise << rng_.normal(), rng_.normal();
  return sample_action(obs, noise);
}

Eigen::Vector2d SacAgent::random_action(const regions::Observation& obs) {
  const flows::FlowChain chain = policy_chain(obs);
  const auto& last = std::get<flows::Box>(chain.steps.back().region);
  // Rejection sampling from the last box onto the image of the whole chain.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::Vector2d y;
    for (int d = 0; d < 2; ++d) y(d) = rng_.uniform(last.low()(d), last.high()(d));
    if (!flows::contains(chain.steps.back().region, y)) continue;
    try {
      flows::chain_inverse(y, chain);
      return y;
    } catch (const DomainError&) {
    }
  }
  Eigen::Vector2d latent(rng_.normal(), rng_.normal());
  return flows::chain_forward(latent, chain).point;
}

double SacAgent::log_density(const regions::Observation& obs, const Eigen::Vector2d& action) const {
  return log_density(obs, MatrixXd(action))(0);
}

VectorXd SacAgent::log_density(const regions::Observation& obs, const MatrixXd& actions) const {
  if (actions.rows() != kActionDim) throw ShapeError("actions must be 2 x N");
  const flows::FlowChain chain = policy_chain(obs);
  const HeadOutput head = state_.actor.forward(scaler_.apply(obs));
  const Eigen::Vector2d mean = head.mean.col(0);
  const Eigen::Vector2d sigma = head.log_std.col(0).array().exp();
  const double log_sigma = head.log_std.col(0).sum();
  VectorXd out(actions.cols());
  for (Eigen::Index j = 0; j < actions.cols(); ++j) {
    out(j) = -std::numeric_limits<double>::infinity();
    if (!flows::contains(chain.steps.back().region, actions.col(j))) continue;
    VectorXd latent;
    try {
      latent = flows::chain_inverse(actions.col(j), chain);
    } catch (const DomainError&) {
      continue;
    }
    const Eigen::Vector2d noise = (latent - mean).cwiseQuotient(sigma);
    out(j) = standard_normal_log_density(noise) - log_sigma - flows::chain_forward(latent, chain).log_det;
  }
  return out;
}

MatrixXd SacAgent::critic_input(const MatrixXd& features, const MatrixXd& actions) const {
  MatrixXd in(kObsDim + kActionDim, features.cols());
  in.topRows(kObsDim) = features;
  in.bottomRows(kActionDim) = actions / world_.layout.max_step;
  return in;
}

MatrixXd SacAgent::draw_noise(Eigen::Index n) {
  MatrixXd noise(kActionDim, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int d = 0; d < kActionDim; ++d) noise(d, j) = rng_.normal();
  return noise;
}

CriticLoss SacAgent::critic_loss(const Batch& batch, const MatrixXd& next_noise) const {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ShapeError("empty batch");
  const double alpha = this->alpha();
  const PolicyBatch next = policy_batch(batch.next_obs, next_noise);
  const MatrixXd next_in = critic_input(scaler_.apply(batch.next_obs), next.actions);
  const VectorXd continuing = (1.0 - batch.terminal.array()).matrix();

  const VectorXd q1_next = state_.critic_targets[0].forward_batch(next_in).row(0).transpose();
  const VectorXd q2_next = state_.critic_targets[1].forward_batch(next_in).row(0).transpose();
  const VectorXd soft_value = q1_next.cwiseMin(q2_next) - alpha * next.log_prob;
  const VectorXd target = batch.rewards + config_.gamma * continuing.cwiseProduct(soft_value);

  const MatrixXd in = critic_input(scaler_.apply(batch.obs), batch.actions);
  CriticLoss result;
  for (int i = 0; i < 2; ++i) {
    diffcore::ForwardCache cache;
    const VectorXd q = state_.critics[i].forward_batch(in, &cache).row(0).transpose();
    const VectorXd err = q - target;
    result.loss += err.squaredNorm() / static_cast<double>(n);
    const MatrixXd grad = (2.0 / static_cast<double>(n)) * err.transpose();
    result.grads[i] = state_.critics[i].backward_batch(cache, grad);
  }

  if (variant_ == Variant::kLagrangian) {
    for (int k = 0; k < kNumConstraints; ++k) {
      const VectorXd c_next = state_.cost_targets[k].forward_batch(next_in).row(0).transpose();
      const VectorXd c_target = batch.costs.row(k).transpose() + config_.cost_gamma * continuing.cwiseProduct(c_next);
      diffcore::ForwardCache cache;
      const VectorXd c = state_.cost_critics[k].forward_batch(in, &cache).row(0).transpose();
      const VectorXd err = c - c_target;
      result.cost_loss[k] = err.squaredNorm() / static_cast<double>(n);
      result.cost_grads.push_back(
          state_.cost_critics[k].backward_batch(cache, (2.0 / static_cast<double>(n)) * err.transpose()));
    }
  }
  return result;
}

ActorLoss SacAgent::actor_loss(const Batch& batch, const MatrixXd& noise) const {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ShapeError("empty batch");
  const double alpha = this->alpha();
  const double inv_n = 1.0 / static_cast<double>(n);
  const PolicyBatch pb = policy_batch(batch.obs, noise);
  const MatrixXd in = critic_input(scaler_.apply(batch.obs), pb.actions);

  diffcore::ForwardCache cache1, cache2;
  const VectorXd q1 = state_.critics[0].forward_batch(in, &cache1).row(0).transpose();
  const VectorXd q2 = state_.critics[1].forward_batch(in, &cache2).row(0).transpose();
  MatrixXd g1 = MatrixXd::Zero(1, n);
  MatrixXd g2 = MatrixXd::Zero(1, n);
  ActorLoss result;
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool first = q1(j) <= q2(j);
    result.loss += inv_n * (alpha * pb.log_prob(j) - (first ? q1(j) : q2(j)));
    (first ? g1 : g2)(0, j) = -inv_n;
  }
  // Gradient of the loss w.r.t. the executed actions.
  MatrixXd action_grad = state_.critics[0].input_gradient(cache1, g1).bottomRows(kActionDim) +
                         state_.critics[1].input_gradient(cache2, g2).bottomRows(kActionDim);

  if (variant_ == Variant::kLagrangian) {
    for (int k = 0; k < kNumConstraints; ++k) {
      diffcore::ForwardCache cache;
      const VectorXd c = state_.cost_critics[k].forward_batch(in, &cache).row(0).transpose();
      result.mean_cost_value[k] = c.mean();
      result.loss += state_.lambda[k] * c.mean();
      if (state_.lambda[k] != 0.0) {
        const MatrixXd gc = MatrixXd::Constant(1, n, state_.lambda[k] * inv_n);
        action_grad += state_.cost_critics[k].input_gradient(cache, gc).bottomRows(kActionDim);
      }
    }
  }
  action_grad /= world_.layout.max_step;  // critic inputs are scaled actions

  // log pi = log N(noise) - sum(log_std) - log_det(latent); the noise is held fixed.
  MatrixXd mean_grad(kActionDim, n);
  MatrixXd log_std_grad(kActionDim, n);
  const MatrixXd sigma = pb.head.log_std.array().exp();
  for (Eigen::Index j = 0; j < n; ++j) {
    const VectorXd g_latent =
        flows::chain_backward_grad(pb.latent.col(j), pb.chains[static_cast<std::size_t>(j)], action_grad.col(j),
                                   -alpha * inv_n);
    mean_grad.col(j) = g_latent;
    log_std_grad.col(j) = g_latent.cwiseProduct(sigma.col(j)).cwiseProduct(pb.noise.col(j)).array() - alpha * inv_n;
  }
  result.grads = state_.actor.backward(pb.head, mean_grad, log_std_grad);
  result.mean_log_prob = pb.log_prob.mean();
  return result;
}

double SacAgent::temperature_gradient(double mean_log_prob) const {
  return -alpha() * (mean_log_prob + config_.target_entropy);
}

UpdateStats SacAgent::update(const Batch& batch) {
  UpdateStats stats;
  const Eigen::Index n = batch.size();

  const CriticLoss critic = critic_loss(batch, draw_noise(n));
  bool ok = std::isfinite(critic.loss) && finite(critic.grads[0]) && finite(critic.grads[1]);
  for (std::size_t k = 0; k < critic.cost_grads.size(); ++k)
    ok = ok && std::isfinite(critic.cost_loss[k]) && finite(critic.cost_grads[k]);
  if (!ok) {
    stats.skipped = true;
    stats.critic_loss = critic.loss;
    return stats;
  }
  for (int i = 0; i < 2; ++i) state_.critic_opt[i].step(state_.critics[i], critic.grads[i], config_.critic_lr);
  for (std::size_t k = 0; k < critic.cost_grads.size(); ++k)
    state_.cost_opt[k].step(state_.cost_critics[k], critic.cost_grads[k], config_.critic_lr);
  stats.critic_loss = critic.loss;

  const ActorLoss actor = actor_loss(batch, draw_noise(n));
  if (!std::isfinite(actor.loss) || !finite(actor.grads) || !std::isfinite(actor.mean_log_prob)) {
    stats.skipped = true;
    stats.actor_loss = actor.loss;
    return stats;
  }
  state_.actor_opt.step(state_.actor.net(), actor.grads, config_.actor_lr);
  stats.actor_loss = actor.loss;
  stats.mean_log_prob = actor.mean_log_prob;

  if (config_.auto_alpha) {
    state_.log_alpha =
        state_.alpha_opt.step(state_.log_alpha, temperature_gradient(actor.mean_log_prob), config_.alpha_lr);
  }
  if (variant_ == Variant::kLagrangian) {
    for (int k = 0; k < kNumConstraints; ++k) {
      state_.lambda[k] = lagrange_update(state_.lambda[k], actor.mean_cost_value[k], config_.cost_epsilon[k],
                                         config_.lambda_lr, config_.lambda_max);
    }
  }

  for (int i = 0; i < 2; ++i) diffcore::polyak_update(state_.critic_targets[i], state_.critics[i], config_.tau);
  for (std::size_t k = 0; k < state_.cost_critics.size(); ++k)
    diffcore::polyak_update(state_.cost_targets[k], state_.cost_critics[k], config_.tau);

  stats.alpha = alpha();
  stats.lambda = state_.lambda;
  return stats;
}

}  // namespace cnfp::agents
