#include "cnfp/harness/density.hpp"

#include <cmath>

#include "cnfp/errors.hpp"
#include "cnfp/regions/constructors.hpp"

namespace cnfp::harness {

using nlohmann::json;

regions::Vec2 Bounds::cell_center(int i, int j, int resolution) const {
  const regions::Vec2 h = cell_size(resolution);
  return {low.x() + (i + 0.5) * h.x(), low.y() + (j + 0.5) * h.y()};
}

Bounds region_bounds(const flows::ConvexRegion& region) {
  if (flows::region_dim(region) != 2) throw ShapeError("density grids need a 2-D region");
  return std::visit(
      [](const auto& r) -> Bounds {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, flows::Box>) {
          return {r.low(), r.high()};
        } else if constexpr (std::is_same_v<R, flows::Ball>) {
          return {r.center().array() - r.radius(), r.center().array() + r.radius()};
        } else {
          // Extent along axis d is the norm of row d of the shape factor.
          const Eigen::Vector2d ext = r.shape().rowwise().norm();
          return {r.center() - ext, r.center() + ext};
        }
      },
      region);
}

void validate_observation(const regions::World& world, const regions::Observation& obs) {
  if (!obs.allFinite()) throw InvalidStateError("state contains non-finite values");
  if (!world.layout.arena.contains_closed(regions::goal_of(obs))) throw InvalidStateError("goal is outside the arena");
  regions::constraint_chain(world, obs);  // checks position and battery
}

Eigen::MatrixXd sample_actions(const agents::SacAgent& agent, const regions::Observation& obs, int count, Rng& rng) {
  const agents::PolicyBatch head = agent.policy_batch(obs, Eigen::Vector2d::Zero());
  const Eigen::Vector2d mean = head.head.mean.col(0);
  const Eigen::Vector2d sigma = head.head.log_std.col(0).array().exp();
  const flows::FlowChain chain = agent.policy_chain(obs);
  Eigen::MatrixXd out(2, count);
  for (int n = 0; n < count; ++n) {
    const Eigen::Vector2d noise(rng.normal(), rng.normal());
    out.col(n) = flows::chain_forward(mean + sigma.cwiseProduct(noise), chain).point;
  }
  return out;
}

DensityGrid density_grid(const agents::SacAgent& agent, const regions::Observation& obs, int resolution,
                         int samples, Rng& rng) {
  validate_observation(agent.world(), obs);
  if (resolution <= 0) throw ConfigError("grid resolution must be positive");
  if (samples < 0) throw ConfigError("sample count must be non-negative");
  DensityGrid g;
  g.state = obs;
  g.resolution = resolution;
  const flows::FlowChain chain = agent.policy_chain(obs);
  g.bounds = region_bounds(chain.steps.back().region);

  Eigen::MatrixXd centers(2, resolution * resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) centers.col(i * resolution + j) = g.bounds.cell_center(i, j, resolution);
  const Eigen::VectorXd logp = agent.log_density(obs, centers);
  g.density.resize(resolution, resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      const double lp = logp(i * resolution + j);
      g.density(i, j) = std::isfinite(lp) ? std::exp(lp) : 0.0;
    }
  const regions::Vec2 h = g.bounds.cell_size(resolution);
  g.integral = g.density.sum() * h.x() * h.y();

  const bool constrained = agent.variant() == agents::Variant::kCnfp && chain.size() == 2;
  g.stage_names = constrained ? std::vector<std::string>{"latent", "after_battery", "after_obstacle"}
                              : std::vector<std::string>{"latent", "after_box"};
  g.stages.assign(chain.size() + 1, Eigen::MatrixXd(2, samples));
  const agents::PolicyBatch head = agent.policy_batch(obs, Eigen::Vector2d::Zero());
  const Eigen::Vector2d mean = head.head.mean.col(0);
  const Eigen::Vector2d sigma = head.head.log_std.col(0).array().exp();
  std::vector<Eigen::VectorXd> inter;
  for (int n = 0; n < samples; ++n) {
    const Eigen::Vector2d noise(rng.normal(), rng.normal());
    const flows::ChainOutput out = flows::chain_forward(mean + sigma.cwiseProduct(noise), chain, inter);
    for (std::size_t k = 0; k < inter.size(); ++k) g.stages[k].col(n) = inter[k];
    g.stages.back().col(n) = out.point;
  }
  return g;
}

json density_to_json(const DensityGrid& g) {
  json stages = json::object();
  for (std::size_t k = 0; k < g.stages.size(); ++k) {
    json cloud = json::array();
    for (Eigen::Index n = 0; n < g.stages[k].cols(); ++n) cloud.push_back({g.stages[k](0, n), g.stages[k](1, n)});
    stages[g.stage_names[k]] = cloud;
  }
  json rows = json::array();
  for (int j = 0; j < g.resolution; ++j) {
    std::vector<double> row(g.resolution);
    for (int i = 0; i < g.resolution; ++i) row[i] = g.density(i, j);
    rows.push_back(row);
  }
  return {{"state", std::vector<double>(g.state.data(), g.state.data() + g.state.size())},
          {"resolution", g.resolution},
          {"x_range", {g.bounds.low.x(), g.bounds.high.x()}},
          {"y_range", {g.bounds.low.y(), g.bounds.high.y()}},
          {"density", rows},
          {"density_layout", "density[j][i] at cell centre (x_i, y_j)"},
          {"integral", g.integral},
          {"stage_order", g.stage_names},
          {"samples", stages}};
}

double histogram_tv(const agents::SacAgent& agent, const regions::Observation& obs, int samples, int bins,
                    int refine, Rng& rng) {
  validate_observation(agent.world(), obs);
  const flows::FlowChain chain = agent.policy_chain(obs);
  const Bounds b = region_bounds(chain.steps.back().region);
  const int fine = bins * refine;

  Eigen::MatrixXd centers(2, fine * fine);
  for (int i = 0; i < fine; ++i)
    for (int j = 0; j < fine; ++j) centers.col(i * fine + j) = b.cell_center(i, j, fine);
  const Eigen::VectorXd logp = agent.log_density(obs, centers);
  const regions::Vec2 h = b.cell_size(fine);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(bins, bins);
  for (int i = 0; i < fine; ++i)
    for (int j = 0; j < fine; ++j) {
      const double lp = logp(i * fine + j);
      if (std::isfinite(lp)) p(i / refine, j / refine) += std::exp(lp) * h.x() * h.y();
    }

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(bins, bins);
  const Eigen::MatrixXd actions = sample_actions(agent, obs, samples, rng);
  const regions::Vec2 w = b.cell_size(bins);
  for (int n = 0; n < samples; ++n) {
    const int i = std::clamp(static_cast<int>((actions(0, n) - b.low.x()) / w.x()), 0, bins - 1);
    const int j = std::clamp(static_cast<int>((actions(1, n) - b.low.y()) / w.y()), 0, bins - 1);
    q(i, j) += 1.0 / samples;
  }
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace cnfp::harness
