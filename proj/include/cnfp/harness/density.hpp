#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cnfp/agents/sac_agent.hpp"
#include "cnfp/rng.hpp"

namespace cnfp::harness {

/// Axis-aligned bounding box of a 2-D region.
struct Bounds {
  regions::Vec2 low = regions::Vec2::Zero();
  regions::Vec2 high = regions::Vec2::Zero();

  regions::Vec2 cell_size(int resolution) const { return (high - low) / resolution; }
  regions::Vec2 cell_center(int i, int j, int resolution) const;
};

Bounds region_bounds(const flows::ConvexRegion& region);

/// Throws InvalidStateError unless `obs` is a state the environment can be in.
void validate_observation(const regions::World& world, const regions::Observation& obs);

struct DensityGrid {
  regions::Observation state;
  int resolution = 0;
  Bounds bounds;              // bounding box of the final flow region
  Eigen::MatrixXd density;    // density(i, j) at cell centre (x index i, y index j); 0 outside the support
  double integral = 0.0;      // midpoint-rule integral over the grid
  std::vector<std::string> stage_names;
  std::vector<Eigen::MatrixXd> stages;  // 2 x N sample clouds: latent, then after each flow step
};

DensityGrid density_grid(const agents::SacAgent& agent, const regions::Observation& obs, int resolution,
                         int samples, Rng& rng);

nlohmann::json density_to_json(const DensityGrid& grid);

/// Draws `count` policy actions for one observation (2 x count).
Eigen::MatrixXd sample_actions(const agents::SacAgent& agent, const regions::Observation& obs, int count, Rng& rng);

/// Total-variation distance between a `bins` x `bins` histogram of `samples`
/// policy actions and the density integrated per bin on a grid `refine` times finer.
double histogram_tv(const agents::SacAgent& agent, const regions::Observation& obs, int samples, int bins,
                    int refine, Rng& rng);

}  // namespace cnfp::harness
