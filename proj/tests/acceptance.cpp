// Acceptance run: trains every agent variant, then checks each criterion and
// prints one PASS/FAIL line per criterion. Exit status is nonzero if any fail.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cnfp/errors.hpp"
#include "cnfp/flows/chain.hpp"
#include "cnfp/harness/checkpoint.hpp"
#include "cnfp/harness/compare.hpp"
#include "cnfp/harness/config.hpp"
#include "cnfp/harness/density.hpp"
#include "cnfp/harness/trainer.hpp"
#include "cnfp/regions/constructors.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace cnfp;
using namespace cnfp::harness;
using agents::Variant;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using regions::Vec2;

namespace {

// Tolerances and budgets.
constexpr int kFlowPairs = 1000;
constexpr double kFlowRoundTrip = 1e-9;
constexpr double kFlowLogDet = 1e-5;
constexpr double kFlowLatentBound = 4.0;
constexpr int kDensityStates = 20;
constexpr int kDensityGrid = 400;
constexpr double kDensityIntegral = 0.02;
constexpr int kHistogramSamples = 1000000;
constexpr int kHistogramBins = 100;
constexpr double kHistogramTv = 0.02;
constexpr double kGradientRelative = 1e-4;
constexpr int kGradientTrials = 5;
constexpr double kEdgeFraction = 0.1;
constexpr double kReturnSlack = 0.15;
constexpr double kBudgetSeconds = 3600.0;
constexpr int kPrioritySamples = 10000;
constexpr double kOrderGap = 1e-3;
constexpr int kDeterminismEpisodes = 5;

const Variant kVariants[] = {Variant::kCnfp, Variant::kUnconstrained, Variant::kPenalty, Variant::kLagrangian};

int failures = 0;

void report(const std::string& id, bool pass, const std::string& what) {
  if (!pass) ++failures;
  std::printf("%s  %-3s %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

VectorXd uniform_vector(Rng& rng, int n, double bound) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-bound, bound);
  return v;
}

flows::ConvexRegion random_region(Rng& rng, int kind, int n) {
  if (kind == 0) {
    VectorXd lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo(i) = rng.uniform(-3.0, 1.0);
      hi(i) = lo(i) + rng.uniform(0.05, 3.0);
    }
    return flows::Box(lo, hi);
  }
  if (kind == 1) return flows::Ball(uniform_vector(rng, n, 2.0), rng.uniform(0.1, 3.0));
  MatrixXd L = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    L(i, i) = rng.uniform(0.2, 2.5);
    for (int j = 0; j < i; ++j) L(i, j) = rng.uniform(-1.0, 1.0);
  }
  return flows::Ellipsoid(uniform_vector(rng, n, 2.0), L);
}

Vec2 free_point(const regions::World& world, Rng& rng) {
  const auto& a = world.layout.arena;
  for (;;) {
    const Vec2 p(rng.uniform(a.x_min, a.x_max), rng.uniform(a.y_min, a.y_max));
    if (!world.layout.obstacle.contains_closed(p)) return p;
  }
}

regions::Observation random_state(const regions::World& world, Rng& rng) {
  return regions::make_observation(free_point(world, rng), rng.uniform(world.battery.threshold + 1.0, 100.0),
                                   free_point(world, rng));
}

// 1. Flow correctness.
void check_flows() {
  Rng rng(101);
  const char* names[] = {"box", "ball", "ellipsoid"};
  bool pass = true;
  std::string detail;
  for (int kind = 0; kind < 3; ++kind) {
    double roundtrip = 0.0, log_det = 0.0;
    int outside = 0;
    for (int i = 0; i < kFlowPairs; ++i) {
      const int n = 1 + static_cast<int>(rng.index(3));
      const flows::FlowStep step{random_region(rng, kind, n)};
      const VectorXd a = uniform_vector(rng, n, kFlowLatentBound);
      const VectorXd y = step.forward(a);
      if (!flows::contains(step.region, y)) ++outside;
      roundtrip = std::max(roundtrip, (step.inverse(y) - a).lpNorm<Eigen::Infinity>());
      const MatrixXd jac = testing::numeric_jacobian5([&](const VectorXd& x) { return step.forward(x); }, a);
      log_det = std::max(log_det, std::abs(step.log_det(a) - std::log(std::abs(jac.determinant()))));
    }
    pass = pass && roundtrip <= kFlowRoundTrip && log_det <= kFlowLogDet && outside == 0;
    detail += std::string(names[kind]) + ": roundtrip " + fmt(roundtrip) + ", logdet " + fmt(log_det) +
              ", outside " + std::to_string(outside) + "; ";
  }
  report("1", pass, "flow correctness, " + std::to_string(kFlowPairs) + " pairs per squash (" + detail + ")");
}

// 2. Density normalisation and sample agreement for a trained CNFP policy.
void check_density(const agents::SacAgent& agent) {
  Rng rng(202);
  double worst_integral = 0.0, worst_tv = 0.0;
  for (int s = 0; s < kDensityStates; ++s) {
    const regions::Observation obs = random_state(agent.world(), rng);
    const DensityGrid g = density_grid(agent, obs, kDensityGrid, 0, rng);
    worst_integral = std::max(worst_integral, std::abs(g.integral - 1.0));
    worst_tv = std::max(worst_tv,
                        histogram_tv(agent, obs, kHistogramSamples, kHistogramBins, kDensityGrid / kHistogramBins, rng));
  }
  report("2", worst_integral <= kDensityIntegral && worst_tv <= kHistogramTv,
         "density over " + std::to_string(kDensityStates) + " states: worst |integral - 1| " + fmt(worst_integral) +
             " (<= " + fmt(kDensityIntegral) + "), worst histogram TV " + fmt(worst_tv) + " (<= " +
             fmt(kHistogramTv) + ")");
}

// 3. Gradient integrity on small networks.
agents::Batch random_batch(const regions::World& world, Rng& rng, int n) {
  agents::Batch b;
  b.obs.resize(5, n);
  b.next_obs.resize(5, n);
  b.actions.resize(2, n);
  b.rewards.resize(n);
  b.terminal = VectorXd::Zero(n);
  b.costs.resize(2, n);
  for (int j = 0; j < n; ++j) {
    b.obs.col(j) = random_state(world, rng);
    b.next_obs.col(j) = random_state(world, rng);
    b.actions.col(j) = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    b.rewards(j) = rng.uniform(-8.0, 2.0);
    b.costs(0, j) = rng.uniform() < 0.3;
    b.costs(1, j) = rng.uniform() < 0.3;
  }
  return b;
}

double gradient_error(diffcore::Mlp& net, const diffcore::Gradients& analytic,
                      const std::function<double()>& loss) {
  const VectorXd theta = net.flat_parameters();
  const VectorXd numeric = testing::numeric_gradient(
      [&](const VectorXd& p) {
        net.set_flat_parameters(p);
        const double l = loss();
        net.set_flat_parameters(theta);
        return l;
      },
      theta);
  return (diffcore::Mlp::flatten(analytic) - numeric).norm() / std::max(numeric.norm(), 1e-8);
}

void check_gradients() {
  Rng rng(303);
  double worst_actor = 0.0, worst_critic = 0.0;
  for (Variant v : kVariants) {
    for (int trial = 0; trial < kGradientTrials; ++trial) {
      agents::SacConfig c;
      c.head.hidden = {8, 8};
      c.critic_hidden = {8, 8};
      c.head.activation = c.critic_activation = diffcore::Activation::kTanh;
      agents::SacAgent agent(v, c, regions::World{}, rng.next_u64());
      agent.state().log_alpha = std::log(rng.uniform(0.05, 1.0));
      agent.state().lambda = {rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
      const agents::Batch b = random_batch(agent.world(), rng, 12);
      MatrixXd noise(2, 12), next_noise(2, 12);
      for (int j = 0; j < 12; ++j) {
        noise.col(j) = Vec2(rng.normal(), rng.normal());
        next_noise.col(j) = Vec2(rng.normal(), rng.normal());
      }
      const agents::ActorLoss actor = agent.actor_loss(b, noise);
      worst_actor = std::max(worst_actor, gradient_error(agent.state().actor.net(), actor.grads,
                                                         [&] { return agent.actor_loss(b, noise).loss; }));
      const agents::CriticLoss critic = agent.critic_loss(b, next_noise);
      for (int i = 0; i < 2; ++i)
        worst_critic = std::max(worst_critic, gradient_error(agent.state().critics[i], critic.grads[i],
                                                             [&] { return agent.critic_loss(b, next_noise).loss; }));
      for (std::size_t k = 0; k < agent.state().cost_critics.size(); ++k)
        worst_critic = std::max(worst_critic, gradient_error(agent.state().cost_critics[k], critic.cost_grads[k], [&] {
                                  return agent.critic_loss(b, next_noise).cost_loss[k];
                                }));
    }
  }
  report("3", worst_actor <= kGradientRelative && worst_critic <= kGradientRelative,
         "gradient integrity, width-8 networks, all variants: actor " + fmt(worst_actor) + ", critic " +
             fmt(worst_critic) + " (<= " + fmt(kGradientRelative) + ")");
}

// Training runs shared by criteria 2, 4 and 5.
struct Runs {
  std::map<Variant, std::vector<std::vector<EpisodeRecord>>> records;
  double seconds = 0.0;
  fs::path cnfp_checkpoint;
};

Runs train_all(const ExperimentConfig& base, const fs::path& out, bool reuse) {
  Runs runs;
  for (Variant v : kVariants) {
    ExperimentConfig config = base;
    config.variant = v;
    for (std::uint64_t seed : config.seeds) {
      const fs::path dir = out / std::string(agents::variant_name(v)) / ("seed_" + std::to_string(seed));
      bool done = false;
      if (reuse && fs::exists(dir / "run.json") && fs::exists(dir / "wall_seconds.txt")) {
        const json run = json::parse(slurp(dir / "run.json"));
        done = run.at("status") == "completed" && run.at("config") == config_to_json(config);
      }
      if (!done) {
        fs::remove_all(dir);
        std::fprintf(stderr, "training %s seed %llu\n", std::string(agents::variant_name(v)).c_str(),
                     static_cast<unsigned long long>(seed));
        const auto start = std::chrono::steady_clock::now();
        Trainer(config, seed, dir).run();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream(dir / "wall_seconds.txt") << secs << "\n";
      }
      double secs = 0.0;
      std::ifstream(dir / "wall_seconds.txt") >> secs;
      runs.seconds += secs;
      runs.records[v].push_back(read_metrics(dir / "metrics.csv"));
      if (v == Variant::kCnfp && runs.cnfp_checkpoint.empty()) runs.cnfp_checkpoint = dir / "checkpoint.json";
    }
  }
  return runs;
}

struct WindowStats {
  double violations = 0.0;  // mean per episode, obstacle + battery
  double episode_return = 0.0;
};

WindowStats window(const std::vector<std::vector<EpisodeRecord>>& seeds, bool last) {
  WindowStats w;
  int count = 0;
  for (const auto& r : seeds) {
    const int n = window_length(static_cast<int>(r.size()), kEdgeFraction);
    const int begin = last ? static_cast<int>(r.size()) - n : 0;
    for (int e = begin; e < begin + n; ++e) {
      w.violations += r[e].violations_obstacle + r[e].violations_battery;
      w.episode_return += r[e].episode_return;
      ++count;
    }
  }
  w.violations /= count;
  w.episode_return /= count;
  return w;
}

// 4. Zero violations in every CNFP episode.
void check_safety(const Runs& runs, int episodes) {
  long violating_episodes = 0, total = 0, recorded = 0;
  for (const auto& seed : runs.records.at(Variant::kCnfp)) {
    recorded += static_cast<long>(seed.size());
    for (const auto& r : seed) {
      total += r.violations_obstacle + r.violations_battery;
      violating_episodes += (r.violations_obstacle + r.violations_battery) > 0;
    }
  }
  const long expected = static_cast<long>(runs.records.at(Variant::kCnfp).size()) * episodes;
  report("4", total == 0 && recorded == expected,
         "CNFP safety: " + std::to_string(recorded) + " episodes over " +
             std::to_string(runs.records.at(Variant::kCnfp).size()) + " seeds, " + std::to_string(total) +
             " violations in " + std::to_string(violating_episodes) + " episodes");
}

// 5. Directional baseline contrast.
void check_baselines(const Runs& runs) {
  const WindowStats unc_first = window(runs.records.at(Variant::kUnconstrained), false);
  report("5a", unc_first.violations > 0.0,
         "unconstrained violates early: " + fmt(unc_first.violations) + " violations per episode in the first 10%");

  bool pass_b = true;
  std::string detail_b;
  for (Variant v : {Variant::kLagrangian, Variant::kPenalty}) {
    const WindowStats first = window(runs.records.at(v), false), last = window(runs.records.at(v), true);
    pass_b = pass_b && last.violations < first.violations;
    detail_b += std::string(agents::variant_name(v)) + " " + fmt(first.violations) + " -> " + fmt(last.violations) + "; ";
  }
  report("5b", pass_b, "violations per episode, first 10% -> last 10%: " + detail_b);

  const double cnfp = window(runs.records.at(Variant::kCnfp), true).episode_return;
  const double penalty = window(runs.records.at(Variant::kPenalty), true).episode_return;
  const double unc = window(runs.records.at(Variant::kUnconstrained), true).episode_return;
  const bool beats_penalty = cnfp >= penalty;
  // "Within 15%" is read as not more than 15% below the unconstrained return.
  const bool near_unconstrained = cnfp >= unc - kReturnSlack * std::abs(unc);
  report("5c", beats_penalty && near_unconstrained,
         "final return (last 10%): cnfp " + fmt(cnfp) + ", penalty " + fmt(penalty) + ", unconstrained " + fmt(unc) +
             " (need cnfp >= penalty and cnfp >= unconstrained - 15%)");
  report("5d", runs.seconds <= kBudgetSeconds,
         "training time for all variants and seeds: " + fmt(runs.seconds) + " s (<= " + fmt(kBudgetSeconds) + " s)");
}

// 6. The last flow step wins when the regions are disjoint.
void check_priority(const agents::SacAgent& agent) {
  Rng rng(606);
  int obstacle_ok = 0, battery_violated = 0, total = 0;
  const int states = 20;
  for (int s = 0; s < states; ++s) {
    const flows::Box obstacle(uniform_vector(rng, 2, 1.0).array() - 1.0, uniform_vector(rng, 2, 1.0).array() + 1.5);
    // Ball centred outside the box at a clearance larger than its radius.
    const double radius = rng.uniform(0.1, 1.0);
    const Vec2 dir = Vec2(rng.normal(), rng.normal()).normalized();
    const Vec2 centre =
        obstacle.center() + dir * ((obstacle.half_width().norm()) + radius + rng.uniform(0.01, 1.0));
    const flows::Ball battery(centre, radius);
    flows::FlowChain chain;
    chain.steps = {{battery}, {obstacle}};
    const regions::Observation obs = random_state(agent.world(), rng);
    const agents::PolicyBatch head = agent.policy_batch(obs, Vec2::Zero());
    const Vec2 mean = head.head.mean.col(0);
    const Vec2 sigma = head.head.log_std.col(0).array().exp();
    for (int n = 0; n < kPrioritySamples / states; ++n) {
      const Vec2 latent = mean + sigma.cwiseProduct(Vec2(rng.normal(), rng.normal()));
      const Vec2 a = flows::chain_forward(latent, chain).point;
      obstacle_ok += flows::contains(obstacle, a);
      battery_violated += (a - centre).norm() >= radius;
      ++total;
    }
  }
  report("6", obstacle_ok == total && battery_violated == total,
         "priority with disjoint regions: " + std::to_string(obstacle_ok) + "/" + std::to_string(total) +
             " inside the later region, " + std::to_string(battery_violated) + "/" + std::to_string(total) +
             " outside the earlier one");
}

// 7. Swapping the two steps changes the output.
void check_order() {
  const regions::World world;
  Rng rng(707);
  double best = 0.0;
  regions::Observation best_obs;
  Vec2 best_latent = Vec2::Zero();
  for (int trial = 0; trial < 200 && best <= kOrderGap; ++trial) {
    const regions::Observation obs =
        regions::make_observation(free_point(world, rng), rng.uniform(21.0, 40.0), free_point(world, rng));
    flows::FlowChain chain = regions::constraint_chain(world, obs);
    flows::FlowChain swapped = chain;
    std::swap(swapped.steps[0], swapped.steps[1]);
    const Vec2 latent(rng.normal(), rng.normal());
    const double gap = (flows::chain_forward(latent, chain).point - flows::chain_forward(latent, swapped).point).norm();
    if (gap > best) {
      best = gap;
      best_obs = obs;
      best_latent = latent;
    }
  }
  std::ostringstream where;
  where << "state (" << best_obs.transpose() << "), latent (" << best_latent.transpose() << ")";
  report("7", best > kOrderGap, "order matters: |f_O(f_B(a)) - f_B(f_O(a))| = " + fmt(best) + " at " + where.str());
}

// 8. Byte-identical metrics from identical config and seed.
void check_determinism(const ExperimentConfig& base, const fs::path& out) {
  bool same = true;
  for (Variant v : kVariants) {
    ExperimentConfig c = base;
    c.variant = v;
    c.episodes = kDeterminismEpisodes;
    c.sac.warmup_steps = 200;
    std::string first;
    for (const char* run : {"a", "b"}) {
      const fs::path dir = out / "determinism" / std::string(agents::variant_name(v)) / run;
      fs::remove_all(dir);
      Trainer(c, 12345, dir).run();
      const std::string bytes = slurp(dir / "metrics.csv");
      if (first.empty())
        first = bytes;
      else
        same = same && bytes == first;
    }
  }
  report("8", same, "determinism: metrics.csv byte-identical across two runs for every variant");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string config_path = CNFP_SOURCE_DIR "/configs/acceptance.json";
  std::string out = "acceptance_runs";
  bool reuse = false;
  std::vector<std::string> only;
  app.add_option("--config", config_path, "Training config for the agent runs")->capture_default_str();
  app.add_option("--out", out, "Directory for training outputs")->capture_default_str();
  app.add_flag("--reuse", reuse, "Reuse completed runs with an identical config");
  app.add_option("--only", only, "Criteria to run, e.g. 1 3 5");
  CLI11_PARSE(app, argc, argv);

  const std::set<std::string> selected(only.begin(), only.end());
  auto want = [&](const std::string& id) { return selected.empty() || selected.count(id); };

  try {
    const ExperimentConfig config = load_config(config_path);
    if (want("1")) check_flows();
    if (want("3")) check_gradients();
    if (want("6")) check_priority(agents::SacAgent(Variant::kCnfp, config.sac, config.world, 6));
    if (want("7")) check_order();
    if (want("8")) check_determinism(config, out);
    if (want("2") || want("4") || want("5")) {
      const Runs runs = train_all(config, out, reuse);
      if (want("4")) check_safety(runs, config.episodes);
      if (want("5")) check_baselines(runs);
      if (want("2")) check_density(restore_agent(read_checkpoint(runs.cnfp_checkpoint)));
    }
  } catch (const std::exception& e) {
    report("!", false, std::string("acceptance run aborted: ") + e.what());
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
