#include "cnfp/harness/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "cnfp/errors.hpp"
#include "cnfp/harness/metrics.hpp"

namespace cnfp::harness {

using nlohmann::json;

namespace {

// JSON has no infinities; log(alpha) is -inf when the temperature is zero.
json scalar_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double scalar_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw ConfigError("checkpoint: bad scalar '" + s + "'");
}

json gradients_to_json(const diffcore::Gradients& g) {
  json w = json::array(), b = json::array();
  for (const auto& m : g.weight) w.push_back(matrix_to_json(m));
  for (const auto& v : g.bias) b.push_back(matrix_to_json(v));
  return {{"weight", w}, {"bias", b}};
}

diffcore::Gradients gradients_from_json(const json& j) {
  diffcore::Gradients g;
  for (const auto& m : j.at("weight")) g.weight.push_back(matrix_from_json(m));
  for (const auto& v : j.at("bias")) g.bias.push_back(matrix_from_json(v).col(0));
  return g;
}

json adam_to_json(const diffcore::Adam& opt) {
  return {{"m", gradients_to_json(opt.first_moment())},
          {"v", gradients_to_json(opt.second_moment())},
          {"t", opt.step_count()}};
}

void adam_from_json(const json& j, diffcore::Adam& opt, const diffcore::Mlp& net) {
  diffcore::Gradients m = gradients_from_json(j.at("m"));
  diffcore::Gradients v = gradients_from_json(j.at("v"));
  const diffcore::Gradients shape = net.zero_gradients();
  auto same = [&](const diffcore::Gradients& g) {
    if (g.weight.size() != shape.weight.size() || g.bias.size() != shape.bias.size()) return false;
    for (std::size_t i = 0; i < g.weight.size(); ++i)
      if (g.weight[i].rows() != shape.weight[i].rows() || g.weight[i].cols() != shape.weight[i].cols() ||
          g.bias[i].size() != shape.bias[i].size())
        return false;
    return true;
  };
  if (!same(m) || !same(v)) throw ConfigError("checkpoint: optimiser moments do not match the network");
  opt.restore(std::move(m), std::move(v), j.at("t").get<long>());
}

json mlp_list_to_json(const auto& nets) {
  json out = json::array();
  for (const auto& n : nets) out.push_back(mlp_to_json(n));
  return out;
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw ConfigError("checkpoint: matrix size does not match its data");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json mlp_to_json(const diffcore::Mlp& net) {
  std::vector<std::string> acts;
  for (auto a : net.activations()) acts.emplace_back(diffcore::activation_name(a));
  return {{"widths", net.widths()}, {"activations", acts}, {"parameters", matrix_to_json(net.flat_parameters())}};
}

void mlp_from_json(const json& j, diffcore::Mlp& net) {
  std::vector<diffcore::Activation> acts;
  for (const auto& a : j.at("activations")) acts.push_back(diffcore::parse_activation(a.get<std::string>()));
  if (j.at("widths").get<std::vector<int>>() != net.widths() || acts != net.activations())
    throw ConfigError("checkpoint: network architecture does not match the configuration");
  const Eigen::MatrixXd flat = matrix_from_json(j.at("parameters"));
  if (flat.cols() != 1 || static_cast<std::size_t>(flat.rows()) != net.parameter_count())
    throw ConfigError("checkpoint: parameter count mismatch");
  net.set_flat_parameters(flat.col(0));
}

json agent_to_json(const agents::SacAgent& agent) {
  const agents::AgentState& s = agent.state();
  json cost_opt = json::array();
  for (const auto& o : s.cost_opt) cost_opt.push_back(adam_to_json(o));
  return {{"variant", std::string(agents::variant_name(agent.variant()))},
          {"actor", mlp_to_json(s.actor.net())},
          {"critics", mlp_list_to_json(s.critics)},
          {"critic_targets", mlp_list_to_json(s.critic_targets)},
          {"cost_critics", mlp_list_to_json(s.cost_critics)},
          {"cost_targets", mlp_list_to_json(s.cost_targets)},
          {"actor_opt", adam_to_json(s.actor_opt)},
          {"critic_opt", {adam_to_json(s.critic_opt[0]), adam_to_json(s.critic_opt[1])}},
          {"cost_opt", cost_opt},
          {"log_alpha", scalar_to_json(s.log_alpha)},
          {"alpha_opt", {{"m", s.alpha_opt.m}, {"v", s.alpha_opt.v}, {"t", s.alpha_opt.t}}},
          {"lambda", s.lambda},
          {"rng", agent.rng().save_state()}};
}

void agent_from_json(const json& j, agents::SacAgent& agent) {
  try {
    if (j.at("variant").get<std::string>() != agents::variant_name(agent.variant()))
      throw ConfigError("checkpoint: agent variant does not match the configuration");
    agents::AgentState& s = agent.state();
    mlp_from_json(j.at("actor"), s.actor.net());
    for (int i = 0; i < 2; ++i) {
      mlp_from_json(j.at("critics").at(i), s.critics[i]);
      mlp_from_json(j.at("critic_targets").at(i), s.critic_targets[i]);
      adam_from_json(j.at("critic_opt").at(i), s.critic_opt[i], s.critics[i]);
    }
    if (j.at("cost_critics").size() != s.cost_critics.size())
      throw ConfigError("checkpoint: cost critic count mismatch");
    for (std::size_t k = 0; k < s.cost_critics.size(); ++k) {
      mlp_from_json(j.at("cost_critics").at(k), s.cost_critics[k]);
      mlp_from_json(j.at("cost_targets").at(k), s.cost_targets[k]);
      adam_from_json(j.at("cost_opt").at(k), s.cost_opt[k], s.cost_critics[k]);
    }
    adam_from_json(j.at("actor_opt"), s.actor_opt, s.actor.net());
    s.log_alpha = scalar_from_json(j.at("log_alpha"));
    s.alpha_opt.m = j.at("alpha_opt").at("m").get<double>();
    s.alpha_opt.v = j.at("alpha_opt").at("v").get<double>();
    s.alpha_opt.t = j.at("alpha_opt").at("t").get<long>();
    s.lambda = j.at("lambda").get<std::array<double, agents::kNumConstraints>>();
    agent.rng().restore_state(j.at("rng").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed agent state: ") + e.what());
  }
}

json buffer_to_json(const agents::ReplayBuffer& buffer) {
  const std::size_t n = buffer.size();
  std::vector<double> obs, next_obs, actions, rewards;
  std::vector<int> flags;  // terminal, truncated, obstacle, battery
  obs.reserve(5 * n);
  next_obs.reserve(5 * n);
  actions.reserve(2 * n);
  rewards.reserve(n);
  flags.reserve(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const agents::Transition t = buffer.at(i);
    obs.insert(obs.end(), t.obs.data(), t.obs.data() + 5);
    next_obs.insert(next_obs.end(), t.next_obs.data(), t.next_obs.data() + 5);
    actions.insert(actions.end(), t.action.data(), t.action.data() + 2);
    rewards.push_back(t.reward);
    flags.insert(flags.end(), {t.terminal, t.truncated, t.violated_obstacle, t.violated_battery});
  }
  return {{"size", n},         {"next", buffer.next_slot()}, {"obs", obs},        {"next_obs", next_obs},
          {"actions", actions}, {"rewards", rewards},         {"flags", flags}};
}

agents::ReplayBuffer buffer_from_json(const json& j, std::size_t capacity) {
  try {
    const auto n = j.at("size").get<std::size_t>();
    const auto obs = j.at("obs").get<std::vector<double>>();
    const auto next_obs = j.at("next_obs").get<std::vector<double>>();
    const auto actions = j.at("actions").get<std::vector<double>>();
    const auto rewards = j.at("rewards").get<std::vector<double>>();
    const auto flags = j.at("flags").get<std::vector<int>>();
    if (obs.size() != 5 * n || next_obs.size() != 5 * n || actions.size() != 2 * n || rewards.size() != n ||
        flags.size() != 4 * n || n > capacity)
      throw ConfigError("checkpoint: replay buffer arrays have inconsistent sizes");
    agents::ReplayBuffer buffer(capacity);
    for (std::size_t i = 0; i < n; ++i) {
      agents::Transition t;
      t.obs = Eigen::Map<const regions::Observation>(obs.data() + 5 * i);
      t.next_obs = Eigen::Map<const regions::Observation>(next_obs.data() + 5 * i);
      t.action = Eigen::Map<const Eigen::Vector2d>(actions.data() + 2 * i);
      t.reward = rewards[i];
      t.terminal = flags[4 * i];
      t.truncated = flags[4 * i + 1];
      t.violated_obstacle = flags[4 * i + 2];
      t.violated_battery = flags[4 * i + 3];
      buffer.add(t);
    }
    buffer.set_cursor(j.at("next").get<std::size_t>(), n);
    return buffer;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed replay buffer: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const json j{{"version", kCheckpointVersion},
               {"config", config_to_json(c.config)},
               {"seed", c.seed},
               {"agent", c.agent},
               {"trainer", c.trainer}};
  write_file_atomic(path, j.dump());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j.at("version").is_number_integer())
    throw ConfigError("checkpoint " + path.string() + " has no version field");
  const int version = j.at("version").get<int>();
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  try {
    c.config = config_from_json(j.at("config"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.agent = j.at("agent");
    c.trainer = j.value("trainer", json());
  } catch (const json::exception& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return c;
}

agents::SacAgent restore_agent(const Checkpoint& c) {
  agents::SacAgent agent(c.config.variant, c.config.sac, c.config.world, c.seed);
  agent_from_json(c.agent, agent);
  return agent;
}

}  // namespace cnfp::harness
