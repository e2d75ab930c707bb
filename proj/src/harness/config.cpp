#include "cnfp/harness/config.hpp"

#include <fstream>
#include <set>

#include "cnfp/errors.hpp"

namespace cnfp::harness {

using nlohmann::json;

namespace {

/// Reads optional fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

regions::Rect rect_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected [x_min, x_max, y_min, y_max]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json rect_to_json(const regions::Rect& r) { return json::array({r.x_min, r.x_max, r.y_min, r.y_max}); }

std::vector<int> hidden_from_json(const json& j, const std::string& where) {
  try {
    return j.get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

diffcore::Activation activation_from(const std::string& name, const std::string& where) {
  try {
    return diffcore::parse_activation(name);
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (episodes <= 0) throw ConfigError("episode budget must be positive");
  if (eval_every < 0 || eval_episodes < 0 || checkpoint_every < 0)
    throw ConfigError("evaluation and checkpoint cadences must be non-negative");
  if (max_nonfinite_streak <= 0) throw ConfigError("max_nonfinite_streak must be positive");
  sac.validate();
  try {
    world.validate();
  } catch (const InvalidStateError& e) {
    throw ConfigError(std::string("world: ") + e.what());
  }
}

agents::SacConfig sac_from_json(const json& j) {
  agents::SacConfig c;
  Fields f(j, "sac");
  f.get("gamma", c.gamma);
  f.get("tau", c.tau);
  f.get("actor_lr", c.actor_lr);
  f.get("critic_lr", c.critic_lr);
  f.get("alpha_lr", c.alpha_lr);
  f.get("initial_alpha", c.initial_alpha);
  f.get("auto_alpha", c.auto_alpha);
  f.get("target_entropy", c.target_entropy);
  f.get("batch_size", c.batch_size);
  f.get("buffer_capacity", c.buffer_capacity);
  f.get("warmup_steps", c.warmup_steps);
  f.get("update_every", c.update_every);
  f.get("updates_per_round", c.updates_per_round);
  f.get("penalty", c.penalty);
  f.get("lambda_lr", c.lambda_lr);
  f.get("lambda_max", c.lambda_max);
  f.get("lambda_init", c.lambda_init);
  f.get("cost_epsilon", c.cost_epsilon);
  f.get("cost_gamma", c.cost_gamma);
  if (const json* h = f.sub("actor_hidden")) c.head.hidden = hidden_from_json(*h, f.path("actor_hidden"));
  if (const json* h = f.sub("critic_hidden")) c.critic_hidden = hidden_from_json(*h, f.path("critic_hidden"));
  std::string act;
  f.get("actor_activation", act);
  if (!act.empty()) c.head.activation = activation_from(act, f.path("actor_activation"));
  act.clear();
  f.get("critic_activation", act);
  if (!act.empty()) c.critic_activation = activation_from(act, f.path("critic_activation"));
  f.get("log_std_min", c.head.log_std_min);
  f.get("log_std_max", c.head.log_std_max);
  f.finish();
  return c;
}

json sac_to_json(const agents::SacConfig& c) {
  return json{{"gamma", c.gamma},
              {"tau", c.tau},
              {"actor_lr", c.actor_lr},
              {"critic_lr", c.critic_lr},
              {"alpha_lr", c.alpha_lr},
              {"initial_alpha", c.initial_alpha},
              {"auto_alpha", c.auto_alpha},
              {"target_entropy", c.target_entropy},
              {"batch_size", c.batch_size},
              {"buffer_capacity", c.buffer_capacity},
              {"warmup_steps", c.warmup_steps},
              {"update_every", c.update_every},
              {"updates_per_round", c.updates_per_round},
              {"penalty", c.penalty},
              {"lambda_lr", c.lambda_lr},
              {"lambda_max", c.lambda_max},
              {"lambda_init", c.lambda_init},
              {"cost_epsilon", c.cost_epsilon},
              {"cost_gamma", c.cost_gamma},
              {"actor_hidden", c.head.hidden},
              {"critic_hidden", c.critic_hidden},
              {"actor_activation", std::string(diffcore::activation_name(c.head.activation))},
              {"critic_activation", std::string(diffcore::activation_name(c.critic_activation))},
              {"log_std_min", c.head.log_std_min},
              {"log_std_max", c.head.log_std_max}};
}

regions::World world_from_json(const json& j) {
  regions::World w;
  Fields top(j, "world");
  if (const json* lj = top.sub("layout")) {
    Fields f(*lj, "world.layout");
    auto& l = w.layout;
    if (const json* r = f.sub("arena")) l.arena = rect_from_json(*r, f.path("arena"));
    if (const json* r = f.sub("obstacle")) l.obstacle = rect_from_json(*r, f.path("obstacle"));
    if (const json* s = f.sub("stations")) {
      if (!s->is_array()) throw ConfigError(f.path("stations") + ": expected an array");
      l.stations.clear();
      for (const json& sj : *s) {
        Fields sf(sj, f.path("stations") + "[]");
        regions::ChargingStation st;
        std::array<double, 2> pos{0.0, 0.0};
        sf.get("position", pos);
        st.position = regions::Vec2(pos[0], pos[1]);
        sf.get("service_radius", st.service_radius);
        sf.finish();
        l.stations.push_back(st);
      }
    }
    f.get("max_step", l.max_step);
    f.get("goal_radius", l.goal_radius);
    f.get("goal_bonus", l.goal_bonus);
    f.get("episode_length", l.episode_length);
    f.get("spawn_clearance", l.spawn_clearance);
    f.finish();
  }
  if (const json* bj = top.sub("battery")) {
    Fields f(*bj, "world.battery");
    f.get("initial", w.battery.initial);
    f.get("depletion_per_step", w.battery.depletion_per_step);
    f.get("threshold", w.battery.threshold);
    f.get("charge_to", w.battery.charge_to);
    f.finish();
  }
  if (const json* rj = top.sub("regions")) {
    Fields f(*rj, "world.regions");
    f.get("margin", w.regions.margin);
    f.get("min_box_width", w.regions.min_box_width);
    f.get("corner_blend", w.regions.corner_blend);
    if (const json* sj = f.sub("battery_schedule")) {
      Fields sf(*sj, f.path("battery_schedule"));
      auto& s = w.regions.battery;
      sf.get("progress_per_step", s.progress_per_step);
      sf.get("full_pull_slack", s.full_pull_slack);
      sf.get("pull_band", s.pull_band);
      sf.get("radius_max", s.radius_max);
      sf.get("radius_min", s.radius_min);
      sf.get("target_ratio_cap", s.target_ratio_cap);
      sf.finish();
    }
    f.finish();
  }
  top.finish();
  return w;
}

json world_to_json(const regions::World& w) {
  json stations = json::array();
  for (const auto& s : w.layout.stations)
    stations.push_back({{"position", {s.position.x(), s.position.y()}}, {"service_radius", s.service_radius}});
  const auto& s = w.regions.battery;
  return json{{"layout",
               {{"arena", rect_to_json(w.layout.arena)},
                {"obstacle", rect_to_json(w.layout.obstacle)},
                {"stations", stations},
                {"max_step", w.layout.max_step},
                {"goal_radius", w.layout.goal_radius},
                {"goal_bonus", w.layout.goal_bonus},
                {"episode_length", w.layout.episode_length},
                {"spawn_clearance", w.layout.spawn_clearance}}},
              {"battery",
               {{"initial", w.battery.initial},
                {"depletion_per_step", w.battery.depletion_per_step},
                {"threshold", w.battery.threshold},
                {"charge_to", w.battery.charge_to}}},
              {"regions",
               {{"margin", w.regions.margin},
                {"min_box_width", w.regions.min_box_width},
                {"corner_blend", w.regions.corner_blend},
                {"battery_schedule",
                 {{"progress_per_step", s.progress_per_step},
                  {"full_pull_slack", s.full_pull_slack},
                  {"pull_band", s.pull_band},
                  {"radius_max", s.radius_max},
                  {"radius_min", s.radius_min},
                  {"target_ratio_cap", s.target_ratio_cap}}}}}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Fields f(j, "config");
  std::string variant;
  f.get("variant", variant);
  if (!variant.empty()) c.variant = agents::parse_variant(variant);
  f.get("seeds", c.seeds);
  f.get("episodes", c.episodes);
  if (const json* s = f.sub("sac")) c.sac = sac_from_json(*s);
  if (const json* w = f.sub("world")) c.world = world_from_json(*w);
  f.get("eval_every", c.eval_every);
  f.get("eval_episodes", c.eval_episodes);
  f.get("checkpoint_every", c.checkpoint_every);
  f.get("checkpoint_replay", c.checkpoint_replay);
  f.get("out_dir", c.out_dir);
  f.get("record_wall_clock", c.record_wall_clock);
  f.get("max_nonfinite_streak", c.max_nonfinite_streak);
  f.finish();
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"variant", std::string(agents::variant_name(c.variant))},
              {"seeds", c.seeds},
              {"episodes", c.episodes},
              {"sac", sac_to_json(c.sac)},
              {"world", world_to_json(c.world)},
              {"eval_every", c.eval_every},
              {"eval_episodes", c.eval_episodes},
              {"checkpoint_every", c.checkpoint_every},
              {"checkpoint_replay", c.checkpoint_replay},
              {"out_dir", c.out_dir},
              {"record_wall_clock", c.record_wall_clock},
              {"max_nonfinite_streak", c.max_nonfinite_streak}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace cnfp::harness
