#include "cnfp/harness/compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cnfp/errors.hpp"

namespace cnfp::harness {

using nlohmann::json;

namespace {

void mean_std_at(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  sd = 0.0;
  if (xs.size() < 2) return;
  for (double x : xs) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
}

}  // namespace

int window_length(int episodes, double fraction) {
  return std::max(1, static_cast<int>(std::lround(episodes * fraction)));
}

RunSeries load_series(const std::filesystem::path& metrics_path) {
  RunSeries s;
  s.source = metrics_path.string();
  s.records = read_metrics(metrics_path);
  const auto run_json = metrics_path.parent_path() / "run.json";
  if (std::ifstream in(run_json); in) {
    try {
      s.label = json::parse(in).at("variant").get<std::string>();
    } catch (const json::exception& e) {
      throw ConfigError("malformed " + run_json.string() + ": " + e.what());
    }
  } else {
    s.label = std::filesystem::absolute(metrics_path).parent_path().filename().string();
  }
  return s;
}

Comparison compare_runs(const std::vector<RunSeries>& runs) {
  if (runs.size() < 2) throw ConfigError("comparison needs at least two runs");
  Comparison c;
  std::size_t shortest = runs.front().records.size(), longest = shortest;
  for (const auto& r : runs) {
    shortest = std::min(shortest, r.records.size());
    longest = std::max(longest, r.records.size());
  }
  if (shortest == 0) throw ConfigError("a run has no episodes");
  if (shortest != longest)
    c.warnings.push_back("episode budgets differ (" + std::to_string(shortest) + " to " + std::to_string(longest) +
                         "); all runs cut to the first " + std::to_string(shortest));
  c.episodes = static_cast<int>(shortest);

  std::map<std::string, std::vector<const RunSeries*>> by_label;
  for (const auto& r : runs) by_label[r.label].push_back(&r);

  const int tail = window_length(c.episodes, 0.1);
  for (const auto& [label, members] : by_label) {
    SeriesStats st;
    st.runs = static_cast<int>(members.size());
    for (auto* v : {&st.return_mean, &st.return_std, &st.obstacle_mean, &st.obstacle_std, &st.battery_mean,
                    &st.battery_std})
      v->resize(c.episodes);
    std::vector<double> ret(members.size()), obs(members.size()), bat(members.size());
    double final_sum = 0.0;
    for (int e = 0; e < c.episodes; ++e) {
      for (std::size_t k = 0; k < members.size(); ++k) {
        const EpisodeRecord& r = members[k]->records[e];
        ret[k] = r.episode_return;
        obs[k] = r.violations_obstacle;
        bat[k] = r.violations_battery;
        if (e >= c.episodes - tail) final_sum += r.episode_return;
      }
      mean_std_at(ret, st.return_mean[e], st.return_std[e]);
      mean_std_at(obs, st.obstacle_mean[e], st.obstacle_std[e]);
      mean_std_at(bat, st.battery_mean[e], st.battery_std[e]);
    }
    c.final_return[label] = final_sum / (static_cast<double>(tail) * members.size());
    c.groups.emplace(label, std::move(st));
  }
  if (c.final_return.count("cnfp") && c.final_return.count("unconstrained"))
    c.cnfp_gap = c.final_return.at("unconstrained") - c.final_return.at("cnfp");
  return c;
}

std::string comparison_csv(const Comparison& c) {
  std::string out =
      "episode,label,runs,return_mean,return_std,violations_obstacle_mean,violations_obstacle_std,"
      "violations_battery_mean,violations_battery_std\n";
  for (const auto& [label, st] : c.groups)
    for (int e = 0; e < c.episodes; ++e)
      out += std::to_string(e) + "," + label + "," + std::to_string(st.runs) + "," + format_double(st.return_mean[e]) +
             "," + format_double(st.return_std[e]) + "," + format_double(st.obstacle_mean[e]) + "," +
             format_double(st.obstacle_std[e]) + "," + format_double(st.battery_mean[e]) + "," +
             format_double(st.battery_std[e]) + "\n";
  return out;
}

json comparison_summary(const Comparison& c) {
  json j{{"episodes", c.episodes}, {"warnings", c.warnings}, {"final_return_last_10pct", c.final_return}};
  json runs = json::object();
  for (const auto& [label, st] : c.groups) runs[label] = st.runs;
  j["runs"] = runs;
  j["cnfp_vs_unconstrained_gap"] = c.cnfp_gap ? json(*c.cnfp_gap) : json();
  return j;
}

}  // namespace cnfp::harness
