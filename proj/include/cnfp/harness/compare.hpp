#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnfp/harness/metrics.hpp"

namespace cnfp::harness {

struct RunSeries {
  std::string label;  // usually the agent variant
  std::string source;
  std::vector<EpisodeRecord> records;
};

/// Reads a metrics file; the label comes from run.json next to it, or the
/// parent directory name when there is none.
RunSeries load_series(const std::filesystem::path& metrics_path);

struct SeriesStats {
  int runs = 0;
  std::vector<double> return_mean, return_std;
  std::vector<double> obstacle_mean, obstacle_std;
  std::vector<double> battery_mean, battery_std;
};

struct Comparison {
  int episodes = 0;  // common length after alignment
  std::map<std::string, SeriesStats> groups;
  std::vector<std::string> warnings;
  std::map<std::string, double> final_return;  // mean over the last 10% of episodes, all seeds
  std::optional<double> cnfp_gap;              // unconstrained minus CNFP final return
};

/// Groups runs by label and aggregates per episode across seeds (sample std).
/// Needs at least two runs; runs of unequal length are cut to the shortest.
Comparison compare_runs(const std::vector<RunSeries>& runs);

/// Long-format table: episode,label,runs,return_mean,return_std,...
std::string comparison_csv(const Comparison& c);
nlohmann::json comparison_summary(const Comparison& c);

/// Window of the first or last `fraction` of `episodes`, at least one episode.
int window_length(int episodes, double fraction);

}  // namespace cnfp::harness
