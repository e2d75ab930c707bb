#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cnfp::harness {

inline constexpr const char* kMetricsHeader = "episode,return,violations_obstacle,violations_battery,seconds";

struct EpisodeRecord {
  int episode = 0;
  double episode_return = 0.0;
  int violations_obstacle = 0;
  int violations_battery = 0;
  double seconds = 0.0;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::string format_record(const EpisodeRecord& record);

/// Appends one line per episode and flushes it, so a crashed run keeps its history.
class MetricsWriter {
 public:
  /// Truncates unless `append`; a fresh file starts with the header.
  MetricsWriter(const std::filesystem::path& path, bool append);
  void write(const EpisodeRecord& record);

 private:
  std::ofstream out_;
};

std::vector<EpisodeRecord> read_metrics(const std::filesystem::path& path);

/// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace cnfp::harness
