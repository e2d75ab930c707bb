#include "cnfp/harness/metrics.hpp"

#include <charconv>
#include <sstream>

#include "cnfp/errors.hpp"

namespace cnfp::harness {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_record(const EpisodeRecord& r) {
  return std::to_string(r.episode) + "," + format_double(r.episode_return) + "," +
         std::to_string(r.violations_obstacle) + "," + std::to_string(r.violations_battery) + "," +
         format_double(r.seconds);
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool append) {
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw ConfigError("cannot open metrics file " + path.string());
  if (fresh) out_ << kMetricsHeader << '\n' << std::flush;
}

void MetricsWriter::write(const EpisodeRecord& record) { out_ << format_record(record) << '\n' << std::flush; }

namespace {

double parse_double(const std::string& field, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ConfigError(where + ": cannot parse '" + field + "'");
  return v;
}

int parse_int(const std::string& field, const std::string& where) {
  int v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ConfigError(where + ": cannot parse '" + field + "'");
  return v;
}

}  // namespace

std::vector<EpisodeRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw ConfigError(path.string() + ": missing or unexpected metrics header");
  std::vector<EpisodeRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 5) throw ConfigError(where + ": expected 5 fields");
    records.push_back({parse_int(fields[0], where), parse_double(fields[1], where), parse_int(fields[2], where),
                       parse_int(fields[3], where), parse_double(fields[4], where)});
  }
  return records;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cnfp::harness
