#pragma once

// CSV ingestion and serialization of sensor series and cycle annotations.
//
//   sensors.csv  timestamp_min,month,speed_rpm,high_pressure_bar,low_pressure_bar[,mode]
//   events.csv   onset_min,offset_min,class
//
// UTF-8, LF line endings, '.' decimal separator. Reals are written in shortest
// round-trip form so parse(write(x)) == x holds bit-exactly.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dutycycle/datamodel.hpp"

namespace dutycycle {

inline constexpr std::string_view kSensorHeader =
    "timestamp_min,month,speed_rpm,high_pressure_bar,low_pressure_bar";
inline constexpr std::string_view kEventHeader = "onset_min,offset_min,class";

/// Records plus reference annotations. `provenance` is either
/// {"kind":"synthetic","config":{...}} or {"kind":"ingested","files":[...]}.
struct Dataset {
  std::vector<SensorRecord> records;
  std::vector<CycleEvent> reference_cycles;
  nlohmann::json provenance = nlohmann::json::object();

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SensorSchema {
  /// When true the `mode` column must be present.
  bool require_mode = false;
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void fail_line(const std::string& path, std::size_t line, const std::string& msg) {
  throw DataError(path + ":" + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view text, const std::string& path, std::size_t line, const char* field) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty())
    fail_line(path, line, std::string("malformed ") + field + " '" + std::string(text) + "'");
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace detail

inline SensorRecord parse_sensor_row(std::string_view line, bool has_mode, const std::string& path,
                                     std::size_t line_no) {
  const auto cols = detail::split_csv(line);
  const std::size_t expected = has_mode ? 6 : 5;
  if (cols.size() != expected)
    detail::fail_line(path, line_no,
                      "expected " + std::to_string(expected) + " columns, got " + std::to_string(cols.size()));
  SensorRecord r;
  r.timestamp = detail::parse_number<Minute>(cols[0], path, line_no, "timestamp");
  if (cols[1].empty()) detail::fail_line(path, line_no, "empty month tag");
  r.month = std::string(cols[1]);
  r.speed = detail::parse_number<double>(cols[2], path, line_no, "speed");
  r.high_pressure = detail::parse_number<double>(cols[3], path, line_no, "high pressure");
  r.low_pressure = detail::parse_number<double>(cols[4], path, line_no, "low pressure");
  if (r.speed < 0.0) detail::fail_line(path, line_no, "negative speed");
  if (r.high_pressure < 0.0) detail::fail_line(path, line_no, "negative high pressure");
  if (r.low_pressure < 0.0) detail::fail_line(path, line_no, "negative low pressure");
  if (has_mode) {
    try {
      r.mode = parse_mode(cols[5]);
    } catch (const DataError& e) {
      detail::fail_line(path, line_no, e.what());
    }
  }
  return r;
}

/// Row-at-a-time reader over a sensor CSV stream; holds one line at a time.
class SensorCsvReader {
 public:
  SensorCsvReader(std::istream& in, std::string path, SensorSchema schema = {}) : in_(in), path_(std::move(path)) {
    std::string line;
    if (!std::getline(in_, line)) throw DataError(path_ + ": missing header");
    const auto header = detail::trim_cr(line);
    if (header == kSensorHeader) {
      has_mode_ = false;
    } else if (header == std::string(kSensorHeader) + ",mode") {
      has_mode_ = true;
    } else {
      throw DataError(path_ + ":1: unexpected header '" + std::string(header) + "'");
    }
    if (schema.require_mode && !has_mode_) throw DataError(path_ + ": mode column required");
  }

  bool has_mode() const { return has_mode_; }

  std::optional<SensorRecord> next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      const auto row = detail::trim_cr(line_);
      if (!row.empty()) return parse_sensor_row(row, has_mode_, path_, line_no_);
    }
    return std::nullopt;
  }

 private:
  std::istream& in_;
  std::string path_;
  std::string line_;
  std::size_t line_no_ = 1;
  bool has_mode_ = false;
};

/// Parses sensor rows from a stream. `path` is only used in error messages.
inline std::vector<SensorRecord> parse_sensor_csv(std::istream& in, const std::string& path,
                                                  SensorSchema schema = {}) {
  SensorCsvReader reader(in, path, schema);
  std::vector<SensorRecord> records;
  while (auto r = reader.next()) records.push_back(std::move(*r));
  return records;
}

inline std::vector<SensorRecord> parse_sensor_csv(const std::filesystem::path& path, SensorSchema schema = {}) {
  auto in = detail::open_input(path);
  return parse_sensor_csv(in, path.string(), schema);
}

inline std::vector<CycleEvent> parse_events_csv(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header");
  if (detail::trim_cr(line) != kEventHeader)
    throw DataError(path + ":1: unexpected header '" + std::string(detail::trim_cr(line)) + "'");
  std::vector<CycleEvent> events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = detail::trim_cr(line);
    if (row.empty()) continue;
    const auto cols = detail::split_csv(row);
    if (cols.size() != 3) detail::fail_line(path, line_no, "expected 3 columns");
    CycleEvent e;
    e.onset = detail::parse_number<Minute>(cols[0], path, line_no, "onset");
    e.offset = detail::parse_number<Minute>(cols[1], path, line_no, "offset");
    try {
      e.cycle_class = parse_cycle_class(cols[2]);
    } catch (const DataError& err) {
      detail::fail_line(path, line_no, err.what());
    }
    if (e.onset >= e.offset) detail::fail_line(path, line_no, "onset >= offset");
    if (!events.empty() && e.onset <= events.back().offset)
      detail::fail_line(path, line_no, "overlapping reference cycles");
    events.push_back(e);
  }
  return events;
}

inline std::vector<CycleEvent> parse_events_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_events_csv(in, path.string());
}

inline void write_sensor_row(std::ostream& out, const SensorRecord& r, bool with_mode) {
  out << r.timestamp << ',' << r.month << ',' << detail::format_double(r.speed) << ','
      << detail::format_double(r.high_pressure) << ',' << detail::format_double(r.low_pressure);
  if (with_mode) out << ',' << to_string(r.mode.value_or(OperationMode::Idle));
  out << '\n';
}

/// The mode column is written iff every record carries a label.
inline void write_sensor_csv(std::ostream& out, const std::vector<SensorRecord>& records) {
  const bool with_mode =
      !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) { return r.mode.has_value(); });
  out << kSensorHeader << (with_mode ? ",mode" : "") << '\n';
  for (const auto& r : records) write_sensor_row(out, r, with_mode);
}

inline void write_events_csv(std::ostream& out, const std::vector<CycleEvent>& events) {
  out << kEventHeader << '\n';
  for (const auto& e : events) out << e.onset << ',' << e.offset << ',' << to_string(e.cycle_class) << '\n';
}

namespace detail {
inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}
}  // namespace detail

inline void write_events_csv(const std::filesystem::path& path, const std::vector<CycleEvent>& events) {
  auto out = detail::open_output(path);
  write_events_csv(out, events);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct DatasetFiles {
  std::filesystem::path sensors;
  std::filesystem::path events;
  std::filesystem::path provenance;
};

/// Writes sensors.csv, events.csv and provenance.json into `dir` (created if missing).
inline DatasetFiles write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetFiles files{dir / "sensors.csv", dir / "events.csv", dir / "provenance.json"};
  {
    auto out = detail::open_output(files.sensors);
    write_sensor_csv(out, d.records);
    if (!out) throw std::runtime_error("write failed: " + files.sensors.string());
  }
  write_events_csv(files.events, d.reference_cycles);
  {
    auto out = detail::open_output(files.provenance);
    out << d.provenance.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + files.provenance.string());
  }
  return files;
}

/// Reads a dataset directory. A missing provenance.json yields an "ingested" provenance.
inline Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset d;
  d.records = parse_sensor_csv(dir / "sensors.csv");
  d.reference_cycles = parse_events_csv(dir / "events.csv");
  const auto prov = dir / "provenance.json";
  if (std::filesystem::exists(prov)) {
    auto in = detail::open_input(prov);
    try {
      d.provenance = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(prov.string() + ": " + e.what());
    }
  } else {
    d.provenance = {{"kind", "ingested"},
                    {"files", {(dir / "sensors.csv").string(), (dir / "events.csv").string()}}};
  }
  return d;
}

}  // namespace dutycycle
