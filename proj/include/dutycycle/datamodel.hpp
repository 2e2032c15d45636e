#pragma once

// Shared domain types for conveyor duty-cycle monitoring.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dutycycle {

/// Timestamps are integer epoch minutes (one sample per minute).
using Minute = std::int64_t;

/// Raised when input data violates a domain invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-minute machine state. `Pad` only appears inside transition-encoder vectors.
enum class OperationMode : std::uint8_t { Off = 0, Idle = 1, Operational = 2, Active = 3, Pad = 4 };

inline constexpr int kNumModes = 4;  // real modes, Pad excluded
inline constexpr std::array<OperationMode, 4> kRealModes{OperationMode::Off, OperationMode::Idle,
                                                         OperationMode::Operational,
                                                         OperationMode::Active};

constexpr int ordinal(OperationMode m) { return static_cast<int>(m); }

inline OperationMode mode_from_ordinal(int code) {
  if (code < 0 || code > 4) throw DataError("invalid operation mode ordinal " + std::to_string(code));
  return static_cast<OperationMode>(code);
}

/// Belt is moving (speed above threshold) in these modes.
constexpr bool is_moving(OperationMode m) {
  return m == OperationMode::Operational || m == OperationMode::Active;
}

constexpr bool is_static(OperationMode m) {
  return m == OperationMode::Off || m == OperationMode::Idle;
}

constexpr std::string_view to_string(OperationMode m) {
  switch (m) {
    case OperationMode::Off: return "Off";
    case OperationMode::Idle: return "Idle";
    case OperationMode::Operational: return "Operational";
    case OperationMode::Active: return "Active";
    case OperationMode::Pad: return "Pad";
  }
  return "?";
}

namespace detail {
inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace detail

/// Case-insensitive; accepts "Oper" as short form of Operational.
inline OperationMode parse_mode(std::string_view s) {
  const auto l = detail::lower(s);
  if (l == "off") return OperationMode::Off;
  if (l == "idle") return OperationMode::Idle;
  if (l == "operational" || l == "oper") return OperationMode::Operational;
  if (l == "active") return OperationMode::Active;
  throw DataError("unknown operation mode '" + std::string(s) + "'");
}

enum class CycleClass : std::uint8_t { Normal = 0, Abnormal = 1 };

inline constexpr int kNumCycleClasses = 2;

constexpr std::string_view to_string(CycleClass c) {
  return c == CycleClass::Normal ? "normal" : "abnormal";
}

inline CycleClass parse_cycle_class(std::string_view s) {
  const auto l = detail::lower(s);
  if (l == "normal") return CycleClass::Normal;
  if (l == "abnormal") return CycleClass::Abnormal;
  throw DataError("unknown cycle class '" + std::string(s) + "'");
}

/// One 1-minute averaged reading.
struct SensorRecord {
  Minute timestamp = 0;
  std::string month;
  double speed = 0.0;          // rpm
  double high_pressure = 0.0;  // bar
  double low_pressure = 0.0;   // bar
  std::optional<OperationMode> mode;

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

/// A reference or detected duty cycle spanning [onset, offset] minutes.
struct CycleEvent {
  Minute onset = 0;
  Minute offset = 0;
  CycleClass cycle_class = CycleClass::Normal;

  Minute duration() const { return offset - onset; }

  friend bool operator==(const CycleEvent&, const CycleEvent&) = default;
};

struct Violation {
  std::size_t index = 0;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks record-level invariants. Timestamp gaps are accepted only where the month tag changes.
inline ValidationReport validate_series(const std::vector<SensorRecord>& records) {
  ValidationReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.speed < 0.0) report.violations.push_back({i, "negative speed"});
    if (r.high_pressure < 0.0) report.violations.push_back({i, "negative high pressure"});
    if (r.low_pressure < 0.0) report.violations.push_back({i, "negative low pressure"});
    if (r.mode && *r.mode == OperationMode::Pad)
      report.violations.push_back({i, "pad mode in ground truth"});
    if (i == 0) continue;
    const auto& prev = records[i - 1];
    if (r.timestamp <= prev.timestamp) {
      report.violations.push_back({i, "non-increasing timestamp"});
    } else if (r.timestamp - prev.timestamp != 1 && r.month == prev.month) {
      report.violations.push_back({i, "gap inside month"});
    }
  }
  return report;
}

/// Checks that events are well formed, time ordered and non-overlapping.
inline ValidationReport validate_events(const std::vector<CycleEvent>& events) {
  ValidationReport report;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].onset >= events[i].offset) report.violations.push_back({i, "onset >= offset"});
    if (i > 0 && events[i].onset <= events[i - 1].offset)
      report.violations.push_back({i, "overlapping reference cycles"});
  }
  return report;
}

/// Index ranges [begin, end) of contiguous 1-minute segments (split at timestamp gaps).
inline std::vector<std::pair<std::size_t, std::size_t>> contiguous_segments(
    const std::vector<SensorRecord>& records) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= records.size(); ++i) {
    if (i == records.size() || records[i].timestamp != records[i - 1].timestamp + 1) {
      if (i > begin) out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

}  // namespace dutycycle
