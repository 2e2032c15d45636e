#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dutycycle.hpp"

namespace testutil {

using namespace dutycycle;

inline OperationMode mode_of(char c) {
  switch (c) {
    case 'F': return OperationMode::Off;
    case 'I': return OperationMode::Idle;
    case 'O': return OperationMode::Operational;
    case 'A': return OperationMode::Active;
    default: return OperationMode::Pad;
  }
}

inline std::vector<OperationMode> modes(const std::string& s) {
  std::vector<OperationMode> out;
  for (char c : s) out.push_back(mode_of(c));
  return out;
}

// One labelled, noise-free record per character (F=Off, I=Idle, O=Operational, A=Active).
inline std::vector<SensorRecord> records_from(const std::string& s, Minute start = 1000, const std::string& month = "m0") {
  const GeneratorConfig cfg;
  std::vector<SensorRecord> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto m = mode_of(s[i]);
    const auto& e = cfg.emission[static_cast<std::size_t>(ordinal(m))];
    out.push_back({start + static_cast<Minute>(i), month, e.speed.mean, e.high_pressure.mean, e.low_pressure.mean, m});
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dutycycle_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline GeneratorConfig small_config(int cycles = 80, std::uint64_t seed = 3) {
  GeneratorConfig c;
  c.n_cycles = cycles;
  c.seed = seed;
  return c;
}

}  // namespace testutil

namespace dutycycle {
inline void PrintTo(OperationMode m, std::ostream* os) { *os << to_string(m); }
inline void PrintTo(CycleClass c, std::ostream* os) { *os << to_string(c); }
inline void PrintTo(const CycleEvent& e, std::ostream* os) {
  *os << "{" << e.onset << "," << e.offset << "," << to_string(e.cycle_class) << "}";
}
}  // namespace dutycycle
