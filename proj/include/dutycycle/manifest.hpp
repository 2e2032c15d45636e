#pragma once

// Run manifests: enough to repeat a command and check its outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dutycycle/datamodel.hpp"

namespace dutycycle {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
inline std::string fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<std::uint8_t>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json options = nlohmann::json::object();  // effective settings after flag overrides

  nlohmann::json to_json() const {
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& p : outputs)
      if (std::filesystem::is_regular_file(p)) hashes[p] = fnv1a_file(p);
    nlohmann::json input_hashes = nlohmann::json::object();
    for (const auto& p : inputs)
      if (std::filesystem::is_regular_file(p)) input_hashes[p] = fnv1a_file(p);
    return {{"command", command},   {"config", config_path},     {"seeds", seeds},
            {"inputs", input_hashes}, {"outputs", hashes},        {"options", options},
            {"tool_version", kToolVersion}};
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json().dump(1) << '\n';
  }
};

}  // namespace dutycycle
