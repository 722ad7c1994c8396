#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace plcguard::cli {

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI invocation. Output hashes are taken from the files on
/// disk, so they can be recomputed and compared later.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  double wall_clock_s = 0.0;
  std::map<std::string, std::string> hashes;  // output path -> sha256
  int exit_status = 0;
  std::string error;

  void hash_outputs();
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void write(const std::filesystem::path& path) const;
  /// Outputs whose current hash differs from the recorded one.
  std::vector<std::string> verify() const;
};

/// Where a run's manifest goes: <dir>/manifest.json for a directory
/// output, <file>.manifest.json otherwise.
std::filesystem::path manifest_path_for(const std::filesystem::path& out);

}  // namespace plcguard::cli
