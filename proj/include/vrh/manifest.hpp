#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace vrh {

std::string sha256_hex(std::string_view bytes);
/// Throws std::runtime_error if the file cannot be read.
std::string file_sha256(const std::string& path);

struct ManifestOutput {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

/// Everything needed to rerun a command: the resolved config and its hash,
/// the seeds of every replica, versions, and digests of the outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string config_hash;  // over the canonical config without `workers`
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;  // label -> seed
  std::vector<ManifestOutput> outputs;
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();
  double wall_seconds = 0.0;

  void set_config(const nlohmann::json& canonical);
  /// Digests `dir/relative` and lists it.
  void add_output(const std::string& dir, const std::string& relative);
  [[nodiscard]] nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

std::string version_string();

}  // namespace vrh
