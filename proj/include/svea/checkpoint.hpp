#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "svea/agent.hpp"
#include "svea/param_store.hpp"

namespace svea {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointManifest {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::int64_t step = 0;     // environment steps
  std::int64_t updates = 0;  // gradient updates
};

struct Checkpoint {
  CheckpointManifest manifest;
  std::vector<std::pair<std::string, ParamStore>> stores;

  const ParamStore& store(const std::string& name) const;
};

/// Binary layout: magic "SVEACKPT", manifest, then named stores of named
/// float tensors (rank, dims, values), all little-endian.
void write_checkpoint(const std::filesystem::path& path, const CheckpointManifest& manifest,
                      const std::vector<std::pair<std::string, const ParamStore*>>& stores);
/// Throws IoError on a bad magic, unknown version or truncated file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Stores "critic", "target", "actor" and "log_temperature".
void save_agent(const std::filesystem::path& path, const Agent& agent, std::uint64_t config_hash, std::int64_t step);
/// Loads parameter values into `agent`. Throws ConfigError quoting both hashes
/// when `expected_hash` differs from the manifest, and when structures differ.
CheckpointManifest load_agent(const std::filesystem::path& path, Agent& agent, std::uint64_t expected_hash);

}  // namespace svea
