#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "svea/train_loop.hpp"

namespace svea {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything that determines a set of runs; one run per seed.
struct RunConfig {
  std::string name = "run";
  std::string encoder_profile = "desk_cnn";
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path out_dir = "runs/default";

  /// Copies the environment geometry into the encoder and the action space
  /// into the learner, then validates.
  void resolve();
};

RunConfig default_run_config();

/// Strict JSON: unknown keys and wrong types are ConfigErrors naming the
/// field path; syntax errors name the line and column.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Pretty-printed resolved snapshot, as written to config.json.
std::string resolved_config_text(const RunConfig& cfg);
/// FNV-1a of the resolved snapshot without "seeds" and "out_dir", which
/// select runs rather than change them.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hash_hex(std::uint64_t h);

/// Command-line values that replace config fields when present.
struct ConfigOverrides {
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::int64_t> steps;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> encoder;
  std::optional<std::string> aug;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::string> algorithm;
};
void apply_overrides(RunConfig& cfg, const ConfigOverrides& o);

/// "1,2,3" -> {1, 2, 3}.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace svea
