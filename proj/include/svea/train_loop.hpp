#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "svea/agent.hpp"
#include "svea/env.hpp"
#include "svea/metrics.hpp"

namespace svea {

struct TrainConfig {
  EnvConfig env;
  LearnerConfig learner;
  /// Budget in environment (simulator) steps; one agent step advances the
  /// simulator by the action repeat.
  std::int64_t env_steps = 100000;
  int batch_size = 128;
  int buffer_capacity = 20000;
  int seed_steps = 1000;       // agent steps of uniform random acting before updates start
  int update_every = 1;        // agent steps between update rounds
  int updates_per_round = 1;
  std::int64_t log_every = 2000;   // environment steps between loss summaries
  std::int64_t eval_every = 10000; // environment steps between evaluations; 0 disables
  int eval_episodes = 5;
  std::vector<std::string> eval_perturbations{"train"};
  bool diagnostics = true;     // q_target_variance and q_gap at every evaluation
  int diagnostic_batch = 64;
  std::int64_t checkpoint_every = 0;  // environment steps; 0 keeps only the final checkpoint
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.2;  // share of the budget over which epsilon decays

  std::int64_t agent_steps() const;
  void validate() const;
};

/// Linear epsilon schedule of a DQN run at agent step `t`.
double epsilon_at(const TrainConfig& cfg, std::int64_t t);

struct RunIdentity {
  std::string run_id = "run";
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::filesystem::path out_dir;  // empty: nothing written to disk
};

struct RunResult {
  Agent agent;
  std::vector<DiagnosticRecord> records;
  std::vector<double> episode_returns;
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
};

/// Called after every gradient update.
using UpdateHook = std::function<void(const Agent&, const UpdateStats&)>;

/// Collects experience with the agent, updates it from replay and logs
/// metrics; writes metrics.csv and checkpoints/step_*.bin under out_dir.
RunResult train_loop(const TrainConfig& cfg, const RunIdentity& id, const UpdateHook& hook = {});

}  // namespace svea
