#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "svea/agent.hpp"
#include "svea/augment.hpp"
#include "svea/csv.hpp"
#include "svea/env.hpp"
#include "svea/replay_buffer.hpp"

namespace svea {

struct DiagnosticRecord {
  std::string run_id;
  std::int64_t step = 0;
  std::string metric;
  double value = 0.0;
  std::string task;
  std::string perturbation;
  std::uint64_t seed = 0;
};

/// Column order of metrics.csv.
CsvRow metrics_header();
CsvRow to_row(const DiagnosticRecord& r);
DiagnosticRecord record_from_row(const CsvTable& table, const CsvRow& row);
std::vector<DiagnosticRecord> read_metrics_csv(const std::filesystem::path& path);

/// Streams records to metrics.csv. Rejects non-finite values and repeated
/// (step, metric, task, perturbation, seed) keys with UsageError.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::filesystem::path& path);

  void add(const DiagnosticRecord& r);
  const std::vector<DiagnosticRecord>& records() const { return records_; }
  void flush();

 private:
  std::unique_ptr<CsvWriter> writer_;
  std::vector<DiagnosticRecord> records_;
  std::set<std::tuple<std::int64_t, std::string, std::string, std::string, std::uint64_t>> keys_;
};

/// How successor observations enter the target. naive: a fresh strong
/// augmentation of s' per resample. svea: s' as stored.
enum class TargetStyle { naive, svea };

/// Mean over transitions of the sample variance (n - 1 denominator) of the
/// Q-target across `n_resamples` recomputations with the agent's target
/// network. Augmentation and SAC next-action samples draw from `rng`.
double q_target_variance(const Agent& agent, const Batch& batch, const AugmentationSpec& spec, TargetStyle style,
                         int n_resamples, Rng& rng);

/// Mean over transitions and resamples of |Q(s, a) - Q(tau(s, nu), a)| under
/// the online critic (first critic for SAC).
double q_gap(const Agent& agent, const Batch& batch, const AugmentationSpec& spec, int n_resamples, Rng& rng);

struct EvalResult {
  double mean_return = 0.0;
  double success_rate = 0.0;
  std::vector<double> returns;
  std::vector<bool> successes;
};

/// Greedy (DQN) or mean-action (SAC) episodes on a fresh environment seeded
/// with `seed`. Deterministic in (parameters, perturbation, seed).
EvalResult evaluate(const Agent& agent, const EnvConfig& env, const EnvPerturbation& perturbation, int n_episodes,
                    std::uint64_t seed);

/// Same protocol with a uniformly random policy drawing from `seed`.
EvalResult evaluate_random(const EnvConfig& env, const EnvPerturbation& perturbation, int n_episodes,
                           std::uint64_t seed);

double median(std::vector<double> values);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace svea
