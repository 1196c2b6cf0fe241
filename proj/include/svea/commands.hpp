#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "svea/config.hpp"

namespace svea {

/// Worker cap from SVEA_LAB_THREADS (default 1, at least 1).
int worker_threads();

/// Runs one training job per seed under out_dir/seed_<s>/, each holding
/// config.json, metrics.csv, checkpoints/step_*.bin and plots/returns.svg.
/// A failing seed leaves its partial artifacts plus failure.json; the first
/// failure is rethrown after every worker has finished.
std::vector<std::filesystem::path> cmd_train(const RunConfig& cfg);

/// The default evaluation suite: training config, color_hard, texture and
/// the intensity sweep 0, 0.1, 0.2, 0.3, 0.5.
std::vector<std::string> default_eval_suite();

struct EvalOptions {
  std::filesystem::path run_dir;     // a seed directory holding config.json
  std::filesystem::path checkpoint;  // empty: the latest checkpoints/step_*.bin
  std::vector<std::string> suite = default_eval_suite();
  int episodes = 10;
  std::uint64_t eval_seed = 0;
  std::filesystem::path out;  // empty: <run_dir>/eval.csv
};

/// Evaluates a checkpoint across a perturbation suite; one eval_return and one
/// eval_success row per perturbation, in the metrics.csv schema.
std::filesystem::path cmd_eval(const EvalOptions& options);

/// Aggregates runs (seed directories, or parents of seed_* directories)
/// grouped by run name: per (name, metric, task, perturbation, step) the median
/// and quartiles across seeds, plus the difference of medians to the first
/// group. Writes summary.csv and plots/*.svg under `out`.
std::filesystem::path cmd_compare(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out);

/// One n-sample sheet per augmentation kind (all seven plus none) from a
/// short random rollout of `task`, as out/augs/<kind>.ppm.
std::vector<std::filesystem::path> cmd_render_aug(Task task, int n, std::uint64_t seed,
                                                  const std::filesystem::path& out);

/// Runs the gradient-check suite and prints one line per case; true when
/// every case is within tolerance.
bool cmd_gradcheck(std::uint64_t seed, std::ostream& out);

}  // namespace svea
