#include "svea/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "svea/errors.hpp"

namespace svea {

CsvRow metrics_header() { return {"run_id", "step", "metric", "value", "task", "perturbation", "seed"}; }

CsvRow to_row(const DiagnosticRecord& r) {
  return {r.run_id, std::to_string(r.step), r.metric, format_number(r.value), r.task, r.perturbation,
          std::to_string(r.seed)};
}

DiagnosticRecord record_from_row(const CsvTable& table, const CsvRow& row) {
  DiagnosticRecord r;
  try {
    r.run_id = row.at(table.column("run_id"));
    r.step = std::stoll(row.at(table.column("step")));
    r.metric = row.at(table.column("metric"));
    r.value = std::stod(row.at(table.column("value")));
    r.task = row.at(table.column("task"));
    r.perturbation = row.at(table.column("perturbation"));
    r.seed = std::stoull(row.at(table.column("seed")));
  } catch (const std::invalid_argument&) {
    throw IoError("metrics row with a non-numeric step, value or seed");
  } catch (const std::out_of_range&) {
    throw IoError("metrics row with an out-of-range number");
  }
  return r;
}

std::vector<DiagnosticRecord> read_metrics_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  std::vector<DiagnosticRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(record_from_row(table, row));
  return out;
}

MetricsLog::MetricsLog(const std::filesystem::path& path)
    : writer_(std::make_unique<CsvWriter>(path, metrics_header())) {}

void MetricsLog::add(const DiagnosticRecord& r) {
  if (!std::isfinite(r.value))
    throw NumericError("metric '" + r.metric + "' at step " + std::to_string(r.step) + " is not finite");
  if (!keys_.emplace(r.step, r.metric, r.task, r.perturbation, r.seed).second)
    throw UsageError("metric '" + r.metric + "' logged twice at step " + std::to_string(r.step) + " for " +
                     r.task + "/" + r.perturbation);
  records_.push_back(r);
  if (writer_) writer_->write(to_row(r));
}

void MetricsLog::flush() {
  if (writer_) writer_->flush();
}

double q_target_variance(const Agent& agent, const Batch& batch, const AugmentationSpec& spec, TargetStyle style,
                         int n_resamples, Rng& rng) {
  if (n_resamples < 2) throw UsageError("q_target_variance needs at least 2 resamples");
  const std::int64_t n = batch.size();
  std::vector<Tensor> targets;
  targets.reserve(static_cast<std::size_t>(n_resamples));
  for (int k = 0; k < n_resamples; ++k) {
    const Tensor next = style == TargetStyle::naive ? augment_batch(batch.next_obs, spec, rng) : batch.next_obs;
    targets.push_back(agent.compute_q_target(agent.target(), batch.rewards, batch.not_done, next, rng));
  }
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& t : targets) mean += t[i];
    mean /= n_resamples;
    double ss = 0.0;
    for (const auto& t : targets) ss += (t[i] - mean) * (t[i] - mean);
    total += ss / (n_resamples - 1);
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

double q_gap(const Agent& agent, const Batch& batch, const AugmentationSpec& spec, int n_resamples, Rng& rng) {
  if (n_resamples < 1) throw UsageError("q_gap needs at least 1 resample");
  const ActionBatch actions = ActionBatch::of(batch);
  Tape tape;
  tape.set_grad_enabled(false);
  const Tensor clean = agent.q_predictions(tape, agent.critic(), batch.obs, actions).front().value();
  double total = 0.0;
  for (int k = 0; k < n_resamples; ++k) {
    const Tensor aug = augment_batch(batch.obs, spec, rng);
    Tape t;
    t.set_grad_enabled(false);
    const Tensor q = agent.q_predictions(t, agent.critic(), aug, actions).front().value();
    for (std::int64_t i = 0; i < clean.numel(); ++i) total += std::abs(static_cast<double>(clean[i]) - q[i]);
  }
  const double count = static_cast<double>(clean.numel()) * n_resamples;
  return count > 0 ? total / count : 0.0;
}

namespace {

template <class Policy>
EvalResult run_episodes(const EnvConfig& cfg, const EnvPerturbation& perturbation, int n_episodes,
                        std::uint64_t seed, Policy policy) {
  if (n_episodes < 1) throw UsageError("evaluate needs at least one episode");
  Env env(cfg, perturbation, seed);
  EvalResult out;
  for (int e = 0; e < n_episodes; ++e) {
    Tensor obs = env.reset();
    double ret = 0.0;
    for (;;) {
      StepResult r = env.step(policy(obs));
      ret += r.reward;
      obs = std::move(r.observation);
      if (r.done) break;
    }
    out.returns.push_back(ret);
    out.successes.push_back(success_criterion(env.trace()));
  }
  double total = 0.0;
  int wins = 0;
  for (std::size_t i = 0; i < out.returns.size(); ++i) {
    total += out.returns[i];
    wins += out.successes[i] ? 1 : 0;
  }
  out.mean_return = total / n_episodes;
  out.success_rate = static_cast<double>(wins) / n_episodes;
  return out;
}

}  // namespace

EvalResult evaluate(const Agent& agent, const EnvConfig& env, const EnvPerturbation& perturbation, int n_episodes,
                    std::uint64_t seed) {
  return run_episodes(env, perturbation, n_episodes, seed, [&](const Tensor& obs) { return agent.act_greedy(obs); });
}

EvalResult evaluate_random(const EnvConfig& env, const EnvPerturbation& perturbation, int n_episodes,
                           std::uint64_t seed) {
  Rng rng = make_stream(seed, "random_policy");
  const int dim = env.action_dim();
  const bool discrete = env.action_space == ActionSpace::discrete;
  return run_episodes(env, perturbation, n_episodes, seed, [&](const Tensor&) {
    if (discrete) return Action::discrete(uniform_int(rng, 0, dim - 1));
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = uniform(rng, -1.0, 1.0);
    return Action::continuous(std::move(v));
  });
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace svea
