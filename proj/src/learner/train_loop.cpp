#include "svea/train_loop.hpp"

#include <algorithm>
#include <cmath>

#include "svea/checkpoint.hpp"
#include "svea/errors.hpp"

namespace svea {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("train config: " + what);
}

struct Mean {
  double sum = 0.0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double value() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

bool crossed(std::int64_t before, std::int64_t after, std::int64_t every) {
  return every > 0 && after / every > before / every;
}

Action random_action(const EnvConfig& env, Rng& rng) {
  if (env.action_space == ActionSpace::discrete) return Action::discrete(uniform_int(rng, 0, env.action_dim() - 1));
  std::vector<double> v(static_cast<std::size_t>(env.action_dim()));
  for (auto& x : v) x = uniform(rng, -1.0, 1.0);
  return Action::continuous(std::move(v));
}

}  // namespace

std::int64_t TrainConfig::agent_steps() const { return env_steps / env.resolved_action_repeat(); }

void TrainConfig::validate() const {
  env.validate();
  learner.validate();
  require(env.action_space == learner.action_space, "environment and learner disagree on the action space");
  require(env.action_dim() == learner.action_dim,
          "learner action_dim " + std::to_string(learner.action_dim) + " but the task has " +
              std::to_string(env.action_dim()));
  require(learner.encoder.in_channels == env.channels() && learner.encoder.height == env.height &&
              learner.encoder.width == env.width,
          "encoder input (" + std::to_string(learner.encoder.in_channels) + ", " +
              std::to_string(learner.encoder.height) + ", " + std::to_string(learner.encoder.width) +
              ") does not match observations (" + std::to_string(env.channels()) + ", " +
              std::to_string(env.height) + ", " + std::to_string(env.width) + ")");
  require(env_steps >= 0, "env_steps must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(buffer_capacity >= batch_size, "buffer_capacity must be >= batch_size");
  require(seed_steps >= 0, "seed_steps must be >= 0");
  require(update_every >= 1 && updates_per_round >= 1, "update_every and updates_per_round must be >= 1");
  require(log_every >= 1, "log_every must be >= 1");
  require(eval_every >= 0 && checkpoint_every >= 0, "eval_every and checkpoint_every must be >= 0");
  require(eval_episodes >= 1, "eval_episodes must be >= 1");
  require(diagnostic_batch >= 1, "diagnostic_batch must be >= 1");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0,
          "epsilon bounds must be in [0, 1]");
  require(epsilon_fraction > 0.0 && epsilon_fraction <= 1.0, "epsilon_fraction must be in (0, 1]");
  for (const auto& p : eval_perturbations) EnvPerturbation::parse(p).validate();
}

double epsilon_at(const TrainConfig& cfg, std::int64_t t) {
  const double horizon = cfg.epsilon_fraction * static_cast<double>(std::max<std::int64_t>(cfg.agent_steps(), 1));
  const double frac = std::min(1.0, static_cast<double>(t) / horizon);
  return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

RunResult train_loop(const TrainConfig& cfg, const RunIdentity& id, const UpdateHook& hook) {
  cfg.validate();
  const std::string task = to_string(cfg.env.task);
  const int repeat = cfg.env.resolved_action_repeat();
  const std::int64_t steps = cfg.agent_steps();
  const bool dqn = cfg.learner.algorithm == Algorithm::dqn;

  MetricsLog log = id.out_dir.empty() ? MetricsLog() : MetricsLog(id.out_dir / "metrics.csv");
  auto emit = [&](std::int64_t step, const std::string& metric, double value, const std::string& perturbation) {
    log.add(DiagnosticRecord{id.run_id, step, metric, value, task, perturbation, id.seed});
  };

  Env env(cfg.env, EnvPerturbation::train(), id.seed);
  ReplayBuffer buffer(cfg.buffer_capacity, cfg.env.frame_stack, cfg.env.height, cfg.env.width, cfg.env.action_dim(),
                      id.seed);
  Agent agent(cfg.learner, id.seed);
  Rng rollout = make_stream(id.seed, "rollout");
  Rng diag_rng = make_stream(id.seed, "diagnostics");
  const std::uint64_t eval_seed = make_stream(id.seed, "eval")();
  std::vector<EnvPerturbation> suite;
  for (const auto& p : cfg.eval_perturbations) suite.push_back(EnvPerturbation::parse(p));
  const AugmentationSpec diag_spec =
      cfg.learner.strong.kind == AugKind::none ? AugmentationSpec::of(AugKind::conv) : cfg.learner.strong;

  auto run_eval = [&](std::int64_t frames) {
    for (const auto& p : suite) {
      const EvalResult r = evaluate(agent, cfg.env, p, cfg.eval_episodes, eval_seed);
      emit(frames, "eval_return", r.mean_return, p.name);
      emit(frames, "eval_success", r.success_rate, p.name);
    }
    if (cfg.diagnostics && buffer.size() > 0) {
      std::vector<int> slots(static_cast<std::size_t>(cfg.diagnostic_batch));
      for (auto& s : slots) s = uniform_int(diag_rng, 0, buffer.size() - 1);
      const Batch batch = buffer.gather(slots);
      emit(frames, "q_target_variance_naive",
           q_target_variance(agent, batch, diag_spec, TargetStyle::naive, 16, diag_rng), "train");
      emit(frames, "q_target_variance_svea",
           q_target_variance(agent, batch, diag_spec, TargetStyle::svea, 16, diag_rng), "train");
      emit(frames, "q_gap", q_gap(agent, batch, diag_spec, 8, diag_rng), "train");
    }
    log.flush();
  };
  auto checkpoint = [&](std::int64_t frames) {
    if (id.out_dir.empty()) return;
    save_agent(id.out_dir / "checkpoints" / ("step_" + std::to_string(frames) + ".bin"), agent, id.config_hash,
               frames);
  };

  std::vector<double> episode_returns;
  Tensor obs = env.reset();
  std::vector<std::uint8_t> bytes = env.observation_bytes();
  double episode_return = 0.0;
  Mean critic_loss, actor_loss, q_target;
  std::int64_t last_eval = -1, last_checkpoint = -1;

  for (std::int64_t t = 0; t < steps; ++t) {
    const double epsilon = epsilon_at(cfg, t);
    const Action action = t < cfg.seed_steps ? random_action(cfg.env, rollout)
                                             : agent.act(obs, ActMode::train, dqn ? epsilon : 0.0);
    StepResult r = env.step(action);
    std::vector<std::uint8_t> next_bytes = env.observation_bytes();
    // Episodes end only on the time limit, so every transition bootstraps.
    buffer.add(bytes, action, r.reward, next_bytes, false);
    episode_return += r.reward;

    if (t >= cfg.seed_steps && (t - cfg.seed_steps) % cfg.update_every == 0 && buffer.size() >= cfg.batch_size) {
      for (int k = 0; k < cfg.updates_per_round; ++k) {
        const UpdateStats stats = agent.update(buffer.sample(cfg.batch_size));
        critic_loss.add(stats.critic_loss);
        q_target.add(stats.mean_q_target);
        if (stats.actor_updated) actor_loss.add(stats.actor_loss);
        if (hook) hook(agent, stats);
      }
    }

    const std::int64_t before = t * repeat, frames = (t + 1) * repeat;
    if (r.done) {
      emit(frames, "train_return", episode_return, "train");
      emit(frames, "train_success", success_criterion(env.trace()) ? 1.0 : 0.0, "train");
      episode_returns.push_back(episode_return);
      episode_return = 0.0;
      obs = env.reset();
      bytes = env.observation_bytes();
    } else {
      obs = std::move(r.observation);
      bytes = std::move(next_bytes);
    }

    if (crossed(before, frames, cfg.log_every)) {
      if (critic_loss.n) {
        emit(frames, "critic_loss", critic_loss.value(), "train");
        emit(frames, "mean_q_target", q_target.value(), "train");
      }
      if (actor_loss.n) emit(frames, "actor_loss", actor_loss.value(), "train");
      if (dqn) emit(frames, "epsilon", t < cfg.seed_steps ? 1.0 : epsilon, "train");
      else emit(frames, "temperature", agent.temperature(), "train");
      emit(frames, "updates", static_cast<double>(agent.updates()), "train");
      critic_loss = Mean{};
      actor_loss = Mean{};
      q_target = Mean{};
      log.flush();
    }
    if (crossed(before, frames, cfg.eval_every)) {
      run_eval(frames);
      last_eval = frames;
    }
    if (crossed(before, frames, cfg.checkpoint_every)) {
      checkpoint(frames);
      last_checkpoint = frames;
    }
  }

  const std::int64_t total = steps * repeat;
  if (cfg.eval_every > 0 && last_eval != total) run_eval(total);
  if (last_checkpoint != total) checkpoint(total);
  log.flush();
  const std::int64_t updates = agent.updates();
  return RunResult{std::move(agent), log.records(), std::move(episode_returns), total, updates};
}

}  // namespace svea
