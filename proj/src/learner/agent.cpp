#include "svea/agent.hpp"

#include <cmath>

#include "svea/errors.hpp"
#include "svea/networks.hpp"
#include "svea/ops.hpp"

namespace svea {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("learner config: " + what);
}

bool is_encoder_param(const std::string& name) { return name.rfind("encoder.", 0) == 0; }

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::dqn ? "dqn" : "sac"; }

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dqn") return Algorithm::dqn;
  if (name == "sac") return Algorithm::sac;
  throw ConfigError("unknown algorithm '" + name + "' (expected dqn, sac)");
}

std::string to_string(UpdateMode m) {
  switch (m) {
    case UpdateMode::plain: return "plain";
    case UpdateMode::naive: return "naive";
    case UpdateMode::svea: return "svea";
  }
  return "svea";
}

UpdateMode parse_update_mode(const std::string& name) {
  if (name == "plain") return UpdateMode::plain;
  if (name == "naive") return UpdateMode::naive;
  if (name == "svea") return UpdateMode::svea;
  throw ConfigError("unknown update mode '" + name + "' (expected plain, naive, svea)");
}

void LearnerConfig::validate() const {
  encoder.validate();
  strong.validate();
  require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
  require(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0, "alpha, beta must be >= 0 with alpha + beta > 0");
  require(tau_encoder > 0.0 && tau_encoder <= 1.0 && tau_critic > 0.0 && tau_critic <= 1.0,
          "momentum coefficients must be in (0, 1]");
  require(target_update_every >= 1 && actor_update_every >= 1, "update frequencies must be >= 1");
  require(action_dim >= 1 && hidden >= 1 && head_layers >= 1, "action_dim, hidden and head_layers must be >= 1");
  require(adam.lr > 0.0 && adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
              adam.eps > 0.0,
          "adam needs lr > 0, betas in [0, 1), eps > 0");
  require(weak_shift_radius >= 0, "weak_shift_radius must be >= 0");
  require(init_temperature > 0.0, "init_temperature must be positive");
  require(log_std_min < log_std_max, "log_std_min must be below log_std_max");
  if (algorithm == Algorithm::dqn)
    require(action_space == ActionSpace::discrete, "dqn needs a discrete action space");
  else
    require(action_space == ActionSpace::continuous, "sac needs a continuous action space");
}

void ema_update(ParamStore& target, const ParamStore& online, double zeta_encoder, double zeta_other) {
  if (!target.same_structure(online)) throw UsageError("ema_update: target and online parameters differ in structure");
  for (std::size_t i = 0; i < target.size(); ++i) {
    const float z = static_cast<float>(is_encoder_param(target.name(i)) ? zeta_encoder : zeta_other);
    const float keep = 1.0f - z;
    auto psi = target.value(i).span();
    const auto theta = online.value(i).span();
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = keep * psi[k] + z * theta[k];
  }
}

Agent::Agent(LearnerConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      aug_rng_(make_stream(seed, "aug")),
      explore_rng_(make_stream(seed, "explore")),
      policy_rng_(make_stream(seed, "policy")) {
  config_.validate();
  Rng init = make_stream(seed, "init");
  init_encoder_params(config_.encoder, critic_, "encoder.", init);
  const int f = config_.encoder.output_dim(), a = config_.action_dim;
  if (config_.algorithm == Algorithm::dqn) {
    init_mlp(critic_, "q.", f, config_.hidden, a, config_.head_layers, init);
  } else {
    init_mlp(critic_, "q1.", f + a, config_.hidden, 1, config_.head_layers, init);
    init_mlp(critic_, "q2.", f + a, config_.hidden, 1, config_.head_layers, init);
    init_mlp(actor_, "actor.", f, config_.hidden, 2 * a, config_.head_layers, init);
  }
  target_ = critic_.clone_values();
  log_temperature_.add("log_alpha", Tensor(Shape{1}, static_cast<float>(std::log(config_.init_temperature))));
}

double Agent::temperature() const { return std::exp(static_cast<double>(log_temperature_.value(0)[0])); }

Tensor Agent::weak(const Tensor& obs) {
  if (!config_.weak_shift) return obs;
  AugmentationSpec shift = AugmentationSpec::of(AugKind::shift);
  shift.shift_radius = config_.weak_shift_radius;
  return augment_batch(obs, shift, aug_rng_);
}

void Agent::update_target() { ema_update(target_, critic_, config_.tau_encoder, config_.tau_critic); }

UpdateStats Agent::finish_critic_step(Tape& tape, Var loss, const Tensor& actor_obs, const Tensor& targets) {
  UpdateStats stats;
  stats.critic_loss = loss.value().item();
  if (!std::isfinite(stats.critic_loss))
    throw NumericError("critic loss is non-finite at update " + std::to_string(updates_));
  double total = 0.0;
  for (float t : targets.span()) total += t;
  stats.mean_q_target = total / static_cast<double>(std::max<std::int64_t>(targets.numel(), 1));
  tape.backward(loss);
  adam_step(critic_, tape.gradients(critic_), config_.adam);
  ++updates_;

  if (config_.algorithm == Algorithm::sac && updates_ % config_.actor_update_every == 0) {
    Tape actor_tape;
    double mean_log_prob = 0.0;
    Var l = actor_loss(actor_tape, actor_obs, policy_rng_, &mean_log_prob);
    actor_tape.backward(l);
    adam_step(actor_, actor_tape.gradients(actor_), config_.adam);
    stats.actor_loss = l.value().item();
    stats.actor_updated = true;
    if (config_.learn_temperature) {
      // d/d(log alpha) of -log_alpha * (log_pi + target_entropy), batch mean.
      const double target_entropy = -static_cast<double>(config_.action_dim);
      Gradients g;
      g.grads.push_back(Tensor(Shape{1}, static_cast<float>(-(mean_log_prob + target_entropy))));
      adam_step(log_temperature_, g, config_.temperature_adam);
    }
  }
  stats.temperature = temperature();
  if (updates_ % config_.target_update_every == 0) {
    update_target();
    stats.target_updated = true;
  }
  return stats;
}

UpdateStats Agent::update(const Batch& batch) {
  switch (config_.mode) {
    case UpdateMode::plain: return plain_update(batch);
    case UpdateMode::naive: return naive_aug_update(batch);
    case UpdateMode::svea: return svea_update(batch);
  }
  return svea_update(batch);
}

UpdateStats Agent::plain_update(const Batch& batch) {
  const Tensor obs = weak(batch.obs);
  const Tensor next = weak(batch.next_obs);
  const Tensor targets = compute_q_target(batch.rewards, batch.not_done, next);
  Tape tape;
  Var loss = td_loss(tape, obs, ActionBatch::of(batch), targets);
  return finish_critic_step(tape, loss, obs, targets);
}

UpdateStats Agent::naive_aug_update(const Batch& batch) {
  Tensor obs = weak(batch.obs);
  Tensor next = weak(batch.next_obs);
  if (config_.strong.kind != AugKind::none) {
    obs = augment_batch(obs, config_.strong, aug_rng_);
    next = augment_batch(next, config_.strong, aug_rng_);
  }
  const Tensor targets = compute_q_target(batch.rewards, batch.not_done, next);
  Tape tape;
  Var loss = td_loss(tape, obs, ActionBatch::of(batch), targets);
  return finish_critic_step(tape, loss, obs, targets);
}

UpdateStats Agent::svea_update(const Batch& batch) {
  const Tensor obs = weak(batch.obs);
  const Tensor next = weak(batch.next_obs);
  const Tensor targets = compute_q_target(batch.rewards, batch.not_done, next);
  const ActionBatch actions = ActionBatch::of(batch);
  const double a = config_.alpha, b = config_.beta;
  Tape tape;
  Var loss;
  if (config_.strong.kind == AugKind::none) {
    loss = ops::scale(td_loss(tape, obs, actions, targets), a + b);
  } else {
    const Tensor obs_aug = augment_batch(obs, config_.strong, aug_rng_);
    loss = a == b ? svea_loss_batched(tape, obs, obs_aug, actions, targets, a, b)
                  : svea_loss(tape, obs, obs_aug, actions, targets, a, b);
  }
  return finish_critic_step(tape, loss, obs, targets);
}

Action Agent::act_greedy(const Tensor& obs) const {
  const Tensor batch = obs.reshaped(Shape{1, obs.dim(0), obs.dim(1), obs.dim(2)});
  Tape tape;
  tape.set_grad_enabled(false);
  if (config_.algorithm == Algorithm::dqn) {
    const Tensor q = q_values(tape, critic_, batch).value();
    int best = 0;
    for (int j = 1; j < static_cast<int>(q.numel()); ++j)
      if (q[j] > q[best]) best = j;
    return Action::discrete(best);
  }
  Var features = encode(config_.encoder, tape, critic_, "encoder.", batch);
  Var log_std;
  const Tensor mu = actor_head(tape, features, &log_std).value();
  std::vector<double> values(static_cast<std::size_t>(mu.numel()));
  for (std::size_t j = 0; j < values.size(); ++j) values[j] = std::tanh(static_cast<double>(mu[static_cast<std::int64_t>(j)]));
  return Action::continuous(std::move(values));
}

Action Agent::act(const Tensor& obs, ActMode mode, double epsilon) {
  if (mode == ActMode::eval) return act_greedy(obs);
  if (config_.algorithm == Algorithm::dqn) {
    const double u = uniform(explore_rng_, 0.0, 1.0);
    if (u < epsilon) return Action::discrete(uniform_int(explore_rng_, 0, config_.action_dim - 1));
    return act_greedy(obs);
  }
  const Tensor batch = obs.reshaped(Shape{1, obs.dim(0), obs.dim(1), obs.dim(2)});
  Tape tape;
  tape.set_grad_enabled(false);
  Var features = encode(config_.encoder, tape, critic_, "encoder.", batch);
  Var log_std;
  const Tensor mu = actor_head(tape, features, &log_std).value();
  std::vector<double> values(static_cast<std::size_t>(mu.numel()));
  for (std::size_t j = 0; j < values.size(); ++j) {
    const auto k = static_cast<std::int64_t>(j);
    const double std_dev = std::exp(static_cast<double>(log_std.value()[k]));
    values[j] = std::tanh(static_cast<double>(mu[k]) + std_dev * normal(explore_rng_, 0.0, 1.0));
  }
  return Action::continuous(std::move(values));
}

}  // namespace svea
