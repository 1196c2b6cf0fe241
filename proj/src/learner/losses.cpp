#include <cmath>

#include "svea/agent.hpp"
#include "svea/errors.hpp"
#include "svea/networks.hpp"
#include "svea/ops.hpp"

namespace svea {
namespace {

Tensor duplicate_rows(const Tensor& t) { return concat_rows(t, t); }

}  // namespace

ActionBatch ActionBatch::duplicated() const {
  ActionBatch out;
  out.index = index;
  out.index.insert(out.index.end(), index.begin(), index.end());
  if (continuous.rank() > 0) out.continuous = duplicate_rows(continuous);
  return out;
}

Var Agent::q_values(Tape& tape, const ParamStore& params, const Tensor& obs) const {
  if (config_.algorithm != Algorithm::dqn) throw UsageError("q_values is defined for the discrete (dqn) critic");
  Var f = encode(config_.encoder, tape, params, "encoder.", obs);
  return mlp(tape, params, "q.", f, config_.head_layers);
}

std::vector<Var> Agent::q_predictions(Tape& tape, const ParamStore& params, const Tensor& obs,
                                      const ActionBatch& actions) const {
  if (config_.algorithm == Algorithm::dqn) {
    return {ops::gather_cols(q_values(tape, params, obs), std::span<const int>(actions.index))};
  }
  Var f = encode(config_.encoder, tape, params, "encoder.", obs);
  Var x = ops::concat_cols(f, tape.constant(actions.continuous));
  std::vector<Var> out;
  for (const char* head : {"q1.", "q2."})
    out.push_back(ops::reshape(mlp(tape, params, head, x, config_.head_layers), Shape{obs.dim(0)}));
  return out;
}

Var Agent::actor_head(Tape& tape, Var features, Var* log_std) const {
  const int a = config_.action_dim;
  Var out = mlp(tape, actor_, "actor.", features, config_.head_layers);
  Var mu = ops::slice_cols(out, 0, a);
  Var raw = ops::tanh(ops::slice_cols(out, a, 2 * a));
  const double lo = config_.log_std_min, hi = config_.log_std_max;
  *log_std = ops::add_scalar(ops::scale(ops::add_scalar(raw, 1.0), 0.5 * (hi - lo)), lo);
  return mu;
}

namespace {

struct PolicySample {
  Var action;
  Var log_prob;
};

// Squashed Gaussian sample a = tanh(mu + std * eps) and its log-density.
PolicySample squashed_sample(Tape& tape, Var mu, Var log_std, Rng& rng) {
  Tensor noise(mu.shape());
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (auto& v : noise.span()) v = dist(rng);
  Var u = ops::add(mu, ops::mul(ops::exp(log_std), tape.constant(std::move(noise))));
  Var a = ops::tanh(u);
  Var log_prob = ops::gaussian_logprob(u, mu, log_std);
  Var squash = ops::sum_last(ops::log(ops::add_scalar(ops::scale(ops::mul(a, a), -1.0), 1.0 + 1e-6)));
  return {a, ops::sub(log_prob, squash)};
}

}  // namespace

Tensor Agent::compute_q_target(const Tensor& rewards, const Tensor& not_done, const Tensor& next_obs) {
  return compute_q_target(target_, rewards, not_done, next_obs, policy_rng_);
}

Tensor Agent::compute_q_target(const ParamStore& target, const Tensor& rewards, const Tensor& not_done,
                               const Tensor& next_obs, Rng& policy_rng) const {
  const std::int64_t n = next_obs.dim(0);
  if (rewards.numel() != n || not_done.numel() != n)
    throw ConfigError("q target: " + std::to_string(n) + " observations but " + std::to_string(rewards.numel()) +
                      " rewards and " + std::to_string(not_done.numel()) + " done flags");
  Tape tape;
  tape.set_grad_enabled(false);
  Tensor bootstrap(Shape{n});
  if (config_.algorithm == Algorithm::dqn) {
    const Tensor q = q_values(tape, target, next_obs).value();
    const std::int64_t a = q.dim(1);
    std::vector<int> choice(static_cast<std::size_t>(n), 0);
    if (config_.double_q) {
      const Tensor online = q_values(tape, critic_, next_obs).value();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 1; j < a; ++j)
          if (online[i * a + j] > online[i * a + choice[static_cast<std::size_t>(i)]]) choice[static_cast<std::size_t>(i)] = static_cast<int>(j);
    } else {
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 1; j < a; ++j)
          if (q[i * a + j] > q[i * a + choice[static_cast<std::size_t>(i)]]) choice[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
    for (std::int64_t i = 0; i < n; ++i) bootstrap[i] = q[i * a + choice[static_cast<std::size_t>(i)]];
  } else {
    Var features = encode(config_.encoder, tape, critic_, "encoder.", next_obs);
    Var log_std;
    Var mu = actor_head(tape, features, &log_std);
    PolicySample next = squashed_sample(tape, mu, log_std, policy_rng);
    Var f_target = encode(config_.encoder, tape, target, "encoder.", next_obs);
    Var x = ops::concat_cols(f_target, next.action);
    Var q1 = mlp(tape, target, "q1.", x, config_.head_layers);
    Var q2 = mlp(tape, target, "q2.", x, config_.head_layers);
    const Tensor q = ops::minimum(q1, q2).value();
    const float temp = static_cast<float>(temperature());
    for (std::int64_t i = 0; i < n; ++i) bootstrap[i] = q[i] - temp * next.log_prob.value()[i];
  }
  Tensor out(Shape{n});
  const float gamma = static_cast<float>(config_.gamma);
  for (std::int64_t i = 0; i < n; ++i) out[i] = rewards[i] + gamma * not_done[i] * bootstrap[i];
  return out;
}

Var Agent::td_loss(Tape& tape, const Tensor& obs, const ActionBatch& actions, const Tensor& targets) const {
  Var target = tape.constant(targets);
  Var loss;
  for (Var q : q_predictions(tape, critic_, obs, actions)) {
    Var term = ops::mse(q, target);
    loss = loss.valid() ? ops::add(loss, term) : term;
  }
  return loss;
}

Var Agent::svea_loss(Tape& tape, const Tensor& obs, const Tensor& obs_aug, const ActionBatch& actions,
                     const Tensor& targets, double alpha, double beta) const {
  if (alpha < 0.0 || beta < 0.0) throw UsageError("svea_loss coefficients must be nonnegative");
  Var clean = td_loss(tape, obs, actions, targets);
  Var augmented = td_loss(tape, obs_aug, actions, targets);
  return ops::add(ops::scale(clean, alpha), ops::scale(augmented, beta));
}

Var Agent::svea_loss_batched(Tape& tape, const Tensor& obs, const Tensor& obs_aug, const ActionBatch& actions,
                             const Tensor& targets, double alpha, double beta) const {
  if (alpha != beta)
    throw UsageError("svea_loss_batched needs alpha == beta (got " + std::to_string(alpha) + ", " +
                     std::to_string(beta) + "); use svea_loss for unequal coefficients");
  Var mixed = td_loss(tape, concat_rows(obs, obs_aug), actions.duplicated(), duplicate_rows(targets));
  return ops::scale(mixed, alpha + beta);
}

Var Agent::actor_loss(Tape& tape, const Tensor& obs, Rng& noise_rng, double* mean_log_prob) const {
  if (config_.algorithm != Algorithm::sac) throw UsageError("actor_loss is defined for sac only");
  Var features = tape.stop_grad(encode(config_.encoder, tape, critic_, "encoder.", obs));
  Var log_std;
  Var mu = actor_head(tape, features, &log_std);
  PolicySample pi = squashed_sample(tape, mu, log_std, noise_rng);
  Var x = ops::concat_cols(features, pi.action);
  Var q = ops::minimum(mlp(tape, critic_, "q1.", x, config_.head_layers), mlp(tape, critic_, "q2.", x, config_.head_layers));
  q = ops::reshape(q, Shape{obs.dim(0)});
  if (mean_log_prob) {
    double total = 0.0;
    for (float v : pi.log_prob.value().span()) total += v;
    *mean_log_prob = total / static_cast<double>(obs.dim(0));
  }
  return ops::mean(ops::sub(ops::scale(pi.log_prob, temperature()), q));
}

}  // namespace svea
