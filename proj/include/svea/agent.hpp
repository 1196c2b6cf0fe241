#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svea/adam.hpp"
#include "svea/augment.hpp"
#include "svea/encoders.hpp"
#include "svea/env.hpp"
#include "svea/param_store.hpp"
#include "svea/replay_buffer.hpp"
#include "svea/rng.hpp"
#include "svea/tape.hpp"

namespace svea {

enum class Algorithm { dqn, sac };
/// plain: weak shift only. naive: strong augmentation of both s and s' with
/// independent draws. svea: strong augmentation of s only, targets from s'.
enum class UpdateMode { plain, naive, svea };
enum class ActMode { train, eval };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
std::string to_string(UpdateMode m);
UpdateMode parse_update_mode(const std::string& name);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::dqn;
  UpdateMode mode = UpdateMode::svea;
  EncoderConfig encoder;
  ActionSpace action_space = ActionSpace::discrete;
  int action_dim = 3;
  int hidden = 256;
  int head_layers = 3;

  double gamma = 0.99;
  AdamConfig adam;
  double alpha = 0.5;  // weight of the unaugmented stream
  double beta = 0.5;   // weight of the augmented stream
  double tau_encoder = 0.05;
  double tau_critic = 0.01;
  int target_update_every = 2;

  bool weak_shift = true;
  int weak_shift_radius = 4;
  AugmentationSpec strong;

  bool double_q = false;

  // SAC
  double init_temperature = 0.1;
  bool learn_temperature = false;
  AdamConfig temperature_adam{1e-4, 0.5, 0.999, 1e-8};
  double log_std_min = -10.0;
  double log_std_max = 2.0;
  int actor_update_every = 2;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

/// Discrete indices or continuous rows for a batch of actions.
struct ActionBatch {
  std::vector<int> index;
  Tensor continuous;  // (N, A)

  static ActionBatch of(const Batch& b) { return ActionBatch{b.actions, b.continuous_actions}; }
  /// The batch stacked on top of itself (2N rows).
  ActionBatch duplicated() const;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double temperature = 0.0;
  double mean_q_target = 0.0;
  bool actor_updated = false;
  bool target_updated = false;
};

/// Exponential moving average psi <- (1 - zeta) psi + zeta theta, with
/// `zeta_encoder` for entries under "encoder." and `zeta_other` elsewhere.
void ema_update(ParamStore& target, const ParamStore& online, double zeta_encoder, double zeta_other);

/// Off-policy learner: encoder + critic (theta), its EMA target (psi) and,
/// for SAC, an actor (theta_pi) that reads detached encoder features.
class Agent {
 public:
  Agent(LearnerConfig config, std::uint64_t seed);

  const LearnerConfig& config() const { return config_; }
  ParamStore& critic() { return critic_; }
  const ParamStore& critic() const { return critic_; }
  ParamStore& target() { return target_; }
  const ParamStore& target() const { return target_; }
  ParamStore& actor() { return actor_; }
  const ParamStore& actor() const { return actor_; }
  ParamStore& log_temperature() { return log_temperature_; }
  const ParamStore& log_temperature() const { return log_temperature_; }
  double temperature() const;
  std::int64_t updates() const { return updates_; }
  Rng& aug_rng() { return aug_rng_; }

  /// Q-values (N, A) of a discrete critic on observations.
  Var q_values(Tape& tape, const ParamStore& params, const Tensor& obs) const;
  /// Q(s, a) of every critic (one for DQN, two for SAC), each (N).
  std::vector<Var> q_predictions(Tape& tape, const ParamStore& params, const Tensor& obs,
                                 const ActionBatch& actions) const;

  /// r + gamma * not_done * bootstrap, computed from `next_obs` exactly as
  /// given (callers decide whether it is augmented). Draws only from the
  /// policy generator (SAC next-action samples), never from augmentation.
  Tensor compute_q_target(const Tensor& rewards, const Tensor& not_done, const Tensor& next_obs);
  /// Same with the target parameters given explicitly.
  Tensor compute_q_target(const ParamStore& target, const Tensor& rewards, const Tensor& not_done,
                          const Tensor& next_obs, Rng& policy_rng) const;

  /// Mean over the batch of 0.5 * (target - Q(s, a))^2, summed over critics.
  Var td_loss(Tape& tape, const Tensor& obs, const ActionBatch& actions, const Tensor& targets) const;
  /// alpha * L(obs) + beta * L(obs_aug), the same targets in both terms.
  Var svea_loss(Tape& tape, const Tensor& obs, const Tensor& obs_aug, const ActionBatch& actions,
                const Tensor& targets, double alpha, double beta) const;
  /// (alpha + beta) * L over the mixed batch [obs, obs_aug] with duplicated
  /// actions and targets. Throws UsageError unless alpha == beta.
  Var svea_loss_batched(Tape& tape, const Tensor& obs, const Tensor& obs_aug, const ActionBatch& actions,
                        const Tensor& targets, double alpha, double beta) const;

  /// Update with the configured mode.
  UpdateStats update(const Batch& batch);
  UpdateStats plain_update(const Batch& batch);
  UpdateStats naive_aug_update(const Batch& batch);
  UpdateStats svea_update(const Batch& batch);

  /// Action for one unaugmented observation (3k, H, W). DQN: epsilon-greedy
  /// in train mode, greedy in eval. SAC: squashed Gaussian sample in train,
  /// its mean in eval.
  Action act(const Tensor& obs, ActMode mode, double epsilon = 0.0);
  /// Greedy / mean action without touching any generator.
  Action act_greedy(const Tensor& obs) const;

  /// SAC actor loss on detached features of `obs`; exposed for tests.
  Var actor_loss(Tape& tape, const Tensor& obs, Rng& noise_rng, double* mean_log_prob = nullptr) const;

  void update_target();

 private:
  Tensor weak(const Tensor& obs);
  UpdateStats finish_critic_step(Tape& tape, Var loss, const Tensor& actor_obs, const Tensor& targets);
  Var actor_head(Tape& tape, Var features, Var* log_std) const;

  LearnerConfig config_;
  ParamStore critic_;
  ParamStore target_;
  ParamStore actor_;
  ParamStore log_temperature_;
  Rng aug_rng_;
  Rng explore_rng_;
  Rng policy_rng_;
  std::int64_t updates_ = 0;
};

}  // namespace svea
