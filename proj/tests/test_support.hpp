#pragma once

#include "svea/agent.hpp"
#include "svea/env.hpp"
#include "svea/replay_buffer.hpp"

namespace svea::testing {

/// Small conv encoder on 16x16 frames so learner tests stay fast.
inline EncoderConfig tiny_cnn(int size = 16) {
  EncoderConfig c = EncoderConfig::desk_cnn();
  c.height = c.width = size;
  c.strides = {2, 1};
  c.feature_dim = 16;
  return c;
}

inline LearnerConfig tiny_learner(Algorithm algorithm = Algorithm::dqn, UpdateMode mode = UpdateMode::svea) {
  LearnerConfig cfg;
  cfg.algorithm = algorithm;
  cfg.mode = mode;
  cfg.encoder = tiny_cnn();
  cfg.hidden = 32;
  cfg.weak_shift_radius = 2;
  cfg.strong = AugmentationSpec::of(AugKind::conv);
  if (algorithm == Algorithm::sac) {
    cfg.action_space = ActionSpace::continuous;
    cfg.action_dim = 2;
  } else {
    cfg.action_dim = 3;
  }
  return cfg;
}

/// Batch of random pixels, rewards and actions.
inline Batch random_batch(const LearnerConfig& cfg, int n, Rng& rng) {
  const auto& e = cfg.encoder;
  Batch b;
  b.obs = Tensor(Shape{n, e.in_channels, e.height, e.width});
  b.next_obs = Tensor(b.obs.shape());
  for (auto& v : b.obs.span()) v = static_cast<float>(uniform(rng, 0.0, 0.999));
  for (auto& v : b.next_obs.span()) v = static_cast<float>(uniform(rng, 0.0, 0.999));
  b.rewards = Tensor(Shape{n});
  b.not_done = Tensor(Shape{n}, 1.0f);
  b.continuous_actions = Tensor(Shape{n, cfg.action_dim});
  for (auto& v : b.rewards.span()) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  for (auto& v : b.continuous_actions.span()) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  for (int i = 0; i < n; ++i) b.actions.push_back(uniform_int(rng, 0, cfg.action_dim - 1));
  return b;
}

/// Sets the last layer of a DQN head to zero weights and the given biases, so
/// Q(s, .) equals `q` for every observation.
inline void set_constant_q(ParamStore& store, const LearnerConfig& cfg, const std::vector<float>& q) {
  const std::string last = "q.fc" + std::to_string(cfg.head_layers - 1);
  store.value(last + ".w").fill(0.0f);
  store.value(last + ".b") = Tensor(Shape{static_cast<std::int64_t>(q.size())}, std::vector<float>(q));
}

}  // namespace svea::testing
