#include "svea/replay_buffer.hpp"

#include <algorithm>

#include "svea/errors.hpp"

namespace svea {

ReplayBuffer::ReplayBuffer(int capacity, int frame_stack, int height, int width, int action_dim, std::uint64_t seed)
    : capacity_(capacity),
      frame_stack_(frame_stack),
      height_(height),
      width_(width),
      action_dim_(action_dim),
      frame_bytes_(static_cast<std::int64_t>(3) * height * width),
      rng_(make_stream(seed, "batch")) {
  if (capacity < 1) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::add(const std::vector<std::uint8_t>& obs, const Action& action, double reward,
                       const std::vector<std::uint8_t>& next_obs, bool done) {
  const std::int64_t stacked = frame_bytes_ * frame_stack_;
  if (static_cast<std::int64_t>(obs.size()) != stacked || static_cast<std::int64_t>(next_obs.size()) != stacked)
    throw UsageError("replay add: observation has " + std::to_string(obs.size()) + " bytes, expected " +
                     std::to_string(stacked));
  const auto slot = static_cast<std::size_t>(next_);
  if (size_ < capacity_) {
    obs_.resize(obs_.size() + static_cast<std::size_t>(stacked));
    newest_.resize(newest_.size() + static_cast<std::size_t>(frame_bytes_));
    actions_.push_back(0);
    continuous_.resize(continuous_.size() + static_cast<std::size_t>(action_dim_));
    rewards_.push_back(0.0f);
    not_done_.push_back(0.0f);
    ++size_;
  }
  std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(slot * stacked));
  std::copy_n(next_obs.begin(), frame_bytes_, newest_.begin() + static_cast<std::ptrdiff_t>(slot * frame_bytes_));
  actions_[slot] = action.index;
  for (int j = 0; j < action_dim_; ++j)
    continuous_[slot * static_cast<std::size_t>(action_dim_) + static_cast<std::size_t>(j)] =
        action.values.empty() ? 0.0f : static_cast<float>(action.values[static_cast<std::size_t>(j)]);
  rewards_[slot] = static_cast<float>(reward);
  not_done_[slot] = done ? 0.0f : 1.0f;
  next_ = (next_ + 1) % capacity_;
}

Batch ReplayBuffer::sample(int n) {
  if (size_ == 0) throw UsageError("sampling from an empty replay buffer");
  std::vector<int> slots(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> dist(0, size_ - 1);
  for (auto& s : slots) s = dist(rng_);
  return gather(slots);
}

Batch ReplayBuffer::gather(const std::vector<int>& slots) const {
  const auto n = static_cast<std::int64_t>(slots.size());
  const std::int64_t c = 3 * frame_stack_, stacked = frame_bytes_ * frame_stack_;
  Batch b;
  b.obs = Tensor(Shape{n, c, height_, width_});
  b.next_obs = Tensor(Shape{n, c, height_, width_});
  b.actions.resize(static_cast<std::size_t>(n));
  b.continuous_actions = Tensor(Shape{n, action_dim_});
  b.rewards = Tensor(Shape{n});
  b.not_done = Tensor(Shape{n});
  constexpr float inv = 1.0f / 256.0f;
  for (std::int64_t i = 0; i < n; ++i) {
    const int slot = slots[static_cast<std::size_t>(i)];
    if (slot < 0 || slot >= size_) throw UsageError("replay slot " + std::to_string(slot) + " out of range");
    const std::uint8_t* s = obs_.data() + static_cast<std::int64_t>(slot) * stacked;
    const std::uint8_t* f = newest_.data() + static_cast<std::int64_t>(slot) * frame_bytes_;
    float* o = b.obs.data() + i * stacked;
    float* no = b.next_obs.data() + i * stacked;
    for (std::int64_t k = 0; k < stacked; ++k) o[k] = s[k] * inv;
    for (std::int64_t k = 0; k < frame_bytes_; ++k) no[k] = f[k] * inv;
    for (std::int64_t k = 0; k < stacked - frame_bytes_; ++k) no[frame_bytes_ + k] = s[k] * inv;
    b.actions[static_cast<std::size_t>(i)] = actions_[static_cast<std::size_t>(slot)];
    for (int j = 0; j < action_dim_; ++j)
      b.continuous_actions[i * action_dim_ + j] =
          continuous_[static_cast<std::size_t>(slot) * static_cast<std::size_t>(action_dim_) + static_cast<std::size_t>(j)];
    b.rewards[i] = rewards_[static_cast<std::size_t>(slot)];
    b.not_done[i] = not_done_[static_cast<std::size_t>(slot)];
  }
  return b;
}

}  // namespace svea
