#pragma once

#include <cstdint>
#include <vector>

#include "svea/env.hpp"
#include "svea/rng.hpp"
#include "svea/tensor.hpp"

namespace svea {

/// Minibatch of transitions as float tensors.
struct Batch {
  Tensor obs;                  // (N, 3k, H, W)
  Tensor next_obs;             // (N, 3k, H, W)
  std::vector<int> actions;    // discrete indices
  Tensor continuous_actions;   // (N, A), continuous action spaces only
  Tensor rewards;              // (N)
  Tensor not_done;             // (N), 0 where the transition ended the episode

  std::int64_t size() const { return obs.rank() ? obs.dim(0) : 0; }
};

/// Ring buffer of transitions stored as bytes. Each slot keeps the stacked
/// state s and only the newest frame of s', since the rest of s' is s shifted
/// by one slot. Sampling is uniform with replacement from its own generator.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int frame_stack, int height, int width, int action_dim, std::uint64_t seed);

  /// `obs` and `next_obs` are stacked bytes (3k, H, W) with slot 0 newest.
  void add(const std::vector<std::uint8_t>& obs, const Action& action, double reward,
           const std::vector<std::uint8_t>& next_obs, bool done);

  Batch sample(int n);
  /// Transitions at the given slots, in order.
  Batch gather(const std::vector<int>& slots) const;

  int size() const { return size_; }
  int capacity() const { return capacity_; }

 private:
  int capacity_;
  int frame_stack_;
  int height_;
  int width_;
  int action_dim_;
  std::int64_t frame_bytes_;
  int size_ = 0;
  int next_ = 0;
  std::vector<std::uint8_t> obs_;
  std::vector<std::uint8_t> newest_;
  std::vector<int> actions_;
  std::vector<float> continuous_;
  std::vector<float> rewards_;
  std::vector<float> not_done_;
  Rng rng_;
};

}  // namespace svea
