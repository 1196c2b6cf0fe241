#pragma once

#include <cstdint>

#include "svea/tensor.hpp"

namespace svea {

/// Number of procedural texture families in the distractor bank
/// (value noise, stripes, checkers).
inline constexpr int kTextureFamilies = 3;

/// Procedural RGB texture of shape (3, h, w), values in [0, 1). `id` selects
/// the family (id % kTextureFamilies); `seed` fixes colors, frequency and phase.
/// `offset_x`/`offset_y` scroll the pattern by whole pixels.
Tensor make_texture(int id, std::uint64_t seed, int h, int w, int offset_x = 0, int offset_y = 0);

}  // namespace svea
