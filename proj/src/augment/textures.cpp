#include "svea/textures.hpp"

#include <array>
#include <cmath>

#include "svea/rng.hpp"

namespace svea {
namespace {

using Color = std::array<float, 3>;

Color random_color(Rng& rng) {
  return {static_cast<float>(uniform(rng, 0.0, 1.0)), static_cast<float>(uniform(rng, 0.0, 1.0)),
          static_cast<float>(uniform(rng, 0.0, 1.0))};
}

float smoothstep(float t) { return t * t * (3.0f - 2.0f * t); }

// Lattice hash in [0, 1), stable across platforms.
float lattice(std::uint64_t seed, int octave, int gx, int gy) {
  std::uint64_t h = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(octave + 1));
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(gx)) * 0xbf58476d1ce4e5b9ULL;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(gy)) * 0x94d049bb133111ebULL;
  h ^= h >> 31;
  h *= 0xd6e8feb86659fd93ULL;
  h ^= h >> 32;
  return static_cast<float>(h >> 40) / static_cast<float>(1ULL << 24);
}

float value_noise(std::uint64_t seed, float x, float y, float cell) {
  float total = 0.0f, amp = 0.6f, norm = 0.0f;
  for (int octave = 0; octave < 3; ++octave) {
    const float fx = x / cell, fy = y / cell;
    const int gx = static_cast<int>(std::floor(fx)), gy = static_cast<int>(std::floor(fy));
    const float tx = smoothstep(fx - static_cast<float>(gx)), ty = smoothstep(fy - static_cast<float>(gy));
    const float a = lattice(seed, octave, gx, gy), b = lattice(seed, octave, gx + 1, gy);
    const float c = lattice(seed, octave, gx, gy + 1), d = lattice(seed, octave, gx + 1, gy + 1);
    total += amp * ((a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty);
    norm += amp;
    amp *= 0.5f;
    cell *= 0.5f;
  }
  return total / norm;
}

}  // namespace

Tensor make_texture(int id, std::uint64_t seed, int h, int w, int offset_x, int offset_y) {
  Rng rng = make_stream(seed, "texture");
  const Color c0 = random_color(rng), c1 = random_color(rng);
  const int family = ((id % kTextureFamilies) + kTextureFamilies) % kTextureFamilies;
  const double period = uniform(rng, 6.0, 18.0);
  const double angle = uniform(rng, 0.0, 3.14159265358979);
  const std::uint64_t noise_seed = rng();
  const float ca = static_cast<float>(std::cos(angle)), sa = static_cast<float>(std::sin(angle));

  Tensor out(Shape{3, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float px = static_cast<float>(x + offset_x), py = static_cast<float>(y + offset_y);
      float t = 0.0f;
      if (family == 0) {
        t = value_noise(noise_seed, px, py, static_cast<float>(period));
      } else if (family == 1) {
        const float u = (px * ca + py * sa) / static_cast<float>(period);
        t = 0.5f + 0.5f * std::sin(6.2831853f * u);
      } else {
        const int cx = static_cast<int>(std::floor(px / static_cast<float>(period)));
        const int cy = static_cast<int>(std::floor(py / static_cast<float>(period)));
        t = ((cx + cy) & 1) ? 1.0f : 0.0f;
      }
      for (int c = 0; c < 3; ++c) {
        const float v = c0[static_cast<std::size_t>(c)] * (1.0f - t) + c1[static_cast<std::size_t>(c)] * t;
        out[c * plane + static_cast<std::int64_t>(y) * w + x] = std::min(v, 0.99609375f);
      }
    }
  }
  return out;
}

}  // namespace svea
