#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "svea/tensor.hpp"

namespace svea {

/// 8-bit RGB image, interleaved rows.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}
  std::uint8_t* at(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

/// floor(v * 256) clamped to [0, 255].
std::uint8_t to_byte(float v);

/// Channels [channel, channel + 3) of a (C, H, W) tensor as an image.
Image to_image(const Tensor& chw, int channel = 0);

/// Copies `tile` into `dst` with its top-left corner at (x, y).
void blit(Image& dst, const Image& tile, int x, int y);

void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

}  // namespace svea
