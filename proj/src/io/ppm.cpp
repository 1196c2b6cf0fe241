#include "svea/ppm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "svea/errors.hpp"

namespace svea {

std::uint8_t to_byte(float v) {
  const float scaled = std::floor(v * 256.0f);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

Image to_image(const Tensor& chw, int channel) {
  if (chw.rank() != 3 || channel < 0 || channel + 3 > chw.dim(0))
    throw ConfigError("to_image needs (C, H, W) with 3 channels at " + std::to_string(channel) + ", got " +
                      shape_str(chw.shape()));
  const int h = static_cast<int>(chw.dim(1)), w = static_cast<int>(chw.dim(2));
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y)[c] = to_byte(chw[(channel + c) * plane + y * w + x]);
  return img;
}

void blit(Image& dst, const Image& tile, int x, int y) {
  for (int ty = 0; ty < tile.height; ++ty) {
    if (y + ty < 0 || y + ty >= dst.height) continue;
    for (int tx = 0; tx < tile.width; ++tx) {
      if (x + tx < 0 || x + tx >= dst.width) continue;
      std::copy_n(tile.at(tx, ty), 3, dst.at(x + tx, y + ty));
    }
  }
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw IoError(path.string() + " is not an 8-bit P6 pixmap");
  in.get();
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!in) throw IoError(path.string() + " is truncated");
  return img;
}

}  // namespace svea
