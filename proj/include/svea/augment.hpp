#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svea/rng.hpp"
#include "svea/tensor.hpp"

namespace svea {

enum class AugKind { none, shift, conv, overlay, cutout, blur, affine_jitter, rotation };

std::string to_string(AugKind kind);
/// Parses "none", "shift", "conv", "overlay", "cutout", "blur", "affine_jitter"
/// (or "affine-jitter"), "rotation". Throws ConfigError otherwise.
AugKind parse_aug_kind(const std::string& name);
/// Every kind, `none` first.
const std::vector<AugKind>& all_aug_kinds();

/// Largest representable value strictly below 1; augmented pixels are clipped to it.
inline constexpr float kPixelMax = 0.99999994f;

/// A transformation family tau together with the ranges its parameters are drawn from.
struct AugmentationSpec {
  AugKind kind = AugKind::none;
  int shift_radius = 4;                  // pixels, [0, 32]
  double overlay_alpha = 0.5;            // blend weight of the distractor, [0, 1]
  double cutout_max_fraction = 0.25;     // max rectangle area / frame area, [0, 0.25]
  double blur_sigma_min = 0.5;           // [0, 8]
  double blur_sigma_max = 1.5;           // [blur_sigma_min, 8]
  double affine_translate = 0.1;         // fraction of the frame size, [0, 0.5]
  double affine_scale_min = 0.9;         // (0, affine_scale_max]
  double affine_scale_max = 1.1;         // [affine_scale_min, 2]
  double affine_shear = 0.15;            // radians, [0, 0.5]
  std::vector<double> rotation_angles{0.0, 90.0, 180.0, 270.0};  // degrees

  static AugmentationSpec of(AugKind kind) {
    AugmentationSpec s;
    s.kind = kind;
    return s;
  }

  /// Throws ConfigError naming the offending field when a range is violated.
  void validate() const;
};

/// Sampled nu: everything apply() needs, so (obs, params) fixes the output.
struct AugParams {
  AugKind kind = AugKind::none;
  std::uint64_t seed = 0;  // first draw from the generator; also seeds the overlay texture
  int dx = 0, dy = 0;
  std::array<float, 81> kernel{};  // conv: [out][in][ky][kx]
  int texture_id = 0;
  double alpha = 0.0;
  // cutout rectangle as fractions of the frame; pixels are floor(fraction * extent)
  double rect_x = 0.0, rect_y = 0.0, rect_w = 0.0, rect_h = 0.0;
  double sigma = 0.0;
  // affine: output pixel p samples input m * (p - c) + c - t, m = [a b; c d],
  // c the frame center and t = (tx * W, ty * H)
  std::array<double, 4> matrix{1.0, 0.0, 0.0, 1.0};
  double tx = 0.0, ty = 0.0;
  double angle = 0.0;  // degrees, counter-clockwise

  static AugParams shift(int dx, int dy);
  static AugParams overlay(double alpha, int texture_id, std::uint64_t seed);
  static AugParams cutout(double x, double y, double w, double h);
  static AugParams blur(double sigma);
  static AugParams affine(std::array<double, 4> matrix, double tx, double ty);
  static AugParams rotation(double angle);
};

/// Draws nu ~ V for a spec. The generator advances deterministically.
AugParams sample_params(const AugmentationSpec& spec, Rng& rng);

/// Applies tau(obs, nu) to a stacked observation (3k, H, W) or a batch
/// (N, 3k, H, W), with the same nu for every frame (and every batch row).
/// Output values are clipped to [0, 1).
Tensor apply(const Tensor& obs, const AugParams& params);

/// Augments each row of a batch (N, 3k, H, W) with its own freshly sampled nu.
Tensor augment_batch(const Tensor& batch, const AugmentationSpec& spec, Rng& rng);

/// Writes a grid of `n` augmented samples of the newest frame of `obs` as a
/// binary PPM. Throws IoError with the path on failure.
void render_sample_sheet(const AugmentationSpec& spec, const Tensor& obs, int n, Rng& rng,
                         const std::filesystem::path& path);

}  // namespace svea
