#include "svea/augment.hpp"

#include <algorithm>
#include <cmath>

#include "svea/errors.hpp"
#include "svea/ppm.hpp"
#include "svea/textures.hpp"

namespace svea {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Plane {
  int h, w;
  std::int64_t size() const { return static_cast<std::int64_t>(h) * w; }
};

float clip(float v) { return std::clamp(v, 0.0f, kPixelMax); }

void check_range(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("augmentation spec field '" + field + "' " + what);
}

// Bilinear read with zero fill outside the frame.
float bilinear(const float* src, Plane p, double x, double y) {
  const double fx0 = std::floor(x), fy0 = std::floor(y);
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  const double ax = x - fx0, ay = y - fy0;
  auto at = [&](int xx, int yy) -> double {
    if (xx < 0 || yy < 0 || xx >= p.w || yy >= p.h) return 0.0;
    return src[static_cast<std::int64_t>(yy) * p.w + xx];
  };
  if (ax == 0.0 && ay == 0.0) return static_cast<float>(at(x0, y0));
  const double top = at(x0, y0) * (1.0 - ax) + at(x0 + 1, y0) * ax;
  const double bottom = at(x0, y0 + 1) * (1.0 - ax) + at(x0 + 1, y0 + 1) * ax;
  return static_cast<float>(top * (1.0 - ay) + bottom * ay);
}

void warp_plane(const float* src, float* dst, Plane p, const std::array<double, 4>& m, double tx, double ty) {
  const double cx = (p.w - 1) / 2.0, cy = (p.h - 1) / 2.0;
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      const double u = x - cx, v = y - cy;
      const double sx = m[0] * u + m[1] * v + cx - tx;
      const double sy = m[2] * u + m[3] * v + cy - ty;
      dst[static_cast<std::int64_t>(y) * p.w + x] = clip(bilinear(src, p, sx, sy));
    }
}

void shift_plane(const float* src, float* dst, Plane p, int dx, int dy) {
  for (int y = 0; y < p.h; ++y) {
    const int sy = std::clamp(y - dy, 0, p.h - 1);
    for (int x = 0; x < p.w; ++x) {
      const int sx = std::clamp(x - dx, 0, p.w - 1);
      dst[static_cast<std::int64_t>(y) * p.w + x] = src[static_cast<std::int64_t>(sy) * p.w + sx];
    }
  }
}

void rotate_exact(const float* src, float* dst, Plane p, int quarter_turns) {
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      int sx = x, sy = y;
      switch (quarter_turns) {
        case 1: sx = p.w - 1 - y, sy = x; break;
        case 2: sx = p.w - 1 - x, sy = p.h - 1 - y; break;
        case 3: sx = y, sy = p.h - 1 - x; break;
        default: break;
      }
      dst[static_cast<std::int64_t>(y) * p.w + x] = src[static_cast<std::int64_t>(sy) * p.w + sx];
    }
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = sigma > 0.0 ? std::exp(-0.5 * k * k / (sigma * sigma)) : (k == 0 ? 1.0 : 0.0);
    w[static_cast<std::size_t>(k + radius)] = v;
    total += v;
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(w[i] / total);
  return out;
}

void blur_plane(const float* src, float* dst, Plane p, const std::vector<float>& kernel, std::vector<float>& tmp) {
  const int radius = static_cast<int>(kernel.size() / 2);
  tmp.resize(static_cast<std::size_t>(p.size()));
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               src[static_cast<std::int64_t>(y) * p.w + std::clamp(x + k, 0, p.w - 1)];
      tmp[static_cast<std::size_t>(y * p.w + x)] = acc;
    }
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               tmp[static_cast<std::size_t>(std::clamp(y + k, 0, p.h - 1) * p.w + x)];
      dst[static_cast<std::int64_t>(y) * p.w + x] = clip(acc);
    }
}

// Applies nu to one RGB frame (3 consecutive planes).
class FrameOp {
 public:
  FrameOp(const AugParams& params, Plane plane) : p_(params), plane_(plane) {
    if (p_.kind == AugKind::overlay && p_.alpha != 0.0)
      texture_ = make_texture(p_.texture_id, p_.seed, plane.h, plane.w);
    if (p_.kind == AugKind::blur) kernel_ = gaussian_kernel(p_.sigma);
    if (p_.kind == AugKind::rotation) {
      const double turns = p_.angle / 90.0;
      if (std::abs(turns - std::round(turns)) < 1e-9) {
        quarter_turns_ = static_cast<int>(((static_cast<long>(std::llround(turns)) % 4) + 4) % 4);
        if (quarter_turns_ % 2 == 1 && plane.h != plane.w)
          throw ConfigError("quarter-turn rotation needs a square frame, got " + std::to_string(plane.h) + "x" +
                            std::to_string(plane.w));
      }
    }
  }

  void operator()(const float* src, float* dst) {
    const std::int64_t n = plane_.size();
    switch (p_.kind) {
      case AugKind::none:
        std::copy_n(src, 3 * n, dst);
        break;
      case AugKind::shift:
        for (int c = 0; c < 3; ++c) shift_plane(src + c * n, dst + c * n, plane_, p_.dx, p_.dy);
        break;
      case AugKind::conv:
        conv(src, dst);
        break;
      case AugKind::overlay: {
        const float a = static_cast<float>(p_.alpha);
        if (a == 0.0f) {
          std::copy_n(src, 3 * n, dst);
          break;
        }
        for (std::int64_t i = 0; i < 3 * n; ++i) dst[i] = clip((1.0f - a) * src[i] + a * texture_[i]);
        break;
      }
      case AugKind::cutout: {
        std::copy_n(src, 3 * n, dst);
        const int x0 = static_cast<int>(std::floor(p_.rect_x * plane_.w));
        const int y0 = static_cast<int>(std::floor(p_.rect_y * plane_.h));
        const int x1 = std::min(plane_.w, x0 + static_cast<int>(std::floor(p_.rect_w * plane_.w)));
        const int y1 = std::min(plane_.h, y0 + static_cast<int>(std::floor(p_.rect_h * plane_.h)));
        for (int c = 0; c < 3; ++c)
          for (int y = std::max(0, y0); y < y1; ++y)
            for (int x = std::max(0, x0); x < x1; ++x) dst[c * n + static_cast<std::int64_t>(y) * plane_.w + x] = 0.0f;
        break;
      }
      case AugKind::blur:
        for (int c = 0; c < 3; ++c) blur_plane(src + c * n, dst + c * n, plane_, kernel_, tmp_);
        break;
      case AugKind::affine_jitter:
        for (int c = 0; c < 3; ++c)
          warp_plane(src + c * n, dst + c * n, plane_, p_.matrix, p_.tx * plane_.w, p_.ty * plane_.h);
        break;
      case AugKind::rotation:
        if (quarter_turns_ >= 0) {
          for (int c = 0; c < 3; ++c) rotate_exact(src + c * n, dst + c * n, plane_, quarter_turns_);
        } else {
          const double r = p_.angle * kPi / 180.0;
          const std::array<double, 4> m{std::cos(r), -std::sin(r), std::sin(r), std::cos(r)};
          for (int c = 0; c < 3; ++c) warp_plane(src + c * n, dst + c * n, plane_, m, 0.0, 0.0);
        }
        break;
    }
  }

 private:
  void conv(const float* src, float* dst) const {
    const int h = plane_.h, w = plane_.w;
    const std::int64_t n = plane_.size();
    for (int o = 0; o < 3; ++o)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          float acc = 0.0f;
          for (int i = 0; i < 3; ++i)
            for (int ky = 0; ky < 3; ++ky) {
              const int sy = y + ky - 1;
              if (sy < 0 || sy >= h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int sx = x + kx - 1;
                if (sx < 0 || sx >= w) continue;
                acc += p_.kernel[static_cast<std::size_t>(((o * 3 + i) * 3 + ky) * 3 + kx)] *
                       src[i * n + static_cast<std::int64_t>(sy) * w + sx];
              }
            }
          dst[o * n + static_cast<std::int64_t>(y) * w + x] = clip(1.0f / (1.0f + std::exp(-acc)));
        }
  }

  const AugParams& p_;
  Plane plane_;
  Tensor texture_;
  std::vector<float> kernel_;
  std::vector<float> tmp_;
  int quarter_turns_ = -1;
};

}  // namespace

std::string to_string(AugKind kind) {
  switch (kind) {
    case AugKind::none: return "none";
    case AugKind::shift: return "shift";
    case AugKind::conv: return "conv";
    case AugKind::overlay: return "overlay";
    case AugKind::cutout: return "cutout";
    case AugKind::blur: return "blur";
    case AugKind::affine_jitter: return "affine_jitter";
    case AugKind::rotation: return "rotation";
  }
  return "none";
}

AugKind parse_aug_kind(const std::string& name) {
  for (AugKind k : all_aug_kinds())
    if (to_string(k) == name) return k;
  if (name == "affine-jitter") return AugKind::affine_jitter;
  throw ConfigError("unknown augmentation '" + name +
                    "' (expected none, shift, conv, overlay, cutout, blur, affine_jitter, rotation)");
}

const std::vector<AugKind>& all_aug_kinds() {
  static const std::vector<AugKind> kinds{AugKind::none,  AugKind::shift, AugKind::conv,          AugKind::overlay,
                                          AugKind::cutout, AugKind::blur, AugKind::affine_jitter, AugKind::rotation};
  return kinds;
}

void AugmentationSpec::validate() const {
  check_range(shift_radius >= 0 && shift_radius <= 32, "shift_radius", "must be in [0, 32]");
  check_range(overlay_alpha >= 0.0 && overlay_alpha <= 1.0, "overlay_alpha", "must be in [0, 1]");
  check_range(cutout_max_fraction >= 0.0 && cutout_max_fraction <= 0.25, "cutout_max_fraction",
              "must be in [0, 0.25]");
  check_range(blur_sigma_min >= 0.0 && blur_sigma_min <= blur_sigma_max && blur_sigma_max <= 8.0, "blur_sigma",
              "range must satisfy 0 <= min <= max <= 8");
  check_range(affine_translate >= 0.0 && affine_translate <= 0.5, "affine_translate", "must be in [0, 0.5]");
  check_range(affine_scale_min > 0.0 && affine_scale_min <= affine_scale_max && affine_scale_max <= 2.0,
              "affine_scale", "range must satisfy 0 < min <= max <= 2");
  check_range(affine_shear >= 0.0 && affine_shear <= 0.5, "affine_shear", "must be in [0, 0.5]");
  check_range(!rotation_angles.empty(), "rotation_angles", "must not be empty");
  for (double a : rotation_angles)
    check_range(std::isfinite(a) && a >= -360.0 && a <= 360.0, "rotation_angles", "entries must be in [-360, 360]");
}

AugParams AugParams::shift(int dx, int dy) {
  AugParams p;
  p.kind = AugKind::shift;
  p.dx = dx;
  p.dy = dy;
  return p;
}

AugParams AugParams::overlay(double alpha, int texture_id, std::uint64_t seed) {
  AugParams p;
  p.kind = AugKind::overlay;
  p.alpha = alpha;
  p.texture_id = texture_id;
  p.seed = seed;
  return p;
}

AugParams AugParams::cutout(double x, double y, double w, double h) {
  AugParams p;
  p.kind = AugKind::cutout;
  p.rect_x = x;
  p.rect_y = y;
  p.rect_w = w;
  p.rect_h = h;
  return p;
}

AugParams AugParams::blur(double sigma) {
  AugParams p;
  p.kind = AugKind::blur;
  p.sigma = sigma;
  return p;
}

AugParams AugParams::affine(std::array<double, 4> matrix, double tx, double ty) {
  AugParams p;
  p.kind = AugKind::affine_jitter;
  p.matrix = matrix;
  p.tx = tx;
  p.ty = ty;
  return p;
}

AugParams AugParams::rotation(double angle) {
  AugParams p;
  p.kind = AugKind::rotation;
  p.angle = angle;
  return p;
}

AugParams sample_params(const AugmentationSpec& spec, Rng& rng) {
  AugParams p;
  p.kind = spec.kind;
  p.seed = rng();
  switch (spec.kind) {
    case AugKind::none:
      break;
    case AugKind::shift:
      p.dx = uniform_int(rng, -spec.shift_radius, spec.shift_radius);
      p.dy = uniform_int(rng, -spec.shift_radius, spec.shift_radius);
      break;
    case AugKind::conv: {
      std::normal_distribution<float> dist(0.0f, 1.0f / 3.0f);
      for (auto& k : p.kernel) k = dist(rng);
      break;
    }
    case AugKind::overlay:
      p.alpha = spec.overlay_alpha;
      p.texture_id = uniform_int(rng, 0, kTextureFamilies - 1);
      break;
    case AugKind::cutout: {
      const double side = std::sqrt(spec.cutout_max_fraction);
      p.rect_w = uniform(rng, 0.0, side);
      p.rect_h = uniform(rng, 0.0, side);
      p.rect_x = uniform(rng, 0.0, 1.0 - p.rect_w);
      p.rect_y = uniform(rng, 0.0, 1.0 - p.rect_h);
      break;
    }
    case AugKind::blur:
      p.sigma = spec.blur_sigma_min == spec.blur_sigma_max ? spec.blur_sigma_min
                                                            : uniform(rng, spec.blur_sigma_min, spec.blur_sigma_max);
      break;
    case AugKind::affine_jitter: {
      const double s = spec.affine_scale_min == spec.affine_scale_max
                           ? spec.affine_scale_min
                           : uniform(rng, spec.affine_scale_min, spec.affine_scale_max);
      const double shear = spec.affine_shear > 0.0 ? uniform(rng, -spec.affine_shear, spec.affine_shear) : 0.0;
      const double t = spec.affine_translate;
      p.tx = t > 0.0 ? uniform(rng, -t, t) : 0.0;
      p.ty = t > 0.0 ? uniform(rng, -t, t) : 0.0;
      p.matrix = {1.0 / s, -std::tan(shear) / s, 0.0, 1.0 / s};
      break;
    }
    case AugKind::rotation:
      p.angle = spec.rotation_angles[static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<int>(spec.rotation_angles.size()) - 1))];
      break;
  }
  return p;
}

Tensor apply(const Tensor& obs, const AugParams& params) {
  if ((obs.rank() != 3 && obs.rank() != 4) || obs.dim(-3) % 3 != 0 || obs.dim(-3) == 0)
    throw ConfigError("augmentation expects (3k, H, W) or (N, 3k, H, W), got " + shape_str(obs.shape()));
  const Plane plane{static_cast<int>(obs.dim(-2)), static_cast<int>(obs.dim(-1))};
  Tensor out(obs.shape());
  FrameOp op(params, plane);
  const std::int64_t frame = 3 * plane.size();
  for (std::int64_t off = 0; off < obs.numel(); off += frame) op(obs.data() + off, out.data() + off);
  return out;
}

Tensor augment_batch(const Tensor& batch, const AugmentationSpec& spec, Rng& rng) {
  if (batch.rank() != 4) throw ConfigError("augment_batch expects (N, 3k, H, W), got " + shape_str(batch.shape()));
  const std::int64_t n = batch.dim(0), row = batch.numel() / std::max<std::int64_t>(n, 1);
  const Plane plane{static_cast<int>(batch.dim(2)), static_cast<int>(batch.dim(3))};
  const std::int64_t frame = 3 * plane.size();
  Tensor out(batch.shape());
  for (std::int64_t i = 0; i < n; ++i) {
    const AugParams p = sample_params(spec, rng);
    FrameOp op(p, plane);
    for (std::int64_t off = i * row; off < (i + 1) * row; off += frame) op(batch.data() + off, out.data() + off);
  }
  return out;
}

void render_sample_sheet(const AugmentationSpec& spec, const Tensor& obs, int n, Rng& rng,
                         const std::filesystem::path& path) {
  if (n < 1) throw UsageError("sample sheet needs at least one tile");
  if (obs.rank() != 3) throw ConfigError("sample sheet expects (3k, H, W), got " + shape_str(obs.shape()));
  const int h = static_cast<int>(obs.dim(1)), w = static_cast<int>(obs.dim(2));
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  constexpr int gap = 2;
  Image sheet(cols * w + (cols + 1) * gap, rows * h + (rows + 1) * gap, 255);
  for (int i = 0; i < n; ++i) {
    const Tensor aug = apply(obs, sample_params(spec, rng));
    blit(sheet, to_image(aug, 0), gap + (i % cols) * (w + gap), gap + (i / cols) * (h + gap));
  }
  write_ppm(path, sheet);
}

}  // namespace svea
