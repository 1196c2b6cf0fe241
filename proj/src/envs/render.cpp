#include <algorithm>
#include <cmath>

#include "svea/env.hpp"
#include "svea/ppm.hpp"
#include "svea/textures.hpp"

namespace svea {
namespace {

// Cart-pole scene geometry in world units.
constexpr double kCartViewWidth = 5.6;
constexpr double kCartHalfWidth = 0.3;
constexpr double kCartHalfHeight = 0.15;
constexpr double kPoleDrawLength = 1.6;
constexpr double kPoleHalfThickness = 0.09;
constexpr double kPivotRow = 0.58;  // fraction of frame height

// Planar workspace geometry.
constexpr double kWorkspaceView = 2.4;
constexpr double kGoalRadius = 0.2;
constexpr double kGripperRadius = 0.1;
constexpr double kCubeHalf = 0.1;

enum Layer { kBackground = 0, kFloor = 1, kBody = 2, kLink = 3, kGoal = 4 };

class Canvas {
 public:
  Canvas(int h, int w) : h_(h), w_(w), layer_(static_cast<std::size_t>(h) * w, kBackground) {}

  void set(int x, int y, Layer l) {
    if (x >= 0 && y >= 0 && x < w_ && y < h_) layer_[static_cast<std::size_t>(y) * w_ + x] = static_cast<unsigned char>(l);
  }
  Layer get(int x, int y) const { return static_cast<Layer>(layer_[static_cast<std::size_t>(y) * w_ + x]); }

  // Fills pixels whose centers satisfy `inside(px, py)` in pixel coordinates.
  template <class F>
  void fill(Layer l, F inside) {
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x)
        if (inside(x + 0.5, y + 0.5)) set(x, y, l);
  }

  int h_, w_;

 private:
  std::vector<unsigned char> layer_;
};

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void draw_cartpole(Canvas& c, const EnvState& s, int ox, int oy) {
  const double scale = c.w_ / kCartViewWidth;
  const double cx = c.w_ / 2.0 + s.cart_x * scale + ox;
  const double cy = c.h_ * kPivotRow + oy;
  const double rail = cy + kCartHalfHeight * scale;
  c.fill(kFloor, [&](double, double py) { return py >= rail; });
  c.fill(kBody, [&](double px, double py) {
    return std::abs(px - cx) <= kCartHalfWidth * scale && std::abs(py - cy) <= kCartHalfHeight * scale;
  });
  const double tx = cx + kPoleDrawLength * scale * std::sin(s.pole_angle);
  const double ty = cy - kPoleDrawLength * scale * std::cos(s.pole_angle);
  const double half = std::max(kPoleHalfThickness * scale, 0.75);
  c.fill(kLink, [&](double px, double py) { return segment_distance(px, py, cx, cy, tx, ty) <= half; });
}

void draw_planar(Canvas& c, Task task, const EnvState& s, int ox, int oy) {
  const double scale = c.w_ / kWorkspaceView;
  auto to_px = [&](const std::array<double, 2>& p) {
    return std::array<double, 2>{c.w_ / 2.0 + p[0] * scale + ox, c.h_ / 2.0 - p[1] * (c.h_ / kWorkspaceView) + oy};
  };
  const double half_x = scale, half_y = c.h_ / kWorkspaceView;
  const double mx = c.w_ / 2.0 + ox, my = c.h_ / 2.0 + oy;
  c.fill(kFloor, [&](double px, double py) { return std::abs(px - mx) <= half_x && std::abs(py - my) <= half_y; });
  auto disc = [&](Layer l, const std::array<double, 2>& p, double r) {
    const auto q = to_px(p);
    const double rp = std::max(r * scale, 0.75);
    c.fill(l, [&](double px, double py) { return (px - q[0]) * (px - q[0]) + (py - q[1]) * (py - q[1]) <= rp * rp; });
  };
  disc(kGoal, s.goal, kGoalRadius);
  if (task == Task::push) {
    const auto q = to_px(s.cube);
    const double hp = kCubeHalf * scale;
    c.fill(kLink, [&](double px, double py) { return std::abs(px - q[0]) <= hp && std::abs(py - q[1]) <= hp; });
  }
  disc(kBody, s.gripper, kGripperRadius);
}

}  // namespace

Frame render_frame(Task task, const EnvState& state, const RenderSettings& settings, int height, int width) {
  Canvas canvas(height, width);
  if (task == Task::cartpole_balance || task == Task::cartpole_swingup)
    draw_cartpole(canvas, state, settings.camera_dx, settings.camera_dy);
  else
    draw_planar(canvas, task, state, settings.camera_dx, settings.camera_dy);

  Tensor texture;
  const bool textured = settings.texture_weight > 0.0;
  if (textured)
    texture = make_texture(settings.texture_id, settings.texture_seed, height, width, settings.texture_offset, 0);
  const float tw = static_cast<float>(settings.texture_weight);
  const std::int64_t plane = static_cast<std::int64_t>(height) * width;

  Frame frame(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Layer l = canvas.get(x, y);
      const Color& col = settings.palette[l];
      for (int ch = 0; ch < 3; ++ch) {
        float v = col[static_cast<std::size_t>(ch)];
        if (textured && (l == kBackground || l == kFloor))
          v = (1.0f - tw) * v + tw * texture[ch * plane + static_cast<std::int64_t>(y) * width + x];
        frame.at(ch, y, x) = to_byte(v);
      }
    }
  return frame;
}

}  // namespace svea
