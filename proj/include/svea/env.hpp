#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "svea/rng.hpp"
#include "svea/tensor.hpp"

namespace svea {

enum class Task { cartpole_balance, cartpole_swingup, reach, reach_moving, push };
enum class ActionSpace { discrete, continuous };
enum class Background { plain, texture };

std::string to_string(Task task);
Task parse_task(const std::string& name);
std::string to_string(ActionSpace space);
ActionSpace parse_action_space(const std::string& name);

/// Single RGB frame, planar (3, H, W) bytes. Pixel value v maps to v / 256.
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0) {}
  std::uint8_t& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::uint8_t at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

using Color = std::array<float, 3>;

/// Colors of the scene elements.
struct Palette {
  Color background{0.16f, 0.19f, 0.25f};
  Color floor{0.35f, 0.38f, 0.42f};
  Color body{0.85f, 0.65f, 0.30f};
  Color link{0.30f, 0.75f, 0.85f};
  Color goal{0.90f, 0.10f, 0.10f};

  static constexpr int kElements = 5;
  Color& operator[](int i);
  const Color& operator[](int i) const;
  friend bool operator==(const Palette&, const Palette&) = default;
};

/// Rendering-only change of the environment. The default value is the
/// training configuration.
struct EnvPerturbation {
  std::string name = "train";
  std::optional<Palette> palette;   // fixed per-element substitution
  bool randomize_palette = false;   // fresh random palette every episode
  Background background = Background::plain;
  double intensity = 0.0;           // distractor intensity I in [0, 1]

  bool is_identity() const {
    return !palette && !randomize_palette && background == Background::plain && intensity == 0.0;
  }
  void validate() const;

  static EnvPerturbation train() { return {}; }
  /// Every element recolored at random each episode.
  static EnvPerturbation color_hard();
  static EnvPerturbation texture_background();
  static EnvPerturbation distracting(double intensity);
  /// Parses "train", "color_hard", "texture", or "intensity_<I>".
  static EnvPerturbation parse(const std::string& name);
};

struct EnvConfig {
  Task task = Task::cartpole_balance;
  ActionSpace action_space = ActionSpace::discrete;
  int height = 64;
  int width = 64;
  int frame_stack = 3;
  int action_repeat = 0;   // 0: task default
  int episode_length = 0;  // agent steps; 0: task default

  int resolved_action_repeat() const;
  int resolved_episode_length() const;
  /// Discrete: number of actions. Continuous: action dimensionality.
  int action_dim() const;
  int channels() const { return 3 * frame_stack; }
  void validate() const;
};

/// Physical state. Unused fields stay zero for tasks that lack them.
struct EnvState {
  // cartpole
  double cart_x = 0.0, cart_v = 0.0, pole_angle = 0.0, pole_omega = 0.0;
  // reach / push
  std::array<double, 2> gripper{0.0, 0.0};
  std::array<double, 2> goal{0.0, 0.0};
  std::array<double, 2> goal_velocity{0.0, 0.0};
  std::array<double, 2> cube{0.0, 0.0};
  int step = 0;  // agent steps taken
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// A discrete index or a continuous vector with components in [-1, 1].
struct Action {
  int index = 0;
  std::vector<double> values;

  static Action discrete(int i) { return Action{i, {}}; }
  static Action continuous(std::vector<double> v) { return Action{0, std::move(v)}; }
};

struct StepResult {
  Tensor observation;  // (3k, H, W)
  double reward = 0.0;
  bool done = false;
  bool success = false;  // in the task's success state after this step
};

struct TraceRow {
  int step = 0;
  EnvState state;
  Action action;
  double reward = 0.0;
  bool in_goal = false;
};

/// One episode worth of steps.
struct EpisodeTrace {
  Task task = Task::reach;
  std::vector<TraceRow> rows;

  double total_return() const;
  int in_goal_steps() const;
};

/// In-goal fraction threshold for success: 0.5 for reaching tasks, 0.25 for
/// push; cartpole tasks have no success state and use 0.5 of upright steps.
double success_threshold(Task task);
/// True when the in-goal fraction reaches the task threshold.
bool success_criterion(const EpisodeTrace& trace);

/// Writes step, state fields, action, reward as RFC-4180 CSV.
void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path);

/// Task physics, independent of rendering.
namespace dynamics {
/// One cart-pole integration substep (semi-implicit Euler) with horizontal force.
void cartpole_substep(EnvState& s, double force, double dt);
/// (1 + cos(angle)) / 2.
double cartpole_upright(const EnvState& s);
}  // namespace dynamics

/// Rasterizes a state under a palette and distractor settings.
struct RenderSettings {
  Palette palette;
  double texture_weight = 0.0;  // blend of the background texture
  int texture_id = 0;
  std::uint64_t texture_seed = 0;
  int texture_offset = 0;
  int camera_dx = 0, camera_dy = 0;
};
Frame render_frame(Task task, const EnvState& state, const RenderSettings& settings, int height, int width);

/// Pixel-control environment with frame stacking. Dynamics draw from one
/// generator and rendering from another, so a perturbation never changes the
/// trajectory produced by an action sequence.
class Env {
 public:
  Env(EnvConfig config, EnvPerturbation perturbation, std::uint64_t seed);

  /// Starts an episode; the observation is the first frame repeated k times.
  Tensor reset();
  /// Throws UsageError for out-of-bounds actions or stepping a finished episode.
  StepResult step(const Action& action);

  const EnvState& state() const { return state_; }
  /// Overwrites the physical state of the running episode; the frame stack is
  /// left as is. Throws UsageError without an active episode.
  void set_state(const EnvState& state);
  const EnvConfig& config() const { return config_; }
  const EnvPerturbation& perturbation() const { return perturbation_; }
  const EpisodeTrace& trace() const { return trace_; }
  /// Newest frame (stack slot 0).
  const Frame& frame() const { return frames_.front(); }
  /// Stacked observation, slot 0 newest, as (3k, H, W) floats.
  Tensor observation() const;
  /// Stacked frames as bytes in the same layout.
  std::vector<std::uint8_t> observation_bytes() const;
  bool in_goal() const;

  /// Re-renders the current state with the current distractor settings.
  Frame render() const;

 private:
  void sample_initial_state();
  void begin_render_episode();
  void advance_distractors();
  void push_frame();

  EnvConfig config_;
  EnvPerturbation perturbation_;
  Rng dynamics_rng_;
  Rng render_rng_;
  EnvState state_;
  std::deque<Frame> frames_;
  EpisodeTrace trace_;
  bool active_ = false;

  // distractor state
  RenderSettings settings_;
  Palette drift_target_;
  Palette drift_palette_;
  double jitter_x_ = 0.0, jitter_y_ = 0.0;
  int sim_steps_ = 0;
};

/// Converts stacked bytes (3k, H, W) to floats in [0, 1).
Tensor bytes_to_observation(const std::uint8_t* bytes, int channels, int height, int width);

}  // namespace svea
