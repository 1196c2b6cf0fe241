#include "svea/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "svea/errors.hpp"

namespace svea {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Cart-pole constants (classic formulation).
constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kPoleHalfLength = 0.5;
constexpr double kForce = 10.0;
constexpr double kTrackLimit = 2.4;
constexpr double kDt = 0.02;

// Planar tasks.
constexpr double kWorkspace = 1.0;
constexpr double kGoalRadius = 0.2;
constexpr double kSubstepSpeed = 0.04;  // per axis and simulation substep
constexpr double kContact = 0.2;        // gripper-cube center distance that pushes
constexpr int kZigZagPeriod = 10;       // agent steps per zig-zag leg

bool is_cartpole(Task t) { return t == Task::cartpole_balance || t == Task::cartpole_swingup; }

double clamp_ws(double v) { return std::clamp(v, -kWorkspace, kWorkspace); }

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

Color random_color(Rng& rng) {
  return {static_cast<float>(uniform(rng, 0.0, 1.0)), static_cast<float>(uniform(rng, 0.0, 1.0)),
          static_cast<float>(uniform(rng, 0.0, 1.0))};
}

Palette random_palette(Rng& rng) {
  Palette p;
  for (int i = 0; i < Palette::kElements; ++i) p[i] = random_color(rng);
  return p;
}

// Discrete planar moves: 0 stays, 1..8 go counter-clockwise from +x.
std::array<double, 2> planar_direction(int index) {
  if (index == 0) return {0.0, 0.0};
  const double a = (index - 1) * kPi / 4.0;
  return {std::round(std::cos(a)), std::round(std::sin(a))};
}

}  // namespace

std::string to_string(Task task) {
  switch (task) {
    case Task::cartpole_balance: return "cartpole_balance";
    case Task::cartpole_swingup: return "cartpole_swingup";
    case Task::reach: return "reach";
    case Task::reach_moving: return "reach_moving";
    case Task::push: return "push";
  }
  return "reach";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::cartpole_balance, Task::cartpole_swingup, Task::reach, Task::reach_moving, Task::push})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown task '" + name +
                    "' (expected cartpole_balance, cartpole_swingup, reach, reach_moving, push)");
}

std::string to_string(ActionSpace space) { return space == ActionSpace::discrete ? "discrete" : "continuous"; }

ActionSpace parse_action_space(const std::string& name) {
  if (name == "discrete") return ActionSpace::discrete;
  if (name == "continuous") return ActionSpace::continuous;
  throw ConfigError("unknown action space '" + name + "' (expected discrete, continuous)");
}

Color& Palette::operator[](int i) {
  switch (i) {
    case 0: return background;
    case 1: return floor;
    case 2: return body;
    case 3: return link;
    case 4: return goal;
    default: throw UsageError("palette element " + std::to_string(i) + " out of range");
  }
}

const Color& Palette::operator[](int i) const { return const_cast<Palette&>(*this)[i]; }

void EnvPerturbation::validate() const {
  if (!(intensity >= 0.0 && intensity <= 1.0))
    throw ConfigError("perturbation intensity must be in [0, 1], got " + std::to_string(intensity));
}

EnvPerturbation EnvPerturbation::color_hard() {
  EnvPerturbation p;
  p.name = "color_hard";
  p.randomize_palette = true;
  return p;
}

EnvPerturbation EnvPerturbation::texture_background() {
  EnvPerturbation p;
  p.name = "texture";
  p.background = Background::texture;
  return p;
}

EnvPerturbation EnvPerturbation::distracting(double intensity) {
  EnvPerturbation p;
  std::ostringstream name;
  name << "intensity_" << intensity;
  p.name = name.str();
  p.intensity = intensity;
  p.validate();
  return p;
}

EnvPerturbation EnvPerturbation::parse(const std::string& name) {
  if (name == "train") return train();
  if (name == "color_hard") return color_hard();
  if (name == "texture") return texture_background();
  const std::string prefix = "intensity_";
  if (name.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(name.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == name.size() - prefix.size()) return distracting(value);
  }
  throw ConfigError("unknown perturbation '" + name + "' (expected train, color_hard, texture, intensity_<I>)");
}

int EnvConfig::resolved_action_repeat() const { return action_repeat > 0 ? action_repeat : 4; }

int EnvConfig::resolved_episode_length() const {
  if (episode_length > 0) return episode_length;
  return is_cartpole(task) ? 125 : 50;
}

int EnvConfig::action_dim() const {
  if (action_space == ActionSpace::continuous) return is_cartpole(task) ? 1 : 2;
  return is_cartpole(task) ? 3 : 9;
}

void EnvConfig::validate() const {
  if (height < 16 || width < 16 || height > 256 || width > 256)
    throw ConfigError("frame size must be within [16, 256], got " + std::to_string(height) + "x" +
                      std::to_string(width));
  if (frame_stack < 1) throw ConfigError("frame_stack must be >= 1");
  if (action_repeat < 0 || episode_length < 0) throw ConfigError("action_repeat and episode_length must be >= 0");
}

double EpisodeTrace::total_return() const {
  double total = 0.0;
  for (const auto& r : rows) total += r.reward;
  return total;
}

int EpisodeTrace::in_goal_steps() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const TraceRow& r) { return r.in_goal; }));
}

double success_threshold(Task task) { return task == Task::push ? 0.25 : 0.5; }

bool success_criterion(const EpisodeTrace& trace) {
  if (trace.rows.empty()) return false;
  return static_cast<double>(trace.in_goal_steps()) >=
         success_threshold(trace.task) * static_cast<double>(trace.rows.size());
}

void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,cart_x,cart_v,pole_angle,pole_omega,gripper_x,gripper_y,goal_x,goal_y,cube_x,cube_y,action,reward,"
         "in_goal\r\n";
  out.precision(17);
  for (const auto& r : trace.rows) {
    const auto& s = r.state;
    std::string action;
    if (r.action.values.empty()) {
      action = std::to_string(r.action.index);
    } else {
      std::ostringstream a;
      a.precision(17);
      for (std::size_t i = 0; i < r.action.values.size(); ++i) a << (i ? " " : "") << r.action.values[i];
      action = a.str();
    }
    out << r.step << ',' << s.cart_x << ',' << s.cart_v << ',' << s.pole_angle << ',' << s.pole_omega << ','
        << s.gripper[0] << ',' << s.gripper[1] << ',' << s.goal[0] << ',' << s.goal[1] << ',' << s.cube[0] << ','
        << s.cube[1] << ',' << action << ',' << r.reward << ',' << (r.in_goal ? 1 : 0) << "\r\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace dynamics {

void cartpole_substep(EnvState& s, double force, double dt) {
  const double total = kCartMass + kPoleMass;
  const double sin_t = std::sin(s.pole_angle), cos_t = std::cos(s.pole_angle);
  const double temp = (force + kPoleMass * kPoleHalfLength * s.pole_omega * s.pole_omega * sin_t) / total;
  const double alpha = (kGravity * sin_t - cos_t * temp) /
                       (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total));
  const double acc = temp - kPoleMass * kPoleHalfLength * alpha * cos_t / total;
  s.cart_v += acc * dt;
  s.cart_x += s.cart_v * dt;
  s.pole_omega += alpha * dt;
  s.pole_angle += s.pole_omega * dt;
  if (s.cart_x > kTrackLimit || s.cart_x < -kTrackLimit) {
    s.cart_x = std::clamp(s.cart_x, -kTrackLimit, kTrackLimit);
    s.cart_v = 0.0;
  }
}

double cartpole_upright(const EnvState& s) { return (1.0 + std::cos(s.pole_angle)) / 2.0; }

}  // namespace dynamics

Tensor bytes_to_observation(const std::uint8_t* bytes, int channels, int height, int width) {
  Tensor obs(Shape{channels, height, width});
  for (std::int64_t i = 0; i < obs.numel(); ++i) obs[i] = static_cast<float>(bytes[i]) * (1.0f / 256.0f);
  return obs;
}

Env::Env(EnvConfig config, EnvPerturbation perturbation, std::uint64_t seed)
    : config_(config),
      perturbation_(std::move(perturbation)),
      dynamics_rng_(make_stream(seed, "env")),
      render_rng_(make_stream(seed, "render")) {
  config_.validate();
  perturbation_.validate();
}

void Env::sample_initial_state() {
  state_ = EnvState{};
  Rng& rng = dynamics_rng_;
  switch (config_.task) {
    case Task::cartpole_balance:
    case Task::cartpole_swingup:
      state_.cart_x = uniform(rng, -0.25, 0.25);
      state_.cart_v = uniform(rng, -0.05, 0.05);
      state_.pole_angle = uniform(rng, -0.1, 0.1) + (config_.task == Task::cartpole_swingup ? kPi : 0.0);
      state_.pole_omega = uniform(rng, -0.05, 0.05);
      break;
    case Task::reach:
    case Task::reach_moving:
    case Task::push: {
      auto point = [&] { return std::array<double, 2>{uniform(rng, -0.9, 0.9), uniform(rng, -0.9, 0.9)}; };
      state_.gripper = point();
      do state_.goal = point();
      while (dist(state_.goal, state_.gripper) < kGoalRadius);
      if (config_.task == Task::push) {
        do state_.cube = {uniform(rng, -0.6, 0.6), uniform(rng, -0.6, 0.6)};
        while (dist(state_.cube, state_.gripper) < 0.3 || dist(state_.cube, state_.goal) < 0.3);
      }
      if (config_.task == Task::reach_moving) {
        const double speed = uniform(rng, 0.01, 0.04);
        const double heading = uniform(rng, 0.0, 2.0 * kPi);
        state_.goal_velocity = {speed * std::cos(heading), speed * std::sin(heading)};
      }
      break;
    }
  }
}

void Env::begin_render_episode() {
  settings_ = RenderSettings{};
  Rng& rng = render_rng_;
  // Draw everything unconditionally so distractors at different intensities stay coupled.
  const Palette episode_palette = random_palette(rng);
  drift_target_ = random_palette(rng);
  jitter_x_ = uniform(rng, -1.0, 1.0);
  jitter_y_ = uniform(rng, -1.0, 1.0);
  settings_.texture_id = uniform_int(rng, 0, 2);
  settings_.texture_seed = rng();
  sim_steps_ = 0;

  if (perturbation_.palette) settings_.palette = *perturbation_.palette;
  if (perturbation_.randomize_palette) settings_.palette = episode_palette;
  if (perturbation_.background == Background::texture) settings_.texture_weight = 1.0;
  advance_distractors();
}

void Env::advance_distractors() {
  Rng& rng = render_rng_;
  for (int i = 0; i < Palette::kElements; ++i)
    for (auto& c : drift_target_[i]) c = std::clamp(c + static_cast<float>(normal(rng, 0.0, 0.03)), 0.0f, 1.0f);
  jitter_x_ = std::clamp(jitter_x_ + normal(rng, 0.0, 0.1), -1.0, 1.0);
  jitter_y_ = std::clamp(jitter_y_ + normal(rng, 0.0, 0.1), -1.0, 1.0);

  const double I = perturbation_.intensity;
  if (I == 0.0) return;
  const Palette& base = settings_.palette;
  const float w = static_cast<float>(I);
  for (int i = 0; i < Palette::kElements; ++i)
    for (std::size_t c = 0; c < 3; ++c) drift_palette_[i][c] = base[i][c] + w * (drift_target_[i][c] - base[i][c]);
  settings_.texture_weight = std::max(perturbation_.background == Background::texture ? 1.0 : 0.0, 0.6 * I);
  settings_.texture_offset += 1;
  settings_.camera_dx = static_cast<int>(std::lround(I * 6.0 * jitter_x_));
  settings_.camera_dy = static_cast<int>(std::lround(I * 6.0 * jitter_y_));
}

Frame Env::render() const {
  if (perturbation_.intensity == 0.0) return render_frame(config_.task, state_, settings_, config_.height, config_.width);
  RenderSettings s = settings_;
  s.palette = drift_palette_;
  return render_frame(config_.task, state_, s, config_.height, config_.width);
}

void Env::push_frame() {
  frames_.push_front(render());
  while (static_cast<int>(frames_.size()) > config_.frame_stack) frames_.pop_back();
}

Tensor Env::reset() {
  sample_initial_state();
  begin_render_episode();
  frames_.clear();
  const Frame first = render();
  for (int i = 0; i < config_.frame_stack; ++i) frames_.push_back(first);
  trace_ = EpisodeTrace{};
  trace_.task = config_.task;
  active_ = true;
  return observation();
}

void Env::set_state(const EnvState& state) {
  if (!active_) throw UsageError("set_state() needs an active episode");
  state_ = state;
}

bool Env::in_goal() const {
  switch (config_.task) {
    case Task::cartpole_balance:
    case Task::cartpole_swingup:
      return std::cos(state_.pole_angle) >= 0.95;
    case Task::reach:
    case Task::reach_moving:
      return dist(state_.gripper, state_.goal) <= kGoalRadius;
    case Task::push:
      return dist(state_.cube, state_.goal) <= kGoalRadius;
  }
  return false;
}

StepResult Env::step(const Action& action) {
  if (!active_) throw UsageError("step() called before reset() or after the episode ended");
  const bool discrete = config_.action_space == ActionSpace::discrete;
  if (discrete) {
    if (action.index < 0 || action.index >= config_.action_dim())
      throw UsageError("discrete action " + std::to_string(action.index) + " outside [0, " +
                       std::to_string(config_.action_dim()) + ")");
  } else {
    if (static_cast<int>(action.values.size()) != config_.action_dim())
      throw UsageError("continuous action needs " + std::to_string(config_.action_dim()) + " components, got " +
                       std::to_string(action.values.size()));
    for (double v : action.values)
      if (!(v >= -1.0 && v <= 1.0)) throw UsageError("continuous action component " + std::to_string(v) + " outside [-1, 1]");
  }

  const int repeat = config_.resolved_action_repeat();
  double reward = 0.0;
  if (is_cartpole(config_.task)) {
    const double force = discrete ? kForce * (action.index - 1) : kForce * action.values[0];
    for (int k = 0; k < repeat; ++k) {
      dynamics::cartpole_substep(state_, force, kDt);
      reward += dynamics::cartpole_upright(state_);
      if (++sim_steps_ % 2 == 0) advance_distractors();
    }
    reward /= repeat;
  } else {
    std::array<double, 2> dir = discrete ? planar_direction(action.index)
                                         : std::array<double, 2>{action.values[0], action.values[1]};
    for (int k = 0; k < repeat; ++k) {
      const std::array<double, 2> before = state_.gripper;
      state_.gripper = {clamp_ws(before[0] + kSubstepSpeed * dir[0]), clamp_ws(before[1] + kSubstepSpeed * dir[1])};
      if (config_.task == Task::push && dist(state_.gripper, state_.cube) < kContact) {
        state_.cube = {clamp_ws(state_.cube[0] + state_.gripper[0] - before[0]),
                       clamp_ws(state_.cube[1] + state_.gripper[1] - before[1])};
      }
      if (++sim_steps_ % 2 == 0) advance_distractors();
    }
    if (config_.task == Task::reach_moving) {
      auto& v = state_.goal_velocity;
      const double leg = ((state_.step / kZigZagPeriod) % 2 == 0) ? 1.0 : -1.0;
      const std::array<double, 2> side{-v[1] * leg, v[0] * leg};
      for (int a = 0; a < 2; ++a) {
        state_.goal[static_cast<std::size_t>(a)] += v[static_cast<std::size_t>(a)] + side[static_cast<std::size_t>(a)];
        if (std::abs(state_.goal[static_cast<std::size_t>(a)]) > 0.9) {
          state_.goal[static_cast<std::size_t>(a)] = std::clamp(state_.goal[static_cast<std::size_t>(a)], -0.9, 0.9);
          v[static_cast<std::size_t>(a)] = -v[static_cast<std::size_t>(a)];
        }
      }
    }
    const std::array<double, 2>& tracked = config_.task == Task::push ? state_.cube : state_.gripper;
    const double d = dist(tracked, state_.goal);
    reward = -d + (d <= kGoalRadius ? 1.0 : 0.0);
  }
  ++state_.step;
  push_frame();

  StepResult result;
  result.observation = observation();
  result.reward = reward;
  result.success = in_goal();
  result.done = state_.step >= config_.resolved_episode_length();
  trace_.rows.push_back(TraceRow{state_.step, state_, action, reward, result.success});
  if (result.done) active_ = false;
  return result;
}

std::vector<std::uint8_t> Env::observation_bytes() const {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(config_.channels()) * config_.height * config_.width);
  for (const auto& f : frames_) out.insert(out.end(), f.data.begin(), f.data.end());
  return out;
}

Tensor Env::observation() const {
  const auto bytes = observation_bytes();
  return bytes_to_observation(bytes.data(), config_.channels(), config_.height, config_.width);
}

}  // namespace svea
