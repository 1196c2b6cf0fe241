#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "svea/env.hpp"

using namespace svea;

namespace {

EnvConfig reach_config() {
  EnvConfig cfg;
  cfg.task = Task::reach;
  return cfg;
}

Action random_action(const EnvConfig& cfg, Rng& rng) {
  if (cfg.action_space == ActionSpace::discrete) return Action::discrete(uniform_int(rng, 0, cfg.action_dim() - 1));
  std::vector<double> v(static_cast<std::size_t>(cfg.action_dim()));
  for (auto& x : v) x = uniform(rng, -1.0, 1.0);
  return Action::continuous(v);
}

double mean_pixel_l2(const Frame& a, const Frame& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = (static_cast<double>(a.data[i]) - b.data[i]) / 256.0;
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(a.data.size()));
}

// Cart-pole ODE written out directly and integrated with classic RK4.
std::array<double, 4> cartpole_rk4(std::array<double, 4> y, double force, double duration, double h) {
  auto f = [force](const std::array<double, 4>& s) {
    const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, m = mc + mp;
    const double th = s[2], w = s[3];
    const double tmp = (force + mp * l * w * w * std::sin(th)) / m;
    const double th_acc = (g * std::sin(th) - std::cos(th) * tmp) / (l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / m));
    const double x_acc = tmp - mp * l * th_acc * std::cos(th) / m;
    return std::array<double, 4>{s[1], x_acc, w, th_acc};
  };
  const int steps = static_cast<int>(std::lround(duration / h));
  for (int i = 0; i < steps; ++i) {
    auto axpy = [](const std::array<double, 4>& a, const std::array<double, 4>& k, double c) {
      return std::array<double, 4>{a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2], a[3] + c * k[3]};
    };
    const auto k1 = f(y), k2 = f(axpy(y, k1, h / 2)), k3 = f(axpy(y, k2, h / 2)), k4 = f(axpy(y, k3, h));
    for (int j = 0; j < 4; ++j) y[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return y;
}

}  // namespace

TEST(EnvReach, GripperOnGoalWithZeroActionEarnsBonus) {
  Env env(reach_config(), EnvPerturbation::train(), 1);
  env.reset();
  EnvState s = env.state();
  s.gripper = s.goal;
  env.set_state(s);
  const StepResult r = env.step(Action::discrete(0));
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.success);
}

TEST(EnvReach, StayingOnGoalReachesMaxReturnFifty) {
  Env env(reach_config(), EnvPerturbation::train(), 2);
  env.reset();
  EnvState s = env.state();
  s.gripper = s.goal;
  env.set_state(s);
  double total = 0.0;
  StepResult r;
  do {
    r = env.step(Action::discrete(0));
    total += r.reward;
  } while (!r.done);
  EXPECT_EQ(total, 50.0);
  EXPECT_EQ(env.trace().rows.size(), 50u);
  EXPECT_TRUE(success_criterion(env.trace()));
}

TEST(EnvReach, InitialGripperAndGoalAreSeparated) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Env env(reach_config(), EnvPerturbation::train(), seed);
    env.reset();
    const auto& st = env.state();
    EXPECT_GE(std::hypot(st.gripper[0] - st.goal[0], st.gripper[1] - st.goal[1]), 0.2);
    for (double v : {st.gripper[0], st.gripper[1], st.goal[0], st.goal[1]}) EXPECT_LE(std::abs(v), 1.0);
  }
}

TEST(EnvReach, ResetIsDeterministicForASeed) {
  Env a(reach_config(), EnvPerturbation::train(), 3), b(reach_config(), EnvPerturbation::train(), 3);
  EXPECT_EQ(a.reset(), b.reset());
  EXPECT_EQ(a.state(), b.state());
}

TEST(EnvReach, GoalMarkIsRedInTrainingPalette) {
  Env env(reach_config(), EnvPerturbation::train(), 4);
  env.reset();
  const Frame& f = env.frame();
  const auto& goal = env.state().goal;
  // workspace [-1, 1] maps onto the frame; sample the pixel at the goal center
  int found = 0;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      if (f.at(0, y, x) == 230 && f.at(1, y, x) == 25 && f.at(2, y, x) == 25) ++found;
  EXPECT_GT(found, 0) << "goal at " << goal[0] << "," << goal[1];
}

TEST(EnvRewards, ReturnBoundsHoldUnderRandomPolicies) {
  for (Task task : {Task::reach, Task::reach_moving, Task::push, Task::cartpole_swingup}) {
    EnvConfig cfg;
    cfg.task = task;
    Rng rng = make_stream(5, "policy");
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Env env(cfg, EnvPerturbation::train(), seed);
      env.reset();
      double total = 0.0;
      StepResult r;
      do {
        r = env.step(random_action(cfg, rng));
        ASSERT_TRUE(std::isfinite(r.reward));
        total += r.reward;
      } while (!r.done);
      EXPECT_EQ(env.state().step, cfg.resolved_episode_length());
      if (task == Task::cartpole_swingup) {
        EXPECT_GE(total, 0.0);
        EXPECT_LE(total, cfg.resolved_episode_length());
      } else {
        EXPECT_LE(total, 50.0);
      }
    }
  }
}

TEST(EnvCartpole, UprightAtRestStaysUpright) {
  EnvState s;
  for (int i = 0; i < 4; ++i) dynamics::cartpole_substep(s, 0.0, 0.02);
  EXPECT_NEAR(s.pole_angle, 0.0, 1e-6);
  const auto y = cartpole_rk4({0.0, 0.0, 0.0, 0.0}, 0.0, 0.08, 1e-4);
  EXPECT_NEAR(y[2], 0.0, 1e-6);
}

TEST(EnvCartpole, SubstepConvergesToRungeKuttaOracle) {
  EnvState s;
  s.pole_angle = 0.05;
  s.pole_omega = -0.1;
  for (int i = 0; i < 8000; ++i) dynamics::cartpole_substep(s, 10.0, 1e-5);
  const auto y = cartpole_rk4({0.0, 0.0, 0.05, -0.1}, 10.0, 0.08, 1e-5);
  EXPECT_NEAR(s.pole_angle, y[2], 1e-5);
  EXPECT_NEAR(s.cart_x, y[0], 1e-5);
  EXPECT_NEAR(s.pole_omega, y[3], 1e-4);
}

TEST(EnvCartpole, UprightRewardShape) {
  EnvState s;
  EXPECT_EQ(dynamics::cartpole_upright(s), 1.0);
  s.pole_angle = std::acos(-1.0);
  EXPECT_NEAR(dynamics::cartpole_upright(s), 0.0, 1e-12);
}

TEST(EnvSuccess, ThresholdArithmetic) {
  EpisodeTrace reach{Task::reach, {}};
  for (int i = 0; i < 50; ++i) reach.rows.push_back(TraceRow{i + 1, {}, {}, 0.0, i < 30});
  EXPECT_TRUE(success_criterion(reach));

  EpisodeTrace push{Task::push, {}};
  for (int i = 0; i < 50; ++i) push.rows.push_back(TraceRow{i + 1, {}, {}, 0.0, i < 12});
  EXPECT_FALSE(success_criterion(push));
  push.rows[12].in_goal = true;
  EXPECT_TRUE(success_criterion(push));

  EpisodeTrace none{Task::reach, {}};
  for (int i = 0; i < 50; ++i) none.rows.push_back(TraceRow{i + 1, {}, {}, 0.0, false});
  EXPECT_FALSE(success_criterion(none));
  EXPECT_FALSE(success_criterion(EpisodeTrace{}));
}

TEST(EnvErrors, OutOfBoundsActionsAreUsageErrors) {
  Env env(reach_config(), EnvPerturbation::train(), 6);
  env.reset();
  EXPECT_THROW(env.step(Action::discrete(9)), UsageError);
  EXPECT_THROW(env.step(Action::discrete(-1)), UsageError);
  EnvConfig cont = reach_config();
  cont.action_space = ActionSpace::continuous;
  Env c(cont, EnvPerturbation::train(), 6);
  c.reset();
  EXPECT_THROW(c.step(Action::continuous({0.5, 1.5})), UsageError);
  EXPECT_THROW(c.step(Action::continuous({0.5})), UsageError);
}

TEST(EnvErrors, SteppingFinishedEpisodeIsUsageError) {
  EnvConfig cfg = reach_config();
  cfg.episode_length = 2;
  Env env(cfg, EnvPerturbation::train(), 7);
  EXPECT_THROW(env.step(Action::discrete(0)), UsageError);
  env.reset();
  env.step(Action::discrete(0));
  EXPECT_TRUE(env.step(Action::discrete(0)).done);
  EXPECT_THROW(env.step(Action::discrete(0)), UsageError);
}

TEST(EnvPerturbations, ZeroIntensityIsTrainingEnvironment) {
  for (Task task : {Task::cartpole_balance, Task::reach}) {
    EnvConfig cfg;
    cfg.task = task;
    Env train(cfg, EnvPerturbation::train(), 8), zero(cfg, EnvPerturbation::distracting(0.0), 8);
    ASSERT_EQ(train.reset(), zero.reset());
    Rng rng = make_stream(8, "policy");
    for (int i = 0; i < 20; ++i) {
      const Action a = random_action(cfg, rng);
      ASSERT_EQ(train.step(a).observation, zero.step(a).observation) << "step " << i;
    }
  }
}

TEST(EnvPerturbations, DynamicsAndRewardsIgnoreRendering) {
  for (const std::string& name : {"intensity_0.5", "color_hard", "texture", "intensity_1"}) {
    EnvConfig cfg;
    cfg.task = Task::push;
    Env clean(cfg, EnvPerturbation::train(), 9), shifted(cfg, EnvPerturbation::parse(name), 9);
    clean.reset();
    shifted.reset();
    Rng rng = make_stream(9, "policy");
    bool pixels_differ = false;
    StepResult a, b;
    do {
      const Action act = random_action(cfg, rng);
      a = clean.step(act);
      b = shifted.step(act);
      ASSERT_EQ(clean.state(), shifted.state()) << name;
      ASSERT_EQ(a.reward, b.reward) << name;
      pixels_differ = pixels_differ || !(a.observation == b.observation);
    } while (!a.done);
    EXPECT_TRUE(pixels_differ) << name;
  }
}

TEST(EnvPerturbations, ShiftGrowsWithIntensity) {
  const double levels[] = {0.0, 0.1, 0.2, 0.3, 0.5, 1.0};
  for (Task task : {Task::cartpole_balance, Task::reach}) {
    EnvConfig cfg;
    cfg.task = task;
    std::vector<double> distance;
    for (double level : levels) {
      double total = 0.0;
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Env base(cfg, EnvPerturbation::train(), seed), env(cfg, EnvPerturbation::distracting(level), seed);
        base.reset();
        env.reset();
        Rng rng = make_stream(seed, "policy");
        for (int i = 0; i < 20; ++i) {
          const Action a = random_action(cfg, rng);
          base.step(a);
          env.step(a);
          total += mean_pixel_l2(base.frame(), env.frame());
        }
      }
      distance.push_back(total);
    }
    EXPECT_EQ(distance[0], 0.0);
    for (std::size_t i = 1; i < distance.size(); ++i) EXPECT_GE(distance[i], distance[i - 1]) << to_string(task) << " level " << levels[i];
  }
}

TEST(EnvPerturbations, ParseNames) {
  EXPECT_TRUE(EnvPerturbation::parse("train").is_identity());
  EXPECT_TRUE(EnvPerturbation::parse("color_hard").randomize_palette);
  EXPECT_EQ(EnvPerturbation::parse("texture").background, Background::texture);
  EXPECT_EQ(EnvPerturbation::parse("intensity_0.3").intensity, 0.3);
  EXPECT_THROW(EnvPerturbation::parse("intensity_2"), ConfigError);
  EXPECT_THROW(EnvPerturbation::parse("intensity_x"), ConfigError);
  EXPECT_THROW(EnvPerturbation::parse("fog"), ConfigError);
}

TEST(EnvStacking, SlotJHoldsFrameFromJStepsAgo) {
  EnvConfig cfg;
  cfg.task = Task::cartpole_balance;
  Env env(cfg, EnvPerturbation::train(), 10);
  env.reset();
  std::vector<Frame> history{env.frame()};
  for (int t = 0; t < 6; ++t) {
    env.step(Action::discrete(t % 3));
    history.push_back(env.frame());
    const auto bytes = env.observation_bytes();
    const std::size_t frame_bytes = history.back().data.size();
    for (int j = 0; j < 3; ++j) {
      const int src = std::max(0, static_cast<int>(history.size()) - 1 - j);
      const std::vector<std::uint8_t> slot(bytes.begin() + static_cast<std::ptrdiff_t>(j * frame_bytes),
                                           bytes.begin() + static_cast<std::ptrdiff_t>((j + 1) * frame_bytes));
      EXPECT_EQ(slot, history[static_cast<std::size_t>(src)].data) << "t=" << t << " slot " << j;
    }
  }
}

TEST(EnvStacking, ResetRepeatsFirstFrame) {
  Env env(reach_config(), EnvPerturbation::train(), 11);
  const Tensor obs = env.reset();
  ASSERT_EQ(obs.shape(), (Shape{9, 64, 64}));
  EXPECT_EQ(slice_rows(obs, 0, 3), slice_rows(obs, 3, 6));
  EXPECT_EQ(slice_rows(obs, 0, 3), slice_rows(obs, 6, 9));
  for (float v : obs.span()) ASSERT_TRUE(v >= 0.0f && v < 1.0f);
}

TEST(EnvRender, PaperResolutionAndRepeatability) {
  EnvConfig cfg = reach_config();
  cfg.height = cfg.width = 84;
  Env env(cfg, EnvPerturbation::train(), 12);
  EXPECT_EQ(env.reset().shape(), (Shape{9, 84, 84}));
  EXPECT_EQ(env.render(), env.render());
  EXPECT_EQ(env.render(), env.frame());
}

TEST(EnvTrace, CsvHasHeaderAndOneRowPerStep) {
  EnvConfig cfg = reach_config();
  cfg.episode_length = 5;
  Env env(cfg, EnvPerturbation::train(), 13);
  env.reset();
  while (!env.step(Action::discrete(1)).done) {
  }
  const auto path = std::filesystem::temp_directory_path() / "svea_trace.csv";
  write_trace_csv(env.trace(), path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("step,cart_x", 0), 0u);
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 5);
  std::filesystem::remove(path);
}

TEST(EnvConfigCheck, TaskAndSpaceNames) {
  EXPECT_EQ(parse_task("reach_moving"), Task::reach_moving);
  EXPECT_THROW(parse_task("walker"), ConfigError);
  EXPECT_EQ(parse_action_space("continuous"), ActionSpace::continuous);
  EnvConfig cfg;
  EXPECT_EQ(cfg.action_dim(), 3);
  cfg.task = Task::reach;
  EXPECT_EQ(cfg.action_dim(), 9);
  cfg.action_space = ActionSpace::continuous;
  EXPECT_EQ(cfg.action_dim(), 2);
}
