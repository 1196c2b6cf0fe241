// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,2,...] [--work-dir DIR] [--configs DIR] [--fresh]
//
// Long experiments (7-10) keep their run directories under the work dir and
// reuse a seed whose final checkpoint and config.json match the current config.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svea/agent.hpp"
#include "svea/augment.hpp"
#include "svea/commands.hpp"
#include "svea/config.hpp"
#include "svea/csv.hpp"
#include "svea/encoders.hpp"
#include "svea/env.hpp"
#include "svea/errors.hpp"
#include "svea/gradcheck_suite.hpp"
#include "svea/metrics.hpp"
#include "svea/replay_buffer.hpp"
#include "svea/train_loop.hpp"

namespace fs = std::filesystem;
using namespace svea;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string join(const std::vector<double>& v, int precision = 4) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i], precision);
  return out + "]";
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 1099511628211ull;
  return h;
}

std::uint64_t store_hash(const ParamStore& s, std::uint64_t h) {
  for (std::size_t i = 0; i < s.size(); ++i)
    h = fnv1a(s.value(i).data(), static_cast<std::size_t>(s.value(i).numel()) * sizeof(float), h);
  return h;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Tensor random_obs(Rng& rng, std::int64_t c, std::int64_t h, std::int64_t w) {
  Tensor t(Shape{c, h, w});
  for (auto& v : t.span()) v = static_cast<float>(uniform(rng, 0.0, 0.999));
  return t;
}

// ---------------------------------------------------------------- 1

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const auto cases = gradcheck_suite(2024);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name, failed;
  bool cnn = false, vit = false;
  for (const auto& c : cases) {
    if (c.report.max_rel_error >= worst) {
      worst = c.report.max_rel_error;
      worst_name = c.name;
    }
    if (!c.passed()) failed += " " + c.name;
    cnn = cnn || c.name.find("cnn") != std::string::npos;
    vit = vit || c.name.find("vit") != std::string::npos;
  }
  Outcome o;
  o.pass = failed.empty() && cnn && vit && cases.size() >= 12 && secs < 300.0;
  o.detail = std::to_string(cases.size()) + " cases, max rel error " + fmt(worst, 3) + " (" + worst_name + "), " +
             fmt(secs, 3) + " s" + (failed.empty() ? "" : ", failed:" + failed);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome objective_equivalence() {
  const auto t0 = Clock::now();
  const std::vector<AugKind> kinds{AugKind::shift, AugKind::conv, AugKind::overlay, AugKind::cutout,
                                   AugKind::blur, AugKind::affine_jitter, AugKind::rotation};
  Rng draw = make_stream(77, "acceptance:equivalence");
  double worst = 0.0;
  for (int d = 0; d < 100; ++d) {
    LearnerConfig cfg;
    const bool sac = d % 2 == 1;
    cfg.algorithm = sac ? Algorithm::sac : Algorithm::dqn;
    cfg.action_space = sac ? ActionSpace::continuous : ActionSpace::discrete;
    cfg.action_dim = uniform_int(draw, sac ? 1 : 2, 4);
    cfg.hidden = uniform_int(draw, 8, 32);
    cfg.head_layers = uniform_int(draw, 1, 3);
    cfg.encoder = EncoderConfig::desk_cnn();
    cfg.encoder.height = cfg.encoder.width = 16;
    cfg.encoder.filters = uniform_int(draw, 4, 12);
    cfg.encoder.strides = d % 3 == 0 ? std::vector<int>{2} : std::vector<int>{2, 1};
    cfg.encoder.feature_dim = uniform_int(draw, 8, 24);
    cfg.strong = AugmentationSpec::of(kinds[static_cast<std::size_t>(d) % kinds.size()]);
    Agent agent(cfg, static_cast<std::uint64_t>(1000 + d));

    const int n = uniform_int(draw, 2, 8);
    Batch b;
    b.obs = Tensor(Shape{n, 9, 16, 16});
    b.next_obs = Tensor(b.obs.shape());
    for (auto& v : b.obs.span()) v = static_cast<float>(uniform(draw, 0.0, 0.999));
    for (auto& v : b.next_obs.span()) v = static_cast<float>(uniform(draw, 0.0, 0.999));
    b.rewards = Tensor(Shape{n});
    for (auto& v : b.rewards.span()) v = static_cast<float>(uniform(draw, -1.0, 1.0));
    b.not_done = Tensor(Shape{n}, 1.0f);
    b.continuous_actions = Tensor(Shape{n, cfg.action_dim});
    for (auto& v : b.continuous_actions.span()) v = static_cast<float>(uniform(draw, -1.0, 1.0));
    for (int i = 0; i < n; ++i) b.actions.push_back(uniform_int(draw, 0, cfg.action_dim - 1));

    const Tensor targets = agent.compute_q_target(b.rewards, b.not_done, b.next_obs);
    const Tensor aug = augment_batch(b.obs, cfg.strong, draw);
    const ActionBatch actions = ActionBatch::of(b);
    Tape t1, t2;
    const double two = agent.svea_loss(t1, b.obs, aug, actions, targets, 0.5, 0.5).value().item();
    const double mixed = agent.svea_loss_batched(t2, b.obs, aug, actions, targets, 0.5, 0.5).value().item();
    worst = std::max(worst, std::abs(mixed - two) / std::abs(two));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 60.0, "100 draws, max relative difference " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------- 3

Outcome pitfall_separation() {
  const auto t0 = Clock::now();
  RunConfig rc = default_run_config();
  rc.train.learner.algorithm = Algorithm::dqn;
  rc.resolve();
  const EnvConfig& env_cfg = rc.train.env;
  Agent agent(rc.train.learner, 31);

  ReplayBuffer buffer(256, env_cfg.frame_stack, env_cfg.height, env_cfg.width, env_cfg.action_dim(), 31);
  Env env(env_cfg, EnvPerturbation::train(), 31);
  Rng act = make_stream(31, "acceptance:actions");
  env.reset();
  while (buffer.size() < 64) {
    const auto obs = env.observation_bytes();
    const Action a = Action::discrete(uniform_int(act, 0, env_cfg.action_dim() - 1));
    const StepResult r = env.step(a);
    buffer.add(obs, a, r.reward, env.observation_bytes(), false);
    if (r.done) env.reset();
  }
  std::vector<int> slots(64);
  for (int i = 0; i < 64; ++i) slots[static_cast<std::size_t>(i)] = i;
  const Batch batch = buffer.gather(slots);
  const AugmentationSpec conv = AugmentationSpec::of(AugKind::conv);
  Rng rng_svea = make_stream(31, "acceptance:svea"), rng_naive = make_stream(31, "acceptance:naive");
  const double v_svea = q_target_variance(agent, batch, conv, TargetStyle::svea, 16, rng_svea);
  const double v_naive = q_target_variance(agent, batch, conv, TargetStyle::naive, 16, rng_naive);
  const double secs = seconds_since(t0);
  return {v_svea == 0.0 && v_naive > 0.0 && secs < 60.0,
          "svea variance " + fmt(v_svea) + ", naive variance " + fmt(v_naive, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------- 4

Outcome ema_law() {
  double worst = 0.0;
  bool ok = true;
  for (double zeta : {0.01, 0.05, 1.0}) {
    ParamStore psi, theta;
    psi.add("encoder.w", Tensor(Shape{1}, {-2.0f}));
    psi.add("q.w", Tensor(Shape{1}, {0.75f}));
    theta.add("encoder.w", Tensor(Shape{1}, {1.0f}));
    theta.add("q.w", Tensor(Shape{1}, {-0.5f}));
    const double d0[2] = {3.0, 1.25};
    for (int n = 1; n <= 100; ++n) {
      ema_update(psi, theta, zeta, zeta);
      for (int i = 0; i < 2; ++i) {
        const double expected = std::pow(1.0 - zeta, n) * d0[i];
        const double got = std::abs(static_cast<double>(psi.value(static_cast<std::size_t>(i))[0]) -
                                    static_cast<double>(theta.value(static_cast<std::size_t>(i))[0]));
        // each step rounds psi (|psi| <= 2) a few float ulps
        const double tol = zeta == 1.0 ? 0.0 : 4.0 * 2.0 * 1.2e-7 * n;
        worst = std::max(worst, std::abs(got - expected));
        ok = ok && std::abs(got - expected) <= tol;
      }
    }
  }
  return {ok, "max |error| " + fmt(worst, 3) + " over n <= 100, zeta in {0.01, 0.05, 1}"};
}

// ---------------------------------------------------------------- 5

Tensor pattern6() {
  Tensor t(Shape{3, 6, 6});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) t[(c * 6 + y) * 6 + x] = static_cast<float>(10 * y + x) / 64.0f;
  return t;
}

// Edge-replicated padded canvas, cropped at the displaced window.
Tensor pad_crop_shift(const Tensor& obs, int dx, int dy, int radius) {
  const int c = static_cast<int>(obs.dim(0)), h = static_cast<int>(obs.dim(1)), w = static_cast<int>(obs.dim(2));
  const int ph = h + 2 * radius, pw = w + 2 * radius;
  std::vector<float> padded(static_cast<std::size_t>(c) * ph * pw);
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) {
        const int sy = std::clamp(y - radius, 0, h - 1), sx = std::clamp(x - radius, 0, w - 1);
        padded[(static_cast<std::size_t>(k) * ph + y) * pw + x] = obs[(k * h + sy) * w + sx];
      }
  Tensor out(obs.shape());
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(k * h + y) * w + x] = padded[(static_cast<std::size_t>(k) * ph + y + radius - dy) * pw + x + radius - dx];
  return out;
}

AugParams identity_params(AugKind kind) {
  switch (kind) {
    case AugKind::shift: return AugParams::shift(0, 0);
    case AugKind::overlay: return AugParams::overlay(0.0, 0, 1);
    case AugKind::cutout: return AugParams::cutout(0.5, 0.5, 0.0, 0.0);
    case AugKind::affine_jitter: return AugParams::affine({1.0, 0.0, 0.0, 1.0}, 0.0, 0.0);
    case AugKind::rotation: return AugParams::rotation(0.0);
    default: return AugParams{};
  }
}

Outcome augmentation_suite() {
  std::vector<std::string> failures;
  const Tensor p = pattern6();
  const Tensor shifted = apply(p, AugParams::shift(2, 0));
  const float row0[] = {0, 0, 0, 1, 2, 3};
  bool oracle = true;
  for (int x = 0; x < 6; ++x) oracle = oracle && shifted[x] == row0[x] / 64.0f;
  for (int dy = -4; dy <= 4; ++dy)
    for (int dx = -4; dx <= 4; ++dx) oracle = oracle && apply(p, AugParams::shift(dx, dy)) == pad_crop_shift(p, dx, dy, 4);
  if (!oracle) failures.push_back("shift oracle");

  int checked = 0;
  for (AugKind kind : all_aug_kinds()) {
    const AugmentationSpec spec = AugmentationSpec::of(kind);
    Rng data = make_stream(5, "acceptance:obs:" + to_string(kind));
    Rng a = make_stream(5, "acceptance:aug:" + to_string(kind)), b = make_stream(5, "acceptance:aug:" + to_string(kind));
    bool range = true, shape = true, determinism = true, identity = true, temporal = true;
    for (int i = 0; i < 1000; ++i) {
      const Tensor obs = random_obs(data, 9, 12, 12);
      const AugParams pa = sample_params(spec, a), pb = sample_params(spec, b);
      const Tensor out = apply(obs, pa);
      shape = shape && out.shape() == obs.shape();
      for (float v : out.span()) range = range && v >= 0.0f && v < 1.0f;
      determinism = determinism && out == apply(obs, pa) && out == apply(obs, pb);
      if (i % 50 == 0)
        for (int f = 0; f < 3; ++f)
          temporal = temporal && slice_rows(out, 3 * f, 3 * f + 3) == apply(slice_rows(obs, 3 * f, 3 * f + 3), pa);
      // random conv squashes through a sigmoid and has no identity parameters
      if (kind != AugKind::blur && kind != AugKind::conv) identity = identity && apply(obs, identity_params(kind)) == obs;
      ++checked;
    }
    if (kind == AugKind::blur) {
      // sigma -> 0 collapses the kernel onto the center tap
      Rng d2 = make_stream(5, "acceptance:blur");
      for (int i = 0; i < 100; ++i) {
        const Tensor obs = random_obs(d2, 9, 12, 12);
        const Tensor out = apply(obs, AugParams::blur(1e-3));
        for (std::int64_t k = 0; k < obs.numel(); ++k) identity = identity && std::abs(out[k] - obs[k]) <= 6e-8f;
      }
    }
    const std::string name = to_string(kind);
    if (!range) failures.push_back(name + " range");
    if (!shape) failures.push_back(name + " shape");
    if (!determinism) failures.push_back(name + " determinism");
    if (!identity) failures.push_back(name + " identity");
    if (!temporal) failures.push_back(name + " temporal consistency");
  }
  std::string detail = std::to_string(all_aug_kinds().size()) + " operators x 1000 observations (" +
                       std::to_string(checked) + " checks), 6x6 shift oracle " + (oracle ? "bit-exact" : "MISMATCH");
  for (const auto& f : failures) detail += "; failed " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- 6

std::vector<std::uint64_t> trajectory(UpdateMode mode) {
  RunConfig rc = default_run_config();
  rc.train.env.task = Task::reach;
  rc.train.learner.mode = mode;
  rc.train.learner.strong = AugmentationSpec::of(AugKind::none);
  rc.train.batch_size = 16;
  rc.train.seed_steps = 100;
  rc.train.env_steps = 4 * (100 + 200);
  rc.train.eval_every = 0;
  rc.train.log_every = 400;
  rc.resolve();
  std::vector<std::uint64_t> hashes;
  RunIdentity id;
  id.seed = 6;
  train_loop(rc.train, id, [&](const Agent& agent, const UpdateStats& stats) {
    std::uint64_t h = store_hash(agent.critic(), 1469598103934665603ull);
    h = store_hash(agent.target(), h);
    hashes.push_back(fnv1a(&stats.critic_loss, sizeof(double), h));
  });
  return hashes;
}

Outcome degenerate_collapse() {
  const auto svea = trajectory(UpdateMode::svea);
  const auto plain = trajectory(UpdateMode::plain);
  std::size_t first_diff = std::min(svea.size(), plain.size());
  for (std::size_t i = 0; i < std::min(svea.size(), plain.size()); ++i)
    if (svea[i] != plain[i]) {
      first_diff = i;
      break;
    }
  const bool same = svea.size() == plain.size() && first_diff == svea.size();
  return {same && svea.size() >= 200,
          std::to_string(svea.size()) + " svea / " + std::to_string(plain.size()) + " plain updates, " +
              (same ? "parameters bit-identical after every update"
                    : "first difference at update " + std::to_string(first_diff))};
}

// ---------------------------------------------------------------- 11

Outcome determinism(const fs::path& work) {
  RunConfig rc = default_run_config();
  rc.name = "determinism";
  rc.train.env.task = Task::reach;
  rc.train.env.height = rc.train.env.width = 32;
  rc.train.env_steps = 2000;
  rc.train.eval_every = 1000;
  rc.train.eval_episodes = 2;
  rc.train.eval_perturbations = {"train", "color_hard"};
  rc.train.seed_steps = 100;
  rc.train.batch_size = 16;
  rc.train.log_every = 500;
  rc.train.diagnostic_batch = 16;
  rc.seeds = {3};
  std::vector<std::string> bytes;
  for (const char* run : {"a", "b"}) {
    rc.out_dir = work / "determinism" / run;
    fs::remove_all(rc.out_dir);
    rc.resolve();
    cmd_train(rc);
    bytes.push_back(read_file(rc.out_dir / "seed_3" / "metrics.csv"));
  }
  const bool same = bytes[0] == bytes[1] && !bytes[0].empty();
  return {same, "two cmd_train runs, metrics.csv " + std::to_string(bytes[0].size()) + " bytes, " +
                    (same ? "byte-identical" : "DIFFERENT")};
}

// ---------------------------------------------------------------- 7-10

struct SeedRun {
  fs::path dir;
  double seconds = 0.0;
  bool reused = false;
};

fs::path final_checkpoint(const fs::path& seed_dir, std::int64_t steps) {
  return seed_dir / "checkpoints" / ("step_" + std::to_string(steps) + ".bin");
}

// Trains (or reuses) one seed; wall time goes to runtime_seconds.txt.
SeedRun train_seed(RunConfig rc, std::uint64_t seed, bool fresh) {
  rc.seeds = {seed};
  rc.resolve();
  SeedRun run;
  run.dir = rc.out_dir / ("seed_" + std::to_string(seed));
  const fs::path timing = run.dir / "runtime_seconds.txt";
  if (!fresh && fs::exists(final_checkpoint(run.dir, rc.train.env_steps)) && fs::exists(timing) &&
      read_file(run.dir / "config.json") == resolved_config_text(rc)) {
    std::ifstream(timing) >> run.seconds;
    run.reused = true;
    return run;
  }
  fs::remove_all(run.dir);
  std::cout << "  training " << rc.name << " seed " << seed << " ..." << std::flush;
  const auto t0 = Clock::now();
  cmd_train(rc);
  run.seconds = seconds_since(t0);
  std::ofstream(timing) << run.seconds << "\n";
  std::cout << " " << fmt(run.seconds, 4) << " s\n";
  return run;
}

// Mean of the last `k` training-episode returns logged in metrics.csv.
double final_train_return(const fs::path& seed_dir, int k) {
  std::vector<double> returns;
  for (const auto& r : read_metrics_csv(seed_dir / "metrics.csv"))
    if (r.metric == "train_return") returns.push_back(r.value);
  if (returns.empty()) throw IoError("no train_return rows in " + (seed_dir / "metrics.csv").string());
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), returns.size());
  double total = 0.0;
  for (std::size_t i = returns.size() - n; i < returns.size(); ++i) total += returns[i];
  return total / static_cast<double>(n);
}

// perturbation -> (eval_return, eval_success) of the final checkpoint.
std::map<std::string, std::pair<double, double>> evaluate_seed(const fs::path& seed_dir,
                                                               const std::vector<std::string>& suite, int episodes) {
  EvalOptions o;
  o.run_dir = seed_dir;
  o.suite = suite;
  o.episodes = episodes;
  o.eval_seed = 9001;
  o.out = seed_dir / "acceptance_eval.csv";
  cmd_eval(o);
  std::map<std::string, std::pair<double, double>> out;
  for (const auto& r : read_metrics_csv(o.out)) {
    if (r.metric == "eval_return") out[r.perturbation].first = r.value;
    if (r.metric == "eval_success") out[r.perturbation].second = r.value;
  }
  return out;
}

struct ModeResults {
  std::vector<double> train_return;
  std::map<std::string, std::vector<double>> eval_return;
  std::vector<double> seconds;
};

const std::vector<std::string> kIntensities{"intensity_0", "intensity_0.1", "intensity_0.2", "intensity_0.3",
                                            "intensity_0.5"};

struct CartpoleStudy {
  std::map<std::string, ModeResults> modes;
};

CartpoleStudy run_cartpole(const fs::path& configs, const fs::path& work, bool fresh) {
  CartpoleStudy study;
  const RunConfig base = load_run_config(configs / "accept_cartpole.json");
  std::vector<std::string> suite{"train", "color_hard"};
  suite.insert(suite.end(), kIntensities.begin(), kIntensities.end());
  for (const char* mode : {"plain", "svea", "naive"}) {
    RunConfig rc = base;
    rc.name = mode;
    rc.train.learner.mode = parse_update_mode(mode);
    rc.out_dir = work / "cartpole" / mode;
    ModeResults& m = study.modes[mode];
    for (std::uint64_t seed : base.seeds) {
      const SeedRun run = train_seed(rc, seed, fresh);
      m.seconds.push_back(run.seconds);
      m.train_return.push_back(final_train_return(run.dir, 10));
      for (const auto& [name, value] : evaluate_seed(run.dir, suite, 10)) m.eval_return[name].push_back(value.first);
    }
  }
  return study;
}

Outcome stability(const CartpoleStudy& s) {
  const auto& plain = s.modes.at("plain");
  const auto& svea = s.modes.at("svea");
  const auto& naive = s.modes.at("naive");
  const double mp = median(plain.train_return), ms = median(svea.train_return), mn = median(naive.train_return);
  double slowest = 0.0;
  for (const auto& [name, m] : s.modes)
    for (double t : m.seconds) slowest = std::max(slowest, t);
  const bool pass = ms >= 0.8 * mp && mn <= ms && slowest <= 7200.0;
  return {pass, "median train return svea " + fmt(ms) + " vs plain " + fmt(mp) + " (ratio " + fmt(ms / mp, 3) +
                    "), naive " + fmt(mn) + "; slowest seed " + fmt(slowest, 4) + " s; svea " + join(svea.train_return) +
                    " plain " + join(plain.train_return) + " naive " + join(naive.train_return)};
}

Outcome generalization(const CartpoleStudy& s) {
  const auto& plain = s.modes.at("plain").eval_return.at("color_hard");
  const auto& svea = s.modes.at("svea").eval_return.at("color_hard");
  const double mp = median(plain), ms = median(svea);
  return {ms > mp, "color_hard median test return svea " + fmt(ms) + " vs plain " + fmt(mp) + "; svea " + join(svea) +
                       " plain " + join(plain)};
}

Outcome intensity(const CartpoleStudy& s) {
  std::vector<double> svea, naive;
  for (const auto& name : kIntensities) {
    svea.push_back(median(s.modes.at("svea").eval_return.at(name)));
    naive.push_back(median(s.modes.at("naive").eval_return.at(name)));
  }
  int inversions = 0;
  bool small = true;
  for (std::size_t i = 1; i < svea.size(); ++i)
    if (svea[i] > svea[i - 1]) {
      ++inversions;
      small = small && svea[i] - svea[i - 1] <= 0.05 * svea[0];
    }
  bool dominates = true;
  for (std::size_t i = 0; i < svea.size(); ++i) dominates = dominates && svea[i] >= naive[i];
  return {inversions <= 1 && small && dominates,
          "I = {0, 0.1, 0.2, 0.3, 0.5}: svea " + join(svea) + ", naive " + join(naive) + "; " +
              std::to_string(inversions) + " inversion(s)" + (small ? "" : " above 5%") +
              (dominates ? ", svea >= naive everywhere" : ", svea below naive somewhere")};
}

Outcome vit_path(const fs::path& configs, const fs::path& work, bool fresh) {
  const std::int64_t paper = param_count(EncoderConfig::paper_vit());
  RunConfig rc = load_run_config(configs / "accept_reach_vit.json");
  rc.out_dir = work / "reach_vit";
  std::vector<double> success, seconds;
  for (std::uint64_t seed : rc.seeds) {
    const SeedRun run = train_seed(rc, seed, fresh);
    seconds.push_back(run.seconds);
    success.push_back(evaluate_seed(run.dir, {"train"}, 20).at("train").second);
  }
  const double m = median(success);
  return {m >= 0.7 && paper == 489600,
          "desk ViT svea+conv on reach, " + std::to_string(rc.train.env_steps) + " steps: median success " + fmt(m, 3) +
              " " + join(success, 3) + "; paper ViT param_count " + std::to_string(paper) + "; seconds " +
              join(seconds, 4)};
}

void report(int id, const std::string& title, const std::function<Outcome()>& body, int& failures) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << title << ": " << o.detail << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string only;
  std::string work = "acceptance_runs";
  std::string configs = SVEA_CONFIG_DIR;
  bool fresh = false;
  app.add_option("--only", only, "comma-separated criterion ids (default: all)");
  app.add_option("--work-dir", work, "directory for experiment runs");
  app.add_option("--configs", configs, "directory holding accept_*.json");
  app.add_flag("--fresh", fresh, "retrain even when matching runs exist");
  CLI11_PARSE(app, argc, argv);

  std::set<int> ids;
  if (only.empty()) {
    for (int i = 1; i <= 11; ++i) ids.insert(i);
  } else {
    std::stringstream s(only);
    for (std::string tok; std::getline(s, tok, ',');) ids.insert(std::stoi(tok));
  }
  const fs::path work_dir(work);
  fs::create_directories(work_dir);

  int failures = 0;
  auto want = [&](int i) { return ids.count(i) > 0; };
  if (want(1)) report(1, "gradient oracle", gradient_oracle, failures);
  if (want(2)) report(2, "objective equivalence", objective_equivalence, failures);
  if (want(3)) report(3, "target variance separation", pitfall_separation, failures);
  if (want(4)) report(4, "EMA law", ema_law, failures);
  if (want(5)) report(5, "augmentation suite", augmentation_suite, failures);
  if (want(6)) report(6, "degenerate collapse", degenerate_collapse, failures);

  if (want(7) || want(8) || want(9)) {
    CartpoleStudy study;
    std::string error;
    try {
      study = run_cartpole(configs, work_dir, fresh);
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto guarded = [&](Outcome (*f)(const CartpoleStudy&)) {
      return [&, f]() -> Outcome {
        if (!error.empty()) return {false, "cartpole study failed: " + error};
        return f(study);
      };
    };
    if (want(7)) report(7, "directional stability", guarded(stability), failures);
    if (want(8)) report(8, "directional generalization", guarded(generalization), failures);
    if (want(9)) report(9, "intensity degradation", guarded(intensity), failures);
  }
  if (want(10)) report(10, "ViT path", [&] { return vit_path(configs, work_dir, fresh); }, failures);
  if (want(11)) report(11, "determinism", [&] { return determinism(work_dir); }, failures);

  std::cout << (failures == 0 ? "all selected criteria passed" : std::to_string(failures) + " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
