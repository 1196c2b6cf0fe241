#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "svea/checkpoint.hpp"
#include "svea/commands.hpp"
#include "svea/config.hpp"
#include "svea/csv.hpp"
#include "svea/svg.hpp"

using namespace svea;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("svea_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 100 agent steps on 32x32 reach with a small network.
std::string tiny_config_text(const std::string& name = "tiny", const std::string& mode = "svea") {
  return R"({
  "schema_version": 1,
  "name": ")" + name + R"(",
  "task": "reach",
  "mode": ")" + mode + R"(",
  "augmentation": "conv",
  "env_steps": 400,
  "eval_every": 200,
  "eval_episodes": 1,
  "perturbations": ["train", "color_hard"],
  "env": {"height": 32, "width": 32, "episode_length": 20},
  "learner": {"hidden": 32},
  "training": {"batch_size": 8, "seed_steps": 40, "log_every": 100, "diagnostic_batch": 8, "buffer_capacity": 200}
})";
}

RunConfig tiny_config(const fs::path& out, const std::string& name = "tiny", const std::string& mode = "svea") {
  RunConfig cfg = parse_run_config(tiny_config_text(name, mode));
  cfg.out_dir = out;
  return cfg;
}

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsInResolvedSnapshot) {
  const RunConfig cfg = parse_run_config(R"({"schema_version": 1})");
  const auto j = nlohmann::json::parse(resolved_config_text(cfg));
  EXPECT_EQ(j["alpha"], 0.5);
  EXPECT_EQ(j["beta"], 0.5);
  EXPECT_EQ(j["training"]["batch_size"], 128);
  EXPECT_EQ(j["learner"]["gamma"], 0.99);
  EXPECT_EQ(j["learner"]["tau_encoder"], 0.05);
  EXPECT_EQ(j["learner"]["tau_critic"], 0.01);
  EXPECT_EQ(j["env"]["action_repeat"], 4);
  EXPECT_EQ(j["augmentation"]["kind"], "conv");
  EXPECT_EQ(j["schema_version"], kConfigSchemaVersion);
}

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
  EXPECT_NE(error_of(R"({"schema_version": 1, "learner": {"lrr": 0.1}})").find("learner.lrr"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "seed": [1]})").find("seed"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "augmentation": {"kind": "conv", "radius": 2}})").find("augmentation.radius"),
            std::string::npos);
}

TEST(Config, WrongTypesAndValuesNameTheField) {
  EXPECT_NE(error_of(R"({"schema_version": 1, "alpha": "half"})").find("alpha"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "training": {"batch_size": 1.5}})").find("training.batch_size"),
            std::string::npos);
  EXPECT_FALSE(error_of(R"({"schema_version": 1, "task": "walker"})").empty());
  EXPECT_FALSE(error_of(R"({"schema_version": 1, "alpha": 0, "beta": 0})").empty());
}

TEST(Config, SyntaxErrorsGiveLineAndColumn) {
  const std::string msg = error_of("{\n  \"schema_version\": 1,\n  \"alpha\": ,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, SchemaVersionIsRequiredAndChecked) {
  EXPECT_NE(error_of(R"({"name": "x"})").find("schema_version"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 2})").find("schema_version"), std::string::npos);
}

TEST(Config, SnapshotRoundTripsToSameHash) {
  const RunConfig cfg = tiny_config("unused");
  const RunConfig again = parse_run_config(resolved_config_text(cfg));
  EXPECT_EQ(config_hash(again), config_hash(cfg));
  EXPECT_EQ(resolved_config_text(again), resolved_config_text(cfg));
}

TEST(Config, HashIgnoresSeedsAndOutputButNotLearning) {
  RunConfig a = tiny_config("a");
  RunConfig b = a;
  b.seeds = {4, 5};
  b.out_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.train.learner.alpha = 0.25;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
}

TEST(Config, TaskChoiceSetsItsOwnEpisodeLength) {
  RunConfig cfg = parse_run_config(R"({"schema_version": 1, "task": "reach"})");
  EXPECT_EQ(cfg.train.env.episode_length, 50);
  cfg = parse_run_config(R"({"schema_version": 1, "task": "reach", "env": {"episode_length": 30}})");
  EXPECT_EQ(cfg.train.env.episode_length, 30);
  cfg = default_run_config();
  cfg.train.env.task = Task::push;
  cfg.resolve();
  EXPECT_EQ(cfg.train.env.episode_length, 50);
  EXPECT_EQ(cfg.train.env.action_repeat, 4);
}

TEST(Config, OverridesReplaceFields) {
  RunConfig cfg = default_run_config();
  ConfigOverrides o;
  o.seeds = std::vector<std::uint64_t>{1, 2, 3};
  o.steps = 1234;
  o.encoder = "desk_vit";
  o.aug = "overlay";
  o.alpha = 0.7;
  o.algorithm = "sac";
  apply_overrides(cfg, o);
  EXPECT_EQ(cfg.seeds.size(), 3u);
  EXPECT_EQ(cfg.train.env_steps, 1234);
  EXPECT_EQ(cfg.train.learner.encoder.kind, EncoderKind::vit);
  EXPECT_EQ(cfg.train.learner.strong.kind, AugKind::overlay);
  EXPECT_EQ(cfg.train.learner.alpha, 0.7);
  EXPECT_EQ(cfg.train.learner.action_space, ActionSpace::continuous);
  EXPECT_EQ(cfg.train.env.action_space, ActionSpace::continuous);
}

TEST(Config, VitProfileFollowsEnvironmentGeometry) {
  RunConfig cfg = parse_run_config(R"({"schema_version": 1, "encoder": "desk_vit", "env": {"height": 32, "width": 32}})");
  EXPECT_EQ(cfg.train.learner.encoder.tokens(), 16);
  EXPECT_EQ(cfg.train.learner.encoder.height, 32);
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("1,2,3"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(parse_seed_list("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_THROW(parse_seed_list("1,,2"), ConfigError);
  EXPECT_THROW(parse_seed_list("a"), ConfigError);
  EXPECT_THROW(parse_seed_list(""), ConfigError);
}

TEST(Train, SeedListMakesOneDirectoryPerSeed) {
  const fs::path out = scratch("seeds");
  RunConfig cfg = tiny_config(out);
  cfg.seeds = {1, 2, 3};
  const auto dirs = cmd_train(cfg);
  ASSERT_EQ(dirs.size(), 3u);
  for (std::uint64_t s : {1, 2, 3}) {
    const fs::path d = out / ("seed_" + std::to_string(s));
    EXPECT_TRUE(fs::exists(d / "config.json"));
    EXPECT_TRUE(fs::exists(d / "metrics.csv"));
    EXPECT_TRUE(fs::exists(d / "checkpoints" / "step_400.bin"));
    EXPECT_TRUE(fs::exists(d / "plots" / "returns.svg"));
    const RunConfig snap = load_run_config(d / "config.json");
    EXPECT_EQ(snap.seeds, (std::vector<std::uint64_t>{s}));
  }
  const auto records = read_metrics_csv(out / "seed_1" / "metrics.csv");
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.metric);
  for (const char* m : {"train_return", "critic_loss", "eval_return", "eval_success", "q_target_variance_naive",
                        "q_target_variance_svea", "q_gap", "epsilon", "updates"})
    EXPECT_TRUE(names.count(m)) << m;
  for (const auto& r : records)
    if (r.metric == "q_target_variance_svea") EXPECT_EQ(r.value, 0.0);
  fs::remove_all(out);
}

TEST(Train, RerunIsByteIdentical) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  cmd_train(tiny_config(a));
  cmd_train(tiny_config(b));
  EXPECT_EQ(slurp(a / "seed_1" / "metrics.csv"), slurp(b / "seed_1" / "metrics.csv"));
  EXPECT_EQ(slurp(a / "seed_1" / "checkpoints" / "step_400.bin"), slurp(b / "seed_1" / "checkpoints" / "step_400.bin"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Train, ParallelWorkersMatchSerialRun) {
  const fs::path a = scratch("par_a"), b = scratch("par_b");
  RunConfig cfg = tiny_config(a);
  cfg.seeds = {1, 2};
  cmd_train(cfg);
  setenv("SVEA_LAB_THREADS", "2", 1);
  EXPECT_EQ(worker_threads(), 2);
  cfg.out_dir = b;
  cmd_train(cfg);
  unsetenv("SVEA_LAB_THREADS");
  for (const char* s : {"seed_1", "seed_2"}) EXPECT_EQ(slurp(a / s / "metrics.csv"), slurp(b / s / "metrics.csv")) << s;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Train, InvalidThreadCountIsConfigError) {
  setenv("SVEA_LAB_THREADS", "zero", 1);
  EXPECT_THROW(worker_threads(), ConfigError);
  unsetenv("SVEA_LAB_THREADS");
  EXPECT_EQ(worker_threads(), 1);
}

TEST(Train, DivergenceLeavesFailureReport) {
  const fs::path out = scratch("fail");
  RunConfig cfg = tiny_config(out);
  cfg.train.learner.adam.lr = 1e30;
  EXPECT_THROW(cmd_train(cfg), NumericError);
  const fs::path d = out / "seed_1";
  ASSERT_TRUE(fs::exists(d / "failure.json"));
  const auto j = nlohmann::json::parse(slurp(d / "failure.json"));
  EXPECT_EQ(j["seed"], 1);
  EXPECT_EQ(j["config_hash"], hash_hex(config_hash(cfg)));
  EXPECT_TRUE(fs::exists(d / "config.json"));
  EXPECT_TRUE(fs::exists(d / "metrics.csv"));
  fs::remove_all(out);
}

TEST(Train, ZeroUpdateRunLogsOnlyRolloutStatistics) {
  RunConfig cfg = tiny_config("unused");
  cfg.train.seed_steps = 1000;
  cfg.train.eval_every = 0;
  cfg.train.diagnostics = false;
  const RunResult r = train_loop(cfg.train, RunIdentity{"smoke", 1, 0, {}});
  EXPECT_EQ(r.updates, 0);
  EXPECT_EQ(r.episode_returns.size(), 5u);
  for (const auto& rec : r.records)
    EXPECT_TRUE(rec.metric == "train_return" || rec.metric == "train_success" || rec.metric == "epsilon" ||
                rec.metric == "updates")
        << rec.metric;
}

TEST(Train, UpdatesStartAfterSeedSteps) {
  RunConfig cfg = tiny_config("unused");
  cfg.train.eval_every = 0;
  std::int64_t calls = 0;
  const RunResult r = train_loop(cfg.train, RunIdentity{"hook", 1, 0, {}},
                                 [&](const Agent&, const UpdateStats&) { ++calls; });
  EXPECT_EQ(calls, 100 - 40);
  EXPECT_EQ(r.updates, calls);
  EXPECT_EQ(r.env_steps, 400);
}

TEST(Eval, SuiteRowsAndEmptySuite) {
  const fs::path out = scratch("eval");
  cmd_train(tiny_config(out));
  const fs::path run = out / "seed_1";

  EvalOptions full{run, {}, default_eval_suite(), 1, 3, out / "full.csv"};
  const auto rows = read_metrics_csv(cmd_eval(full));
  EXPECT_EQ(rows.size(), 2 * default_eval_suite().size());

  EvalOptions empty{run, {}, {}, 1, 3, out / "empty.csv"};
  const CsvTable t = read_csv(cmd_eval(empty));
  EXPECT_EQ(t.header, metrics_header());
  EXPECT_TRUE(t.rows.empty());

  EvalOptions zero{run, {}, {"intensity_0"}, 2, 3, out / "zero.csv"};
  EvalOptions train{run, {}, {"train"}, 2, 3, out / "train.csv"};
  const auto z = read_metrics_csv(cmd_eval(zero));
  const auto tr = read_metrics_csv(cmd_eval(train));
  ASSERT_EQ(z.size(), tr.size());
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z[i].value, tr[i].value);
  fs::remove_all(out);
}

TEST(Eval, RefusesCheckpointFromAnotherConfig) {
  const fs::path out = scratch("eval_hash");
  const RunConfig cfg = tiny_config(out);
  cmd_train(cfg);
  const fs::path run = out / "seed_1";
  RunConfig changed = load_run_config(run / "config.json");
  changed.train.learner.alpha = 0.25;
  changed.train.learner.beta = 0.25;
  {
    std::ofstream f(run / "config.json");
    f << resolved_config_text(changed);
  }
  try {
    cmd_eval(EvalOptions{run, {}, {"train"}, 1, 0, {}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(hash_hex(config_hash(cfg))), std::string::npos) << msg;
    EXPECT_NE(msg.find(hash_hex(config_hash(changed))), std::string::npos) << msg;
  }
  fs::remove_all(out);
}

TEST(Compare, SummariesPlotsAndDifferences) {
  const fs::path out = scratch("compare");
  RunConfig a = tiny_config(out / "svea", "svea_conv", "svea");
  RunConfig b = tiny_config(out / "naive", "naive_conv", "naive");
  cmd_train(a);
  cmd_train(b);
  const fs::path summary = cmd_compare({out / "svea", out / "naive"}, out / "cmp");
  const CsvTable t = read_csv(summary);
  ASSERT_FALSE(t.rows.empty());
  const auto group = t.column("group"), med = t.column("median"), q25 = t.column("q25"), q75 = t.column("q75"),
             diff = t.column("median_minus_first");
  bool saw_naive = false;
  for (const auto& row : t.rows) {
    EXPECT_EQ(row[med], row[q25]);  // single seed: the band collapses to the line
    EXPECT_EQ(row[med], row[q75]);
    if (row[group] == "svea_conv") EXPECT_EQ(std::stod(row[diff]), 0.0);
    saw_naive = saw_naive || row[group] == "naive_conv";
  }
  EXPECT_TRUE(saw_naive);
  EXPECT_TRUE(fs::exists(out / "cmp" / "plots" / "eval_return.svg"));
  EXPECT_TRUE(fs::exists(out / "cmp" / "plots" / "train_return.svg"));

  // identical runs: zero difference everywhere, and output is a pure function of the inputs
  const fs::path same = cmd_compare({out / "svea", out / "svea"}, out / "same");
  const CsvTable s = read_csv(same);
  for (const auto& row : s.rows) EXPECT_EQ(std::stod(row[s.column("median_minus_first")]), 0.0);
  cmd_compare({out / "svea", out / "svea"}, out / "same2");
  EXPECT_EQ(slurp(same), slurp(out / "same2" / "summary.csv"));
  fs::remove_all(out);
}

TEST(Compare, DisjointMetricsAreExplained) {
  const fs::path out = scratch("compare_disjoint");
  for (const char* name : {"one", "two"}) {
    CsvTable t;
    t.header = metrics_header();
    t.rows.push_back(to_row(DiagnosticRecord{name, 4, std::string("metric_") + name, 1.0, "reach", "train", 1}));
    write_csv(out / name / "metrics.csv", t);
  }
  try {
    cmd_compare({out / "one", out / "two"}, out / "cmp");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("metric_one"), std::string::npos) << msg;
    EXPECT_NE(msg.find("metric_two"), std::string::npos) << msg;
  }
  EXPECT_THROW(cmd_compare({out / "one"}, out / "cmp"), UsageError);
  fs::remove_all(out);
}

TEST(RenderAug, EightSheetsWithStableBytes) {
  const fs::path a = scratch("render_a"), b = scratch("render_b");
  const auto files = cmd_render_aug(Task::reach, 6, 4, a);
  ASSERT_EQ(files.size(), 8u);
  for (AugKind kind : all_aug_kinds()) EXPECT_TRUE(fs::exists(a / "augs" / (to_string(kind) + ".ppm")));
  cmd_render_aug(Task::reach, 6, 4, b);
  for (AugKind kind : all_aug_kinds()) {
    const std::string f = "augs/" + to_string(kind) + ".ppm";
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  const fs::path dir = scratch("ckpt");
  RunConfig cfg = tiny_config(dir);
  Agent agent(cfg.train.learner, 3);
  for (std::size_t i = 0; i < agent.critic().size(); ++i) agent.critic().value(i).fill(0.125f);
  save_agent(dir / "a.bin", agent, 42, 100);
  Agent other(cfg.train.learner, 9);
  const CheckpointManifest m = load_agent(dir / "a.bin", other, 42);
  EXPECT_EQ(m.step, 100);
  for (std::size_t i = 0; i < agent.critic().size(); ++i) EXPECT_EQ(other.critic().value(i), agent.critic().value(i));
  EXPECT_EQ(other.target().value(0), agent.target().value(0));
  EXPECT_THROW(load_agent(dir / "a.bin", other, 43), ConfigError);

  std::string bytes = slurp(dir / "a.bin");
  {
    std::ofstream f(dir / "trunc.bin", std::ios::binary);
    f << bytes.substr(0, bytes.size() / 2);
  }
  EXPECT_THROW(read_checkpoint(dir / "trunc.bin"), IoError);
  bytes[0] = 'X';
  {
    std::ofstream f(dir / "magic.bin", std::ios::binary);
    f << bytes;
  }
  EXPECT_THROW(read_checkpoint(dir / "magic.bin"), IoError);
  EXPECT_THROW(read_checkpoint(dir / "missing.bin"), IoError);
  fs::remove_all(dir);
}

TEST(Csv, QuotingAndParsing) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const CsvTable t = parse_csv("a,b\r\n\"x\r\ny\",\"q\"\"\"\r\n3,4\r\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x\r\ny");
  EXPECT_EQ(t.rows[0][1], "q\"");
  EXPECT_EQ(parse_csv(to_csv(t)).rows, t.rows);
  EXPECT_THROW(parse_csv("a,b\n1\n"), IoError);
  EXPECT_THROW(parse_csv("a\n\"open\n"), IoError);
  EXPECT_THROW(t.column("c"), IoError);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, -1e-9, 123456789.125, 2.0 / 3.0, 0.0}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Svg, PanelsBandsAndEscaping) {
  SvgPanel p{"a<b", "step", "return", {SvgSeries{"svea & co", {0, 1, 2}, {1, 2, 3}, {0.5, 1.5, 2.5}, {1.5, 2.5, 3.5}}}};
  const std::string svg = render_svg({p, p});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_NE(svg.find("svea &amp; co"), std::string::npos);
  EXPECT_EQ(svg.find("svea & co"), std::string::npos);
}
