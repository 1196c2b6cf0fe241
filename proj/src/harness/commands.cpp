#include "svea/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "svea/checkpoint.hpp"
#include "svea/errors.hpp"
#include "svea/gradcheck_suite.hpp"
#include "svea/metrics.hpp"
#include "svea/svg.hpp"

namespace svea {
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  return "Error";
}

void plot_run(const fs::path& path, const std::vector<DiagnosticRecord>& records) {
  SvgPanel train{"training return", "environment steps", "return", {}};
  SvgPanel eval{"evaluation return", "environment steps", "mean return", {}};
  std::map<std::string, SvgSeries> by_perturbation;
  SvgSeries returns{"episode return", {}, {}, {}, {}};
  for (const auto& r : records) {
    if (r.metric == "train_return") {
      returns.x.push_back(static_cast<double>(r.step));
      returns.y.push_back(r.value);
    } else if (r.metric == "eval_return") {
      auto& s = by_perturbation[r.perturbation];
      s.label = r.perturbation;
      s.x.push_back(static_cast<double>(r.step));
      s.y.push_back(r.value);
    }
  }
  train.series.push_back(std::move(returns));
  for (auto& [name, s] : by_perturbation) eval.series.push_back(std::move(s));
  write_svg(path, {train, eval});
}

fs::path latest_checkpoint(const fs::path& run_dir) {
  const fs::path dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) throw IoError("no checkpoints directory in " + run_dir.string());
  fs::path best;
  long long best_step = -1;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("step_", 0) != 0 || e.path().extension() != ".bin") continue;
    const std::string digits = name.substr(5, name.size() - 9);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) continue;
    const long long step = std::stoll(digits);
    if (step > best_step) {
      best_step = step;
      best = e.path();
    }
  }
  if (best.empty()) throw IoError("no step_*.bin checkpoint in " + dir.string());
  return best;
}

struct RunGroup {
  std::string label;
  std::vector<std::vector<DiagnosticRecord>> seeds;
};

std::vector<fs::path> seed_dirs(const fs::path& dir) {
  if (fs::exists(dir / "metrics.csv")) return {dir};
  std::vector<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0 && fs::exists(e.path() / "metrics.csv"))
        out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError(dir.string() + " holds neither metrics.csv nor seed_*/metrics.csv");
  return out;
}

std::string group_label(const fs::path& seed_dir, const fs::path& input) {
  try {
    return load_run_config(seed_dir / "config.json").name;
  } catch (const std::exception&) {
    return input.filename().string();
  }
}

using SummaryKey = std::tuple<std::string, std::string, std::string, std::int64_t>;  // metric, task, perturbation, step

struct Summary {
  double median = 0.0, q25 = 0.0, q75 = 0.0;
  std::size_t n = 0;
};

std::map<SummaryKey, Summary> summarize(const RunGroup& g, const std::set<std::string>& metrics) {
  std::map<SummaryKey, std::vector<double>> values;
  for (const auto& seed : g.seeds)
    for (const auto& r : seed)
      if (metrics.count(r.metric)) values[{r.metric, r.task, r.perturbation, r.step}].push_back(r.value);
  std::map<SummaryKey, Summary> out;
  for (const auto& [k, v] : values) out[k] = Summary{median(v), quantile(v, 0.25), quantile(v, 0.75), v.size()};
  return out;
}

bool parse_intensity(const std::string& perturbation, double& intensity) {
  const std::string prefix = "intensity_";
  if (perturbation.rfind(prefix, 0) != 0) return false;
  try {
    intensity = std::stod(perturbation.substr(prefix.size()));
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

int worker_threads() {
  const char* v = std::getenv("SVEA_LAB_THREADS");
  if (!v || !*v) return 1;
  const std::string s(v);
  if (s.find_first_not_of("0123456789") != std::string::npos || std::stoi(s) < 1)
    throw ConfigError("SVEA_LAB_THREADS must be a positive integer, got '" + s + "'");
  return std::stoi(s);
}

std::vector<fs::path> cmd_train(const RunConfig& cfg) {
  RunConfig resolved = cfg;
  resolved.resolve();
  const std::uint64_t hash = config_hash(resolved);
  std::vector<fs::path> dirs;
  for (std::uint64_t seed : resolved.seeds) dirs.push_back(resolved.out_dir / ("seed_" + std::to_string(seed)));
  if (std::set<fs::path>(dirs.begin(), dirs.end()).size() != dirs.size())
    throw ConfigError("config field 'seeds': duplicate seeds");

  std::vector<std::exception_ptr> errors(dirs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < dirs.size(); i = next++) {
      const std::uint64_t seed = resolved.seeds[i];
      try {
        RunConfig one = resolved;
        one.seeds = {seed};
        fs::create_directories(dirs[i]);
        fs::remove(dirs[i] / "failure.json");
        write_text(dirs[i] / "config.json", resolved_config_text(one));
        RunIdentity id{resolved.name, seed, hash, dirs[i]};
        const RunResult result = train_loop(one.train, id);
        plot_run(dirs[i] / "plots" / "returns.svg", result.records);
      } catch (const std::exception& e) {
        errors[i] = std::current_exception();
        nlohmann::ordered_json report;
        report["seed"] = seed;
        report["error"] = error_kind(e);
        report["message"] = e.what();
        report["config_hash"] = hash_hex(hash);
        try {
          write_text(dirs[i] / "failure.json", report.dump(2) + "\n");
        } catch (const std::exception&) {
        }
      }
    }
  };
  const int threads = std::min<int>(worker_threads(), static_cast<int>(dirs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return dirs;
}

std::vector<std::string> default_eval_suite() {
  return {"train", "color_hard", "texture", "intensity_0", "intensity_0.1", "intensity_0.2", "intensity_0.3",
          "intensity_0.5"};
}

fs::path cmd_eval(const EvalOptions& o) {
  const RunConfig cfg = load_run_config(o.run_dir / "config.json");
  const std::uint64_t seed = cfg.seeds.front();
  Agent agent(cfg.train.learner, seed);
  const fs::path ckpt = o.checkpoint.empty() ? latest_checkpoint(o.run_dir) : o.checkpoint;
  const CheckpointManifest manifest = load_agent(ckpt, agent, config_hash(cfg));
  std::vector<EnvPerturbation> suite;
  for (const auto& p : o.suite) suite.push_back(EnvPerturbation::parse(p));

  const fs::path out = o.out.empty() ? o.run_dir / "eval.csv" : o.out;
  MetricsLog log(out);
  const std::string task = to_string(cfg.train.env.task);
  for (const auto& p : suite) {
    const EvalResult r = evaluate(agent, cfg.train.env, p, o.episodes, o.eval_seed);
    log.add({cfg.name, manifest.step, "test_return", r.mean_return, task, p.name, seed});
    log.add({cfg.name, manifest.step, "test_success", r.success_rate, task, p.name, seed});
  }
  log.flush();
  return out;
}

fs::path cmd_compare(const std::vector<fs::path>& runs, const fs::path& out) {
  if (runs.size() < 2) throw UsageError("compare needs at least two run directories");
  std::vector<RunGroup> groups;
  std::map<std::string, int> label_uses;
  for (const auto& input : runs) {
    RunGroup g;
    const auto dirs = seed_dirs(input);
    g.label = group_label(dirs.front(), input);
    if (label_uses[g.label]++ > 0) g.label += "#" + std::to_string(label_uses[g.label]);
    for (const auto& d : dirs) {
      std::vector<DiagnosticRecord> records = read_metrics_csv(d / "metrics.csv");
      if (fs::exists(d / "eval.csv")) {
        auto extra = read_metrics_csv(d / "eval.csv");
        records.insert(records.end(), extra.begin(), extra.end());
      }
      g.seeds.push_back(std::move(records));
    }
    groups.push_back(std::move(g));
  }

  std::vector<std::set<std::string>> names(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (const auto& seed : groups[i].seeds)
      for (const auto& r : seed) names[i].insert(r.metric);
  std::set<std::string> shared = names.front();
  for (const auto& n : names) {
    std::set<std::string> keep;
    std::set_intersection(shared.begin(), shared.end(), n.begin(), n.end(), std::inserter(keep, keep.begin()));
    shared = std::move(keep);
  }
  if (shared.empty()) {
    std::string detail;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      detail += "\n  " + groups[i].label + ":";
      for (const auto& m : names[i]) detail += " " + m;
    }
    throw UsageError("compare: the runs share no metric names" + detail);
  }

  std::vector<std::map<SummaryKey, Summary>> summaries;
  for (const auto& g : groups) summaries.push_back(summarize(g, shared));

  CsvTable table;
  table.header = {"group", "metric", "task", "perturbation", "step", "median", "q25", "q75", "n_seeds",
                  "median_minus_first"};
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (const auto& [k, s] : summaries[i]) {
      const auto base = summaries.front().find(k);
      const std::string diff = base == summaries.front().end() ? "" : format_number(s.median - base->second.median);
      table.rows.push_back({groups[i].label, std::get<0>(k), std::get<1>(k), std::get<2>(k),
                            std::to_string(std::get<3>(k)), format_number(s.median), format_number(s.q25),
                            format_number(s.q75), std::to_string(s.n), diff});
    }
  const fs::path summary = out / "summary.csv";
  write_csv(summary, table);

  // Metric vs step, one panel per task, perturbation "train" only.
  for (const auto& metric : shared) {
    std::map<std::string, SvgPanel> panels;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      std::map<std::string, SvgSeries> series;
      for (const auto& [k, s] : summaries[i]) {
        if (std::get<0>(k) != metric || std::get<2>(k) != "train") continue;
        auto& line = series[std::get<1>(k)];
        line.label = groups[i].label;
        line.x.push_back(static_cast<double>(std::get<3>(k)));
        line.y.push_back(s.median);
        line.lo.push_back(s.q25);
        line.hi.push_back(s.q75);
      }
      for (auto& [task, line] : series) {
        auto& p = panels[task];
        p.title = task;
        p.x_label = "environment steps";
        p.y_label = metric + " (median, IQR)";
        p.series.push_back(std::move(line));
      }
    }
    if (panels.empty()) continue;
    std::vector<SvgPanel> list;
    for (auto& [task, p] : panels) list.push_back(std::move(p));
    write_svg(out / "plots" / (metric + ".svg"), list);
  }

  // Metric vs intensity at the last logged step of each perturbation.
  for (const auto& metric : shared) {
    std::map<std::string, SvgPanel> panels;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      std::map<std::string, std::map<double, Summary>> by_task;
      std::map<std::tuple<std::string, double>, std::int64_t> last_step;
      for (const auto& [k, s] : summaries[i]) {
        double intensity = 0.0;
        if (std::get<0>(k) != metric || !parse_intensity(std::get<2>(k), intensity)) continue;
        auto& step = last_step[{std::get<1>(k), intensity}];
        if (std::get<3>(k) >= step) {
          step = std::get<3>(k);
          by_task[std::get<1>(k)][intensity] = s;
        }
      }
      for (auto& [task, points] : by_task) {
        SvgSeries line{groups[i].label, {}, {}, {}, {}};
        for (const auto& [x, s] : points) {
          line.x.push_back(x);
          line.y.push_back(s.median);
          line.lo.push_back(s.q25);
          line.hi.push_back(s.q75);
        }
        auto& p = panels[task];
        p.title = task;
        p.x_label = "intensity";
        p.y_label = metric + " (median, IQR)";
        p.series.push_back(std::move(line));
      }
    }
    if (panels.empty()) continue;
    std::vector<SvgPanel> list;
    for (auto& [task, p] : panels) list.push_back(std::move(p));
    write_svg(out / "plots" / (metric + "_vs_intensity.svg"), list);
  }
  return summary;
}

std::vector<fs::path> cmd_render_aug(Task task, int n, std::uint64_t seed, const fs::path& out) {
  if (n < 1) throw UsageError("render-aug needs n >= 1");
  EnvConfig cfg;
  cfg.task = task;
  Env env(cfg, EnvPerturbation::train(), seed);
  env.reset();
  Rng policy = make_stream(seed, "render_policy");
  for (int i = 0; i < 8; ++i) env.step(Action::discrete(uniform_int(policy, 0, cfg.action_dim() - 1)));
  const Tensor obs = env.observation();
  std::vector<fs::path> files;
  for (AugKind kind : all_aug_kinds()) {
    Rng rng = make_stream(seed, "sheet:" + to_string(kind));
    const fs::path path = out / "augs" / (to_string(kind) + ".ppm");
    render_sample_sheet(AugmentationSpec::of(kind), obs, n, rng, path);
    files.push_back(path);
  }
  return files;
}

bool cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const auto& c : gradcheck_suite(seed)) {
    ok = ok && c.passed();
    out << (c.passed() ? "PASS " : "FAIL ") << c.name << " max_rel_error=" << c.report.max_rel_error
        << " coords=" << c.report.coords_checked << " worst=" << c.report.worst_param << "[" << c.report.worst_index
        << "]\n";
  }
  return ok;
}

}  // namespace svea
