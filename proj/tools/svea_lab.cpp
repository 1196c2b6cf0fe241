#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "svea/commands.hpp"
#include "svea/errors.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svea-lab: pixel RL with stabilized augmentation"};
  app.require_subcommand(1);

  std::string config_path, seeds, out, encoder, aug, algorithm;
  std::int64_t steps = 0;
  double alpha = 0.0, beta = 0.0;
  auto* train = app.add_subcommand("train", "train one run per seed");
  train->add_option("--config", config_path, "JSON run config (defaults when omitted)");
  train->add_option("--seeds", seeds, "comma-separated seeds, e.g. 1,2,3");
  train->add_option("--steps", steps, "environment step budget");
  train->add_option("--out", out, "output directory");
  train->add_option("--encoder", encoder, "encoder profile (desk_cnn, desk_vit, paper_cnn, paper_vit)");
  train->add_option("--aug", aug, "strong augmentation kind");
  train->add_option("--alpha", alpha, "weight of the clean stream");
  train->add_option("--beta", beta, "weight of the augmented stream");
  train->add_option("--algorithm", algorithm, "dqn or sac");

  svea::EvalOptions eval_opts;
  std::string suite;
  bool suite_given = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint across perturbations");
  eval->add_option("--run", eval_opts.run_dir, "seed directory of a training run")->required();
  eval->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint file (default: latest)");
  eval->add_option("--suite", suite, "comma-separated perturbations (default: full suite; 'none' for empty)")
      ->each([&](const std::string&) { suite_given = true; });
  eval->add_option("--episodes", eval_opts.episodes, "episodes per perturbation");
  eval->add_option("--eval-seed", eval_opts.eval_seed, "evaluation seed");
  eval->add_option("--out", eval_opts.out, "output CSV (default: <run>/eval.csv)");

  std::vector<std::string> runs;
  std::string compare_out = "compare";
  auto* compare = app.add_subcommand("compare", "aggregate runs into a summary table and plots");
  compare->add_option("runs", runs, "run directories")->required();
  compare->add_option("--out", compare_out, "output directory");

  std::string task = "cartpole_balance", render_out = "render";
  int n = 6;
  std::uint64_t render_seed = 0;
  auto* render = app.add_subcommand("render-aug", "write augmentation sample sheets");
  render->add_option("--task", task, "task providing the observation");
  render->add_option("--n", n, "samples per sheet");
  render->add_option("--seed", render_seed, "seed");
  render->add_option("--out", render_out, "output directory (sheets go to <out>/augs)");

  std::uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of primitives and encoders");
  gradcheck->add_option("--seed", gc_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      svea::RunConfig cfg = config_path.empty() ? svea::default_run_config() : svea::load_run_config(config_path);
      svea::ConfigOverrides o;
      if (!seeds.empty()) o.seeds = svea::parse_seed_list(seeds);
      if (train->count("--steps")) o.steps = steps;
      if (!out.empty()) o.out = out;
      if (!encoder.empty()) o.encoder = encoder;
      if (!aug.empty()) o.aug = aug;
      if (train->count("--alpha")) o.alpha = alpha;
      if (train->count("--beta")) o.beta = beta;
      if (!algorithm.empty()) o.algorithm = algorithm;
      svea::apply_overrides(cfg, o);
      for (const auto& dir : svea::cmd_train(cfg)) std::cout << dir.string() << "\n";
    } else if (*eval) {
      if (suite_given) eval_opts.suite = suite == "none" ? std::vector<std::string>{} : split_commas(suite);
      std::cout << svea::cmd_eval(eval_opts).string() << "\n";
    } else if (*compare) {
      std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
      std::cout << svea::cmd_compare(dirs, compare_out).string() << "\n";
    } else if (*render) {
      for (const auto& f : svea::cmd_render_aug(svea::parse_task(task), n, render_seed, render_out))
        std::cout << f.string() << "\n";
    } else if (*gradcheck) {
      return svea::cmd_gradcheck(gc_seed, std::cout) ? 0 : 1;
    }
  } catch (const svea::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const svea::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
