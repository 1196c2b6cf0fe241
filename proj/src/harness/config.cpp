#include "svea/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "svea/errors.hpp"

namespace svea {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

/// Reads known keys from one JSON object and rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, int& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(join_path(path_, key), "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) fail(join_path(path_, key), "integer out of range");
      dst = static_cast<int>(x);
    }
  }
  void read(const std::string& key, std::int64_t& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(join_path(path_, key), "expected an integer");
      dst = v->get<std::int64_t>();
    }
  }
  void read(const std::string& key, double& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(join_path(path_, key), "expected a number");
      dst = v->get<double>();
    }
  }
  void read(const std::string& key, bool& dst) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(join_path(path_, key), "expected true or false");
      dst = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& dst) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(join_path(path_, key), "expected a string");
      dst = v->get<std::string>();
    }
  }
  template <class F>
  void read_with(const std::string& key, F&& f) {
    if (const json* v = take(key)) {
      try {
        f(*v);
      } catch (const ConfigError& e) {
        fail(join_path(path_, key), e.what());
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(join_path(path_, it.key()), "unknown key");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string expect_string(const json& v) {
  if (!v.is_string()) throw ConfigError("expected a string");
  return v.get<std::string>();
}

void read_augmentation(const json& v, AugmentationSpec& spec) {
  if (v.is_string()) {
    spec = AugmentationSpec::of(parse_aug_kind(v.get<std::string>()));
    return;
  }
  ObjectReader r(v, "augmentation");
  std::string kind = to_string(spec.kind);
  r.read("kind", kind);
  const AugmentationSpec base = spec;
  spec = AugmentationSpec::of(parse_aug_kind(kind));
  spec.shift_radius = base.shift_radius;
  spec.overlay_alpha = base.overlay_alpha;
  spec.cutout_max_fraction = base.cutout_max_fraction;
  spec.blur_sigma_min = base.blur_sigma_min;
  spec.blur_sigma_max = base.blur_sigma_max;
  spec.affine_translate = base.affine_translate;
  spec.affine_scale_min = base.affine_scale_min;
  spec.affine_scale_max = base.affine_scale_max;
  spec.affine_shear = base.affine_shear;
  spec.rotation_angles = base.rotation_angles;
  r.read("shift_radius", spec.shift_radius);
  r.read("overlay_alpha", spec.overlay_alpha);
  r.read("cutout_max_fraction", spec.cutout_max_fraction);
  r.read("blur_sigma_min", spec.blur_sigma_min);
  r.read("blur_sigma_max", spec.blur_sigma_max);
  r.read("affine_translate", spec.affine_translate);
  r.read("affine_scale_min", spec.affine_scale_min);
  r.read("affine_scale_max", spec.affine_scale_max);
  r.read("affine_shear", spec.affine_shear);
  r.read_with("rotation_angles", [&](const json& a) {
    if (!a.is_array()) throw ConfigError("expected an array of numbers");
    spec.rotation_angles.clear();
    for (const auto& x : a) {
      if (!x.is_number()) throw ConfigError("expected an array of numbers");
      spec.rotation_angles.push_back(x.get<double>());
    }
  });
  r.finish();
}

ordered_json augmentation_json(const AugmentationSpec& s) {
  ordered_json j;
  j["kind"] = to_string(s.kind);
  j["shift_radius"] = s.shift_radius;
  j["overlay_alpha"] = s.overlay_alpha;
  j["cutout_max_fraction"] = s.cutout_max_fraction;
  j["blur_sigma_min"] = s.blur_sigma_min;
  j["blur_sigma_max"] = s.blur_sigma_max;
  j["affine_translate"] = s.affine_translate;
  j["affine_scale_min"] = s.affine_scale_min;
  j["affine_scale_max"] = s.affine_scale_max;
  j["affine_shear"] = s.affine_shear;
  j["rotation_angles"] = s.rotation_angles;
  return j;
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

void RunConfig::resolve() {
  TrainConfig& t = train;
  t.learner.encoder = EncoderConfig::profile(encoder_profile);
  t.learner.encoder.in_channels = t.env.channels();
  t.learner.encoder.height = t.env.height;
  t.learner.encoder.width = t.env.width;
  if (t.learner.encoder.kind == EncoderKind::vit)
    t.learner.encoder.patch_count = (t.env.height / t.learner.encoder.patch) * (t.env.width / t.learner.encoder.patch);
  t.learner.action_space = t.learner.algorithm == Algorithm::dqn ? ActionSpace::discrete : ActionSpace::continuous;
  t.env.action_space = t.learner.action_space;
  t.env.action_repeat = t.env.resolved_action_repeat();
  t.env.episode_length = t.env.resolved_episode_length();
  t.learner.action_dim = t.env.action_dim();
  if (seeds.empty()) throw ConfigError("config field 'seeds': at least one seed is required");
  if (name.empty() || name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("config field 'name': must be non-empty without path separators");
  t.validate();
}

RunConfig default_run_config() {
  RunConfig c;
  c.train.env_steps = 30000;
  c.train.eval_every = 5000;
  c.train.learner.strong = AugmentationSpec::of(AugKind::conv);
  c.resolve();
  // keep the task defaults symbolic so a later task change picks up its own
  c.train.env.action_repeat = 0;
  c.train.env.episode_length = 0;
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": JSON syntax error at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  RunConfig c = default_run_config();
  TrainConfig& t = c.train;
  try {
    ObjectReader r(root, "");
    int version = 0;
    if (!r.has("schema_version")) ObjectReader::fail("schema_version", "missing");
    r.read("schema_version", version);
    if (version != kConfigSchemaVersion)
      ObjectReader::fail("schema_version", "version " + std::to_string(version) + " is not supported (expected " +
                                               std::to_string(kConfigSchemaVersion) + ")");
    r.read("name", c.name);
    r.read_with("task", [&](const json& v) { t.env.task = parse_task(expect_string(v)); });
    r.read_with("algorithm", [&](const json& v) { t.learner.algorithm = parse_algorithm(expect_string(v)); });
    r.read_with("mode", [&](const json& v) { t.learner.mode = parse_update_mode(expect_string(v)); });
    r.read_with("encoder", [&](const json& v) {
      c.encoder_profile = expect_string(v);
      EncoderConfig::profile(c.encoder_profile);
    });
    r.read_with("augmentation", [&](const json& v) { read_augmentation(v, t.learner.strong); });
    r.read("alpha", t.learner.alpha);
    r.read("beta", t.learner.beta);
    r.read_with("seeds", [&](const json& v) {
      if (!v.is_array()) throw ConfigError("expected an array of nonnegative integers");
      c.seeds.clear();
      for (const auto& s : v) {
        if (!s.is_number_unsigned()) throw ConfigError("expected an array of nonnegative integers");
        c.seeds.push_back(s.get<std::uint64_t>());
      }
    });
    r.read("env_steps", t.env_steps);
    r.read("eval_every", t.eval_every);
    r.read("eval_episodes", t.eval_episodes);
    r.read_with("perturbations", [&](const json& v) {
      if (!v.is_array()) throw ConfigError("expected an array of perturbation names");
      t.eval_perturbations.clear();
      for (const auto& p : v) {
        const std::string name = expect_string(p);
        EnvPerturbation::parse(name);
        t.eval_perturbations.push_back(name);
      }
    });
    r.read_with("out_dir", [&](const json& v) { c.out_dir = expect_string(v); });
    r.read_with("env", [&](const json& v) {
      ObjectReader e(v, "env");
      e.read("height", t.env.height);
      e.read("width", t.env.width);
      e.read("frame_stack", t.env.frame_stack);
      e.read("action_repeat", t.env.action_repeat);
      e.read("episode_length", t.env.episode_length);
      e.finish();
    });
    r.read_with("learner", [&](const json& v) {
      ObjectReader l(v, "learner");
      LearnerConfig& lc = t.learner;
      l.read("gamma", lc.gamma);
      l.read("lr", lc.adam.lr);
      l.read("adam_beta1", lc.adam.beta1);
      l.read("adam_beta2", lc.adam.beta2);
      l.read("adam_eps", lc.adam.eps);
      l.read("hidden", lc.hidden);
      l.read("head_layers", lc.head_layers);
      l.read("tau_encoder", lc.tau_encoder);
      l.read("tau_critic", lc.tau_critic);
      l.read("target_update_every", lc.target_update_every);
      l.read("weak_shift", lc.weak_shift);
      l.read("weak_shift_radius", lc.weak_shift_radius);
      l.read("double_q", lc.double_q);
      l.read("init_temperature", lc.init_temperature);
      l.read("learn_temperature", lc.learn_temperature);
      l.read("temperature_lr", lc.temperature_adam.lr);
      l.read("log_std_min", lc.log_std_min);
      l.read("log_std_max", lc.log_std_max);
      l.read("actor_update_every", lc.actor_update_every);
      l.finish();
    });
    r.read_with("training", [&](const json& v) {
      ObjectReader g(v, "training");
      g.read("batch_size", t.batch_size);
      g.read("buffer_capacity", t.buffer_capacity);
      g.read("seed_steps", t.seed_steps);
      g.read("update_every", t.update_every);
      g.read("updates_per_round", t.updates_per_round);
      g.read("log_every", t.log_every);
      g.read("checkpoint_every", t.checkpoint_every);
      g.read("diagnostics", t.diagnostics);
      g.read("diagnostic_batch", t.diagnostic_batch);
      g.read("epsilon_start", t.epsilon_start);
      g.read("epsilon_end", t.epsilon_end);
      g.read("epsilon_fraction", t.epsilon_fraction);
      g.finish();
    });
    r.finish();
    c.resolve();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

ordered_json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  const LearnerConfig& l = t.learner;
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = c.name;
  j["task"] = to_string(t.env.task);
  j["algorithm"] = to_string(l.algorithm);
  j["mode"] = to_string(l.mode);
  j["encoder"] = c.encoder_profile;
  j["augmentation"] = augmentation_json(l.strong);
  j["alpha"] = l.alpha;
  j["beta"] = l.beta;
  j["seeds"] = c.seeds;
  j["env_steps"] = t.env_steps;
  j["eval_every"] = t.eval_every;
  j["eval_episodes"] = t.eval_episodes;
  j["perturbations"] = t.eval_perturbations;
  j["out_dir"] = c.out_dir.generic_string();
  j["env"] = {{"height", t.env.height},
              {"width", t.env.width},
              {"frame_stack", t.env.frame_stack},
              {"action_repeat", t.env.resolved_action_repeat()},
              {"episode_length", t.env.resolved_episode_length()}};
  ordered_json lj;
  lj["gamma"] = l.gamma;
  lj["lr"] = l.adam.lr;
  lj["adam_beta1"] = l.adam.beta1;
  lj["adam_beta2"] = l.adam.beta2;
  lj["adam_eps"] = l.adam.eps;
  lj["hidden"] = l.hidden;
  lj["head_layers"] = l.head_layers;
  lj["tau_encoder"] = l.tau_encoder;
  lj["tau_critic"] = l.tau_critic;
  lj["target_update_every"] = l.target_update_every;
  lj["weak_shift"] = l.weak_shift;
  lj["weak_shift_radius"] = l.weak_shift_radius;
  lj["double_q"] = l.double_q;
  lj["init_temperature"] = l.init_temperature;
  lj["learn_temperature"] = l.learn_temperature;
  lj["temperature_lr"] = l.temperature_adam.lr;
  lj["log_std_min"] = l.log_std_min;
  lj["log_std_max"] = l.log_std_max;
  lj["actor_update_every"] = l.actor_update_every;
  j["learner"] = lj;
  ordered_json g;
  g["batch_size"] = t.batch_size;
  g["buffer_capacity"] = t.buffer_capacity;
  g["seed_steps"] = t.seed_steps;
  g["update_every"] = t.update_every;
  g["updates_per_round"] = t.updates_per_round;
  g["log_every"] = t.log_every;
  g["checkpoint_every"] = t.checkpoint_every;
  g["diagnostics"] = t.diagnostics;
  g["diagnostic_batch"] = t.diagnostic_batch;
  g["epsilon_start"] = t.epsilon_start;
  g["epsilon_end"] = t.epsilon_end;
  g["epsilon_fraction"] = t.epsilon_fraction;
  j["training"] = g;
  return j;
}

std::string resolved_config_text(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::uint64_t config_hash(const RunConfig& c) {
  ordered_json j = to_json(c);
  j.erase("seeds");
  j.erase("out_dir");
  return fnv1a(j.dump());
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << h;
  return ss.str();
}

void apply_overrides(RunConfig& c, const ConfigOverrides& o) {
  if (o.seeds) c.seeds = *o.seeds;
  if (o.steps) c.train.env_steps = *o.steps;
  if (o.out) c.out_dir = *o.out;
  if (o.encoder) c.encoder_profile = *o.encoder;
  if (o.aug) c.train.learner.strong = AugmentationSpec::of(parse_aug_kind(*o.aug));
  if (o.alpha) c.train.learner.alpha = *o.alpha;
  if (o.beta) c.train.learner.beta = *o.beta;
  if (o.algorithm) c.train.learner.algorithm = parse_algorithm(*o.algorithm);
  c.resolve();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("--seeds expects comma-separated nonnegative integers, got '" + text + "'");
    out.push_back(std::stoull(item));
  }
  if (out.empty()) throw ConfigError("--seeds needs at least one seed");
  return out;
}

}  // namespace svea
