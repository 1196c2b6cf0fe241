#include "svea/encoders.hpp"

#include <cmath>

#include "svea/errors.hpp"
#include "svea/ops.hpp"

namespace svea {
namespace {

BasicTensor<float> normal_tensor(Shape shape, double stddev, Rng& rng) {
  BasicTensor<float> t(std::move(shape));
  std::normal_distribution<float> dist(0.0f, static_cast<float>(stddev));
  for (auto& v : t.span()) v = dist(rng);
  return t;
}

BasicTensor<float> uniform_tensor(Shape shape, double bound, Rng& rng) {
  BasicTensor<float> t(std::move(shape));
  std::uniform_real_distribution<float> dist(static_cast<float>(-bound), static_cast<float>(bound));
  for (auto& v : t.span()) v = dist(rng);
  return t;
}

void add_linear(ParamStore& store, const std::string& name, int out, int in, bool bias, Rng& rng) {
  store.add(name + ".w", uniform_tensor({out, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
  if (bias) store.add(name + ".b", BasicTensor<float>(Shape{out}, 0.0f));
}

void add_layernorm(ParamStore& store, const std::string& name, int dim) {
  store.add(name + ".g", BasicTensor<float>(Shape{dim}, 1.0f));
  store.add(name + ".b", BasicTensor<float>(Shape{dim}, 0.0f));
}

int mlp_hidden(const EncoderConfig& cfg) {
  return static_cast<int>(std::lround(cfg.mlp_ratio * cfg.embed_dim));
}

int patch_dim(const EncoderConfig& cfg) { return cfg.in_channels * cfg.patch * cfg.patch; }

template <class T>
BasicVar<T> layer_norm(BasicTape<T>& tape, const BasicParamStore<T>& params, const std::string& name,
                       BasicVar<T> x) {
  return ops::layernorm(x, tape.param(params, name + ".g"), tape.param(params, name + ".b"));
}

template <class T>
BasicVar<T> dense(BasicTape<T>& tape, const BasicParamStore<T>& params, const std::string& name, BasicVar<T> x) {
  const std::string b = name + ".b";
  return ops::linear(x, tape.param(params, name + ".w"), params.contains(b) ? tape.param(params, b) : BasicVar<T>{});
}

template <class T>
BasicVar<T> transformer_block(const EncoderConfig& cfg, BasicTape<T>& tape, const BasicParamStore<T>& params,
                              const std::string& name, BasicVar<T> x) {
  const std::int64_t n = x.dim(0), len = x.dim(1), e = x.dim(2);
  BasicVar<T> h = layer_norm(tape, params, name + ".ln1", x);
  BasicVar<T> qkv = ops::reshape(dense(tape, params, name + ".qkv", h), Shape{n * len, 3 * e});
  auto part = [&](std::int64_t k) { return ops::reshape(ops::slice_cols(qkv, k * e, (k + 1) * e), Shape{n, len, e}); };
  BasicVar<T> attn = ops::scaled_dot_attention(part(0), part(1), part(2), cfg.heads);
  x = ops::add(x, dense(tape, params, name + ".proj", attn));
  h = layer_norm(tape, params, name + ".ln2", x);
  h = dense(tape, params, name + ".mlp2", ops::gelu(dense(tape, params, name + ".mlp1", h)));
  return ops::add(x, h);
}

}  // namespace

EncoderConfig EncoderConfig::desk_cnn() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::paper_cnn() {
  EncoderConfig c;
  c.height = c.width = 84;
  c.strides.assign(11, 1);
  c.strides[0] = 2;
  c.feature_dim = 128;
  return c;
}

EncoderConfig EncoderConfig::desk_vit() {
  EncoderConfig c;
  c.kind = EncoderKind::vit;
  c.patch_count = 64;
  return c;
}

EncoderConfig EncoderConfig::paper_vit() {
  EncoderConfig c;
  c.kind = EncoderKind::vit;
  c.height = c.width = 96;
  c.patch_count = 144;
  c.embed_dim = 128;
  c.depth = 4;
  c.heads = 8;
  c.mlp_ratio = 1.0;
  c.feature_dim = 128;
  return c;
}

EncoderConfig EncoderConfig::profile(const std::string& name) {
  if (name == "desk_cnn" || name == "cnn") return desk_cnn();
  if (name == "desk_vit" || name == "vit") return desk_vit();
  if (name == "paper_cnn") return paper_cnn();
  if (name == "paper_vit") return paper_vit();
  throw ConfigError("unknown encoder profile '" + name + "' (expected desk_cnn, desk_vit, paper_cnn, paper_vit)");
}

std::string to_string(EncoderKind kind) { return kind == EncoderKind::cnn ? "cnn" : "vit"; }

std::pair<int, int> EncoderConfig::conv_output_hw() const {
  int h = height, w = width;
  for (int s : strides) {
    h = (h - kernel) / s + 1;
    w = (w - kernel) / s + 1;
  }
  return {h, w};
}

int EncoderConfig::tokens() const { return (height / patch) * (width / patch); }

int EncoderConfig::output_dim() const { return kind == EncoderKind::cnn ? feature_dim : embed_dim; }

void EncoderConfig::validate() const {
  if (in_channels <= 0 || in_channels % 3 != 0)
    throw ConfigError("encoder in_channels must be a positive multiple of 3, got " + std::to_string(in_channels));
  if (height <= 0 || width <= 0) throw ConfigError("encoder resolution must be positive");
  if (kind == EncoderKind::cnn) {
    if (strides.empty() || filters <= 0 || kernel <= 0 || feature_dim <= 0)
      throw ConfigError("cnn encoder needs at least one layer and positive filters/kernel/feature_dim");
    int h = height, w = width;
    for (int s : strides) {
      if (s <= 0) throw ConfigError("cnn stride must be positive");
      if (h < kernel || w < kernel)
        throw ConfigError("cnn stack collapses the " + std::to_string(height) + "x" + std::to_string(width) +
                          " input below the kernel size");
      h = (h - kernel) / s + 1;
      w = (w - kernel) / s + 1;
    }
    return;
  }
  if (patch <= 0 || height % patch != 0 || width % patch != 0)
    throw ConfigError("vit patch " + std::to_string(patch) + " does not tile " + std::to_string(height) + "x" +
                      std::to_string(width));
  if (patch_count != 0 && patch_count != tokens())
    throw ConfigError("vit declares " + std::to_string(patch_count) + " patches but " + std::to_string(height) + "x" +
                      std::to_string(width) + " with " + std::to_string(patch) + "x" + std::to_string(patch) +
                      " patches gives " + std::to_string(tokens()));
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0)
    throw ConfigError("vit embed dim " + std::to_string(embed_dim) + " not divisible by " + std::to_string(heads) +
                      " heads");
  if (depth < 1 || mlp_ratio <= 0.0) throw ConfigError("vit needs depth >= 1 and a positive mlp ratio");
}

void init_encoder_params(const EncoderConfig& cfg, ParamStore& store, const std::string& prefix, Rng& rng) {
  cfg.validate();
  if (cfg.kind == EncoderKind::cnn) {
    int in = cfg.in_channels;
    for (std::size_t i = 0; i < cfg.strides.size(); ++i) {
      const std::string name = prefix + "conv" + std::to_string(i);
      const double fan_in = static_cast<double>(in) * cfg.kernel * cfg.kernel;
      store.add(name + ".w", normal_tensor({cfg.filters, in, cfg.kernel, cfg.kernel}, std::sqrt(2.0 / fan_in), rng));
      store.add(name + ".b", BasicTensor<float>(Shape{cfg.filters}, 0.0f));
      in = cfg.filters;
    }
    const auto [h, w] = cfg.conv_output_hw();
    add_linear(store, prefix + "proj", cfg.feature_dim, cfg.filters * h * w, true, rng);
    add_layernorm(store, prefix + "ln", cfg.feature_dim);
    return;
  }
  const int e = cfg.embed_dim;
  add_linear(store, prefix + "patch", e, patch_dim(cfg), true, rng);
  if (cfg.class_token) store.add(prefix + "cls", normal_tensor({e}, 0.02, rng));
  const int slots = cfg.tokens() + (cfg.class_token ? 1 : 0);
  if (cfg.learned_pos) store.add(prefix + "pos", normal_tensor({slots, e}, 0.02, rng));
  for (int b = 0; b < cfg.depth; ++b) {
    const std::string name = prefix + "block" + std::to_string(b);
    add_layernorm(store, name + ".ln1", e);
    add_linear(store, name + ".qkv", 3 * e, e, cfg.qkv_bias, rng);
    add_linear(store, name + ".proj", e, e, true, rng);
    add_layernorm(store, name + ".ln2", e);
    add_linear(store, name + ".mlp1", mlp_hidden(cfg), e, true, rng);
    add_linear(store, name + ".mlp2", e, mlp_hidden(cfg), true, rng);
  }
  add_layernorm(store, prefix + "ln", e);
}

std::int64_t param_count(const EncoderConfig& cfg) {
  cfg.validate();
  std::int64_t total = 0;
  if (cfg.kind == EncoderKind::cnn) {
    std::int64_t in = cfg.in_channels;
    for (std::size_t i = 0; i < cfg.strides.size(); ++i) {
      total += in * cfg.kernel * cfg.kernel * cfg.filters + cfg.filters;
      in = cfg.filters;
    }
    const auto [h, w] = cfg.conv_output_hw();
    total += static_cast<std::int64_t>(cfg.filters) * h * w * cfg.feature_dim + cfg.feature_dim;
    return total + 2 * cfg.feature_dim;
  }
  const std::int64_t e = cfg.embed_dim, hidden = mlp_hidden(cfg);
  total += patch_dim(cfg) * e + e;
  if (cfg.class_token) total += e;
  if (cfg.learned_pos) total += (cfg.tokens() + (cfg.class_token ? 1 : 0)) * e;
  const std::int64_t block = 2 * e                          // ln1
                             + 3 * e * e + (cfg.qkv_bias ? 3 * e : 0)  // qkv
                             + e * e + e                     // proj
                             + 2 * e                         // ln2
                             + hidden * e + hidden           // mlp1
                             + e * hidden + e;               // mlp2
  return total + cfg.depth * block + 2 * e;
}

template <class T>
BasicTensor<T> patchify(const BasicTensor<T>& obs, int patch) {
  if (obs.rank() != 4 || patch <= 0 || obs.dim(2) % patch != 0 || obs.dim(3) % patch != 0)
    throw ConfigError("patchify: patch " + std::to_string(patch) + " does not tile " + shape_str(obs.shape()));
  const std::int64_t n = obs.dim(0), c = obs.dim(1), h = obs.dim(2), w = obs.dim(3);
  const std::int64_t gh = h / patch, gw = w / patch, pd = c * patch * patch;
  BasicTensor<T> out(Shape{n, gh * gw, pd});
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t ty = 0; ty < gh; ++ty)
      for (std::int64_t tx = 0; tx < gw; ++tx) {
        T* dst = out.data() + ((s * gh * gw) + ty * gw + tx) * pd;
        for (std::int64_t ch = 0; ch < c; ++ch)
          for (std::int64_t y = 0; y < patch; ++y) {
            const T* src = obs.data() + ((s * c + ch) * h + ty * patch + y) * w + tx * patch;
            std::copy_n(src, patch, dst + (ch * patch + y) * patch);
          }
      }
  return out;
}

template <class T>
BasicVar<T> encode_patches(const EncoderConfig& cfg, BasicTape<T>& tape, const BasicParamStore<T>& params,
                           const std::string& prefix, const BasicTensor<T>& patches) {
  if (patches.rank() != 3 || patches.dim(1) != cfg.tokens() || patches.dim(2) != patch_dim(cfg))
    throw ConfigError("vit expects patches (N, " + std::to_string(cfg.tokens()) + ", " +
                      std::to_string(patch_dim(cfg)) + "), got " + shape_str(patches.shape()));
  BasicVar<T> x = dense(tape, params, prefix + "patch", tape.constant(patches));
  if (cfg.class_token) x = ops::prepend_token(x, tape.param(params, prefix + "cls"));
  if (cfg.learned_pos) x = ops::add(x, tape.param(params, prefix + "pos"));
  for (int b = 0; b < cfg.depth; ++b) x = transformer_block(cfg, tape, params, prefix + "block" + std::to_string(b), x);
  x = layer_norm(tape, params, prefix + "ln", x);
  return cfg.class_token ? ops::select_token(x, 0) : ops::mean_tokens(x);
}

template <class T>
BasicVar<T> encode(const EncoderConfig& cfg, BasicTape<T>& tape, const BasicParamStore<T>& params,
                   const std::string& prefix, const BasicTensor<T>& obs) {
  if (obs.rank() != 4 || obs.dim(1) != cfg.in_channels || obs.dim(2) != cfg.height || obs.dim(3) != cfg.width)
    throw ConfigError("encoder expects (N, " + std::to_string(cfg.in_channels) + ", " + std::to_string(cfg.height) +
                      ", " + std::to_string(cfg.width) + "), got " + shape_str(obs.shape()));
  if (cfg.kind == EncoderKind::vit) return encode_patches(cfg, tape, params, prefix, patchify(obs, cfg.patch));
  BasicVar<T> x = tape.constant(obs);
  for (std::size_t i = 0; i < cfg.strides.size(); ++i) {
    const std::string name = prefix + "conv" + std::to_string(i);
    x = ops::relu(ops::conv2d(x, tape.param(params, name + ".w"), tape.param(params, name + ".b"), cfg.strides[i], 0));
  }
  x = ops::reshape(x, Shape{x.dim(0), x.value().numel() / x.dim(0)});
  x = dense(tape, params, prefix + "proj", x);
  return ops::tanh(layer_norm(tape, params, prefix + "ln", x));
}

#define SVEA_INSTANTIATE_ENCODER(T)                                                                             \
  template BasicTensor<T> patchify(const BasicTensor<T>&, int);                                                 \
  template BasicVar<T> encode(const EncoderConfig&, BasicTape<T>&, const BasicParamStore<T>&, const std::string&, \
                              const BasicTensor<T>&);                                                           \
  template BasicVar<T> encode_patches(const EncoderConfig&, BasicTape<T>&, const BasicParamStore<T>&,            \
                                      const std::string&, const BasicTensor<T>&);

SVEA_INSTANTIATE_ENCODER(float)
SVEA_INSTANTIATE_ENCODER(double)

}  // namespace svea
