#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svea/param_store.hpp"
#include "svea/rng.hpp"
#include "svea/tape.hpp"

namespace svea {

enum class EncoderKind { cnn, vit };

/// Shared state encoder f. A cnn is a conv(+relu) stack, flattened and linearly
/// projected to `feature_dim` (then layernorm + tanh). A vit tokenizes
/// non-overlapping space-time patches and emits the class-token output.
struct EncoderConfig {
  EncoderKind kind = EncoderKind::cnn;
  int in_channels = 9;  // 3 * stacked frames
  int height = 64;
  int width = 64;

  // cnn
  int filters = 32;
  int kernel = 3;
  std::vector<int> strides{2, 2, 1, 1, 1};
  int feature_dim = 64;

  // vit
  int patch = 8;
  int patch_count = 0;  // declared count; 0 means "derive from resolution"
  int embed_dim = 64;
  int depth = 2;
  int heads = 4;
  double mlp_ratio = 2.0;
  bool qkv_bias = false;
  bool class_token = true;
  bool learned_pos = true;

  /// 5 conv layers at 64x64, features 64.
  static EncoderConfig desk_cnn();
  /// 11-layer, 32-filter stack producing 32x21x21 maps at 84x84.
  static EncoderConfig paper_cnn();
  /// 2 blocks, embed 64, 4 heads, 8x8 patches at 64x64.
  static EncoderConfig desk_vit();
  /// 4 blocks, embed 128, 8 heads, 144 patches of 8x8 at 96x96.
  static EncoderConfig paper_vit();
  /// Looks up one of "desk_cnn", "paper_cnn", "desk_vit", "paper_vit".
  static EncoderConfig profile(const std::string& name);

  /// Throws ConfigError on inconsistent geometry (e.g. patch grid mismatch).
  void validate() const;
  /// Width of the feature vector produced by encode().
  int output_dim() const;
  /// Tokens produced by the patch grid (excluding the class token).
  int tokens() const;
  /// Spatial extent after the conv stack.
  std::pair<int, int> conv_output_hw() const;
};

std::string to_string(EncoderKind kind);

/// Registers every encoder parameter under `prefix` (e.g. "encoder.") and
/// draws its initial value from `rng`.
void init_encoder_params(const EncoderConfig& cfg, ParamStore& store, const std::string& prefix, Rng& rng);

/// Exact learnable-parameter count of the encoder.
std::int64_t param_count(const EncoderConfig& cfg);

/// (N, C, H, W) -> (N, tokens, C * patch * patch), patch vectors ordered (c, y, x).
template <class T>
BasicTensor<T> patchify(const BasicTensor<T>& obs, int patch);

/// Encodes a batch of observations (N, C, H, W) into features (N, output_dim()).
/// `obs` is recorded as a constant: no gradient flows into pixels.
template <class T>
BasicVar<T> encode(const EncoderConfig& cfg, BasicTape<T>& tape, const BasicParamStore<T>& params,
                   const std::string& prefix, const BasicTensor<T>& obs);

/// ViT forward from pre-computed patch vectors (N, tokens, patch_dim).
template <class T>
BasicVar<T> encode_patches(const EncoderConfig& cfg, BasicTape<T>& tape, const BasicParamStore<T>& params,
                           const std::string& prefix, const BasicTensor<T>& patches);

}  // namespace svea
