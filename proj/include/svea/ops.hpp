#pragma once

#include <cstdint>
#include <span>

#include "svea/tape.hpp"

/// Differentiable primitives. Every function records one node on the tape of
/// its first argument and validates shapes, throwing ConfigError with the
/// offending shapes on mismatch.
namespace svea::ops {

/// y = x W^T + b over the last axis of x. W is (out, in); b is (out) or absent.
template <class T>
BasicVar<T> linear(BasicVar<T> x, BasicVar<T> w, BasicVar<T> b = {});

/// Direct 2-D convolution with explicit zero padding.
/// x (N, C, H, W), w (O, C, K, K), b (O) or absent.
template <class T>
BasicVar<T> conv2d(BasicVar<T> x, BasicVar<T> w, BasicVar<T> b, int stride, int padding);

template <class T>
BasicVar<T> relu(BasicVar<T> x);
template <class T>
BasicVar<T> tanh(BasicVar<T> x);
/// Exact (erf) GELU.
template <class T>
BasicVar<T> gelu(BasicVar<T> x);
template <class T>
BasicVar<T> exp(BasicVar<T> x);
template <class T>
BasicVar<T> log(BasicVar<T> x);

/// Normalizes over the last axis, then applies per-feature gain and bias.
template <class T>
BasicVar<T> layernorm(BasicVar<T> x, BasicVar<T> gamma, BasicVar<T> beta, double eps = 1e-5);

/// Softmax over the last axis.
template <class T>
BasicVar<T> softmax(BasicVar<T> x);

/// Multi-head scaled dot-product attention. q, k, v are (N, L, E); heads must
/// divide E. Returns (N, L, E) with heads re-concatenated along E.
template <class T>
BasicVar<T> scaled_dot_attention(BasicVar<T> q, BasicVar<T> k, BasicVar<T> v, int heads);

/// Elementwise sum. `b` may also match a suffix of a's shape, in which case it
/// is repeated over the leading axes of `a`.
template <class T>
BasicVar<T> add(BasicVar<T> a, BasicVar<T> b);
template <class T>
BasicVar<T> sub(BasicVar<T> a, BasicVar<T> b);
template <class T>
BasicVar<T> mul(BasicVar<T> a, BasicVar<T> b);
template <class T>
BasicVar<T> scale(BasicVar<T> x, double c);
template <class T>
BasicVar<T> add_scalar(BasicVar<T> x, double c);
template <class T>
BasicVar<T> minimum(BasicVar<T> a, BasicVar<T> b);

/// Concatenates along the batch axis (axis 0).
template <class T>
BasicVar<T> concat_batch(BasicVar<T> a, BasicVar<T> b);
template <class T>
BasicVar<T> slice_batch(BasicVar<T> x, std::int64_t begin, std::int64_t end);

template <class T>
BasicVar<T> reshape(BasicVar<T> x, Shape shape);

/// (N, L, E) and token (E) -> (N, L + 1, E) with the token in slot 0.
template <class T>
BasicVar<T> prepend_token(BasicVar<T> x, BasicVar<T> token);
/// (N, L, E) -> (N, E), the slot `index`.
template <class T>
BasicVar<T> select_token(BasicVar<T> x, std::int64_t index);
/// (N, L, E) -> (N, E), averaged over L.
template <class T>
BasicVar<T> mean_tokens(BasicVar<T> x);

/// (N, A) -> (N): row i picks column index[i].
template <class T>
BasicVar<T> gather_cols(BasicVar<T> x, std::span<const int> index);
/// (N, P), (N, Q) -> (N, P + Q).
template <class T>
BasicVar<T> concat_cols(BasicVar<T> a, BasicVar<T> b);
/// (N, P) -> (N, end - begin).
template <class T>
BasicVar<T> slice_cols(BasicVar<T> x, std::int64_t begin, std::int64_t end);

/// Sum over the last axis, dropping it.
template <class T>
BasicVar<T> sum_last(BasicVar<T> x);
/// Mean of every element, as a scalar.
template <class T>
BasicVar<T> mean(BasicVar<T> x);

/// Half mean squared error: mean(0.5 * (pred - target)^2), a scalar.
template <class T>
BasicVar<T> mse(BasicVar<T> pred, BasicVar<T> target);

/// Diagonal Gaussian log-density summed over the last axis: (N, D) -> (N).
template <class T>
BasicVar<T> gaussian_logprob(BasicVar<T> x, BasicVar<T> mu, BasicVar<T> log_std);

}  // namespace svea::ops
