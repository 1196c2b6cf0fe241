#include "svea/gradcheck_suite.hpp"

#include <functional>

#include "svea/networks.hpp"
#include "svea/ops.hpp"

namespace svea {
namespace {

constexpr double kEps = 1e-6;
// Smaller step for ReLU networks: a step of h crosses a kink with probability
// proportional to h.
constexpr double kNetworkEps = 1e-7;

using OpBuilder = std::function<Var64(Tape64&, const std::vector<Var64>&)>;

// Values in [lo, hi]; with `gap`, magnitudes stay at least `gap` away from 0.
Tensor64 random_tensor(const Shape& shape, Rng& rng, double lo, double hi, double gap = 0.0) {
  Tensor64 t(shape);
  for (auto& v : t.span()) {
    v = uniform(rng, lo, hi);
    if (gap > 0.0 && std::abs(v) < gap) v = v < 0 ? -gap - uniform(rng, 0.0, 0.5) : gap + uniform(rng, 0.0, 0.5);
  }
  return t;
}

GradCheckCase check_op(const std::string& name, std::vector<std::pair<std::string, Tensor64>> inputs,
                       const OpBuilder& op, std::uint64_t seed) {
  ParamStore64 store;
  for (auto& [n, t] : inputs) store.add(n, std::move(t));
  auto loss = [&](Tape64& tape, const ParamStore64& params) {
    std::vector<Var64> vars;
    for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(tape.param(params, i));
    Var64 out = op(tape, vars);
    Rng proj = make_stream(seed, "projection:" + name);
    Tensor64 r = random_tensor(out.shape(), proj, -1.0, 1.0);
    return ops::mean(ops::mul(out, tape.constant(std::move(r))));
  };
  return GradCheckCase{name, finite_diff_check(std::move(store), loss, kEps, 0, seed)};
}

}  // namespace

std::vector<GradCheckCase> gradcheck_primitives(std::uint64_t seed) {
  Rng rng = make_stream(seed, "gradcheck_inputs");
  auto r = [&](const Shape& s, double lo = -1.0, double hi = 1.0, double gap = 0.0) {
    return random_tensor(s, rng, lo, hi, gap);
  };
  std::vector<GradCheckCase> out;
  auto add = [&](const std::string& name, std::vector<std::pair<std::string, Tensor64>> in, OpBuilder f) {
    out.push_back(check_op(name, std::move(in), f, seed));
  };
  using V = const std::vector<Var64>&;

  add("linear", {{"x", r({3, 4})}, {"w", r({5, 4})}, {"b", r({5})}},
      [](Tape64&, V v) { return ops::linear(v[0], v[1], v[2]); });
  add("linear_3d", {{"x", r({2, 3, 4})}, {"w", r({5, 4})}},
      [](Tape64&, V v) { return ops::linear(v[0], v[1]); });
  add("conv2d_stride1_pad0", {{"x", r({2, 3, 6, 6})}, {"w", r({4, 3, 3, 3})}, {"b", r({4})}},
      [](Tape64&, V v) { return ops::conv2d(v[0], v[1], v[2], 1, 0); });
  add("conv2d_stride2_pad1", {{"x", r({2, 2, 7, 7})}, {"w", r({3, 2, 3, 3})}, {"b", r({3})}},
      [](Tape64&, V v) { return ops::conv2d(v[0], v[1], v[2], 2, 1); });
  add("relu", {{"x", r({4, 5}, -1.0, 1.0, 0.05)}}, [](Tape64&, V v) { return ops::relu(v[0]); });
  add("tanh", {{"x", r({4, 5}, -2.0, 2.0)}}, [](Tape64&, V v) { return ops::tanh(v[0]); });
  add("gelu", {{"x", r({4, 5}, -3.0, 3.0)}}, [](Tape64&, V v) { return ops::gelu(v[0]); });
  add("exp", {{"x", r({4, 5})}}, [](Tape64&, V v) { return ops::exp(v[0]); });
  add("log", {{"x", r({4, 5}, 0.3, 3.0)}}, [](Tape64&, V v) { return ops::log(v[0]); });
  add("layernorm", {{"x", r({3, 6}, -2.0, 2.0)}, {"g", r({6})}, {"b", r({6})}},
      [](Tape64&, V v) { return ops::layernorm(v[0], v[1], v[2]); });
  add("softmax", {{"x", r({3, 5}, -2.0, 2.0)}}, [](Tape64&, V v) { return ops::softmax(v[0]); });
  add("attention", {{"q", r({2, 4, 6})}, {"k", r({2, 4, 6})}, {"v", r({2, 4, 6})}},
      [](Tape64&, V v) { return ops::scaled_dot_attention(v[0], v[1], v[2], 2); });
  add("add", {{"a", r({3, 4})}, {"b", r({3, 4})}}, [](Tape64&, V v) { return ops::add(v[0], v[1]); });
  add("add_broadcast", {{"a", r({2, 3, 4})}, {"b", r({4})}}, [](Tape64&, V v) { return ops::add(v[0], v[1]); });
  add("sub", {{"a", r({3, 4})}, {"b", r({3, 4})}}, [](Tape64&, V v) { return ops::sub(v[0], v[1]); });
  add("mul", {{"a", r({3, 4})}, {"b", r({3, 4})}}, [](Tape64&, V v) { return ops::mul(v[0], v[1]); });
  add("scale", {{"x", r({3, 4})}}, [](Tape64&, V v) { return ops::scale(v[0], -1.7); });
  add("add_scalar", {{"x", r({3, 4})}}, [](Tape64&, V v) { return ops::add_scalar(v[0], 0.3); });
  {
    Tensor64 a = r({3, 4});
    Tensor64 b = a;
    for (auto& x : b.span()) x += uniform(rng, 0.0, 1.0) < 0.5 ? -uniform(rng, 0.2, 1.0) : uniform(rng, 0.2, 1.0);
    add("minimum", {{"a", a}, {"b", b}}, [](Tape64&, V v) { return ops::minimum(v[0], v[1]); });
  }
  add("concat_batch", {{"a", r({2, 3})}, {"b", r({3, 3})}},
      [](Tape64&, V v) { return ops::concat_batch(v[0], v[1]); });
  add("slice_batch", {{"x", r({5, 3})}}, [](Tape64&, V v) { return ops::slice_batch(v[0], 1, 4); });
  add("reshape", {{"x", r({2, 6})}}, [](Tape64&, V v) { return ops::reshape(v[0], Shape{3, 4}); });
  add("prepend_token", {{"x", r({2, 3, 4})}, {"t", r({4})}},
      [](Tape64&, V v) { return ops::prepend_token(v[0], v[1]); });
  add("select_token", {{"x", r({2, 3, 4})}}, [](Tape64&, V v) { return ops::select_token(v[0], 1); });
  add("mean_tokens", {{"x", r({2, 3, 4})}}, [](Tape64&, V v) { return ops::mean_tokens(v[0]); });
  {
    static const std::vector<int> index{2, 0, 1, 2};
    add("gather_cols", {{"x", r({4, 3})}}, [](Tape64&, V v) { return ops::gather_cols(v[0], std::span<const int>(index)); });
  }
  add("concat_cols", {{"a", r({3, 2})}, {"b", r({3, 4})}},
      [](Tape64&, V v) { return ops::concat_cols(v[0], v[1]); });
  add("slice_cols", {{"x", r({3, 6})}}, [](Tape64&, V v) { return ops::slice_cols(v[0], 2, 5); });
  add("sum_last", {{"x", r({3, 4})}}, [](Tape64&, V v) { return ops::sum_last(v[0]); });
  add("mean", {{"x", r({3, 4})}}, [](Tape64&, V v) { return ops::mean(v[0]); });
  add("mse", {{"p", r({5})}, {"t", r({5})}}, [](Tape64&, V v) { return ops::mse(v[0], v[1]); });
  add("gaussian_logprob", {{"x", r({3, 2})}, {"mu", r({3, 2})}, {"log_std", r({3, 2}, -1.0, 0.5)}},
      [](Tape64&, V v) { return ops::gaussian_logprob(v[0], v[1], v[2]); });
  return out;
}

GradCheckCase gradcheck_critic(const std::string& name, const EncoderConfig& encoder, int hidden,
                               std::int64_t max_coords, std::uint64_t seed) {
  constexpr int kActions = 3;
  Rng init = make_stream(seed, "gradcheck_init");
  ParamStore store;
  init_encoder_params(encoder, store, "encoder.", init);
  init_mlp(store, "q.", encoder.output_dim(), hidden, kActions, 3, init);
  Rng data = make_stream(seed, "gradcheck_data");
  const Tensor64 obs = random_tensor(Shape{2, encoder.in_channels, encoder.height, encoder.width}, data, 0.0, 1.0);
  const Tensor64 target = random_tensor(Shape{2}, data, -1.0, 1.0);
  static const std::vector<int> actions{0, 2};
  auto loss = [&](Tape64& tape, const ParamStore64& params) {
    Var64 f = encode(encoder, tape, params, "encoder.", obs);
    Var64 q = mlp(tape, params, "q.", f, 3);
    return ops::mse(ops::gather_cols(q, std::span<const int>(actions)), tape.constant(target));
  };
  return GradCheckCase{name, finite_diff_check(store.cast<double>(), loss, kNetworkEps, max_coords, seed)};
}

std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed) {
  std::vector<GradCheckCase> out = gradcheck_primitives(seed);
  out.push_back(gradcheck_critic("desk_cnn_critic", EncoderConfig::desk_cnn(), 256, 24, seed));
  out.push_back(gradcheck_critic("desk_vit_critic", EncoderConfig::desk_vit(), 256, 24, seed));
  return out;
}

}  // namespace svea
