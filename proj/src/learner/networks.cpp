#include "svea/networks.hpp"

#include <cmath>

#include "svea/errors.hpp"
#include "svea/ops.hpp"

namespace svea {

void init_mlp(ParamStore& store, const std::string& prefix, int in, int hidden, int out, int layers, Rng& rng) {
  if (layers < 1 || in < 1 || out < 1 || (layers > 1 && hidden < 1))
    throw ConfigError("mlp '" + prefix + "' needs positive sizes and at least one layer");
  for (int l = 0; l < layers; ++l) {
    const int fan_in = l == 0 ? in : hidden;
    const int fan_out = l == layers - 1 ? out : hidden;
    const float bound = static_cast<float>(1.0 / std::sqrt(static_cast<double>(fan_in)));
    std::uniform_real_distribution<float> dist(-bound, bound);
    Tensor w(Shape{fan_out, fan_in});
    for (auto& v : w.span()) v = dist(rng);
    const std::string name = prefix + "fc" + std::to_string(l);
    store.add(name + ".w", std::move(w));
    store.add(name + ".b", Tensor(Shape{fan_out}, 0.0f));
  }
}

template <class T>
BasicVar<T> mlp(BasicTape<T>& tape, const BasicParamStore<T>& params, const std::string& prefix, BasicVar<T> x,
                int layers) {
  for (int l = 0; l < layers; ++l) {
    const std::string name = prefix + "fc" + std::to_string(l);
    x = ops::linear(x, tape.param(params, name + ".w"), tape.param(params, name + ".b"));
    if (l + 1 < layers) x = ops::relu(x);
  }
  return x;
}

template BasicVar<float> mlp(BasicTape<float>&, const BasicParamStore<float>&, const std::string&, BasicVar<float>,
                             int);
template BasicVar<double> mlp(BasicTape<double>&, const BasicParamStore<double>&, const std::string&,
                              BasicVar<double>, int);

}  // namespace svea
