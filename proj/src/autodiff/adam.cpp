#include "svea/adam.hpp"

#include <cmath>

namespace svea {

void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg) {
  if (grads.size() != params.size()) {
    throw UsageError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params.value(i).shape()) {
      throw UsageError("adam_step: gradient shape " + shape_str(grads[i].shape()) + " for parameter '" +
                       params.name(i) + "' of shape " + shape_str(params.value(i).shape()));
    }
    if (!grads[i].all_finite()) {
      throw NumericError("adam_step aborted: non-finite gradient for '" + params.name(i) + "' at step " +
                         std::to_string(params.step()));
    }
  }
  params.advance_step();
  const double t = static_cast<double>(params.step());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
  const float step_size = static_cast<float>(cfg.lr / bc1);
  const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
  const float eps = static_cast<float>(cfg.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params.entry(i);
    if (e.m.shape() != e.value.shape()) {
      e.m = Tensor(e.value.shape());
      e.v = Tensor(e.value.shape());
    }
    const auto& g = grads[i];
    for (std::int64_t j = 0; j < g.numel(); ++j) {
      e.m[j] = b1 * e.m[j] + (1.0f - b1) * g[j];
      e.v[j] = b2 * e.v[j] + (1.0f - b2) * g[j] * g[j];
      e.value[j] -= step_size * e.m[j] / (std::sqrt(e.v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

}  // namespace svea
