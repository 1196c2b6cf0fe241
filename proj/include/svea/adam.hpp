#pragma once

#include "svea/param_store.hpp"

namespace svea {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam step over every entry of `params` (no weight decay,
/// no clipping). Throws NumericError and leaves `params` untouched when any
/// gradient entry is non-finite.
void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg);

}  // namespace svea
