#pragma once

#include <string>

#include "svea/param_store.hpp"
#include "svea/rng.hpp"
#include "svea/tape.hpp"

namespace svea {

/// Registers `layers` fully connected layers under `prefix` ("fc0", "fc1", ...):
/// in -> hidden -> ... -> hidden -> out.
void init_mlp(ParamStore& store, const std::string& prefix, int in, int hidden, int out, int layers, Rng& rng);

/// Forward pass of an init_mlp network: relu between layers, linear output.
template <class T>
BasicVar<T> mlp(BasicTape<T>& tape, const BasicParamStore<T>& params, const std::string& prefix, BasicVar<T> x,
                int layers);

}  // namespace svea
