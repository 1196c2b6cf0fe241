#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "svea/tape.hpp"

namespace svea {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::int64_t coords_checked = 0;
};

/// Builds a scalar loss on a fresh tape from the given parameters.
using LossBuilder64 = std::function<Var64(Tape64&, const ParamStore64&)>;

/// Compares reverse-mode gradients against central differences, everything in
/// double precision. Relative error per coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8); the maximum is
/// returned. When `max_coords` is positive, each parameter tensor larger than
/// that contributes a seeded uniform subset of `max_coords` coordinates
/// instead of all of them, so every tensor is still covered.
GradCheckReport finite_diff_check(ParamStore64 params, const LossBuilder64& loss, double eps,
                                  std::int64_t max_coords = 0, std::uint64_t seed = 0);

}  // namespace svea
