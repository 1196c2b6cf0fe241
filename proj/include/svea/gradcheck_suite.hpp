#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svea/encoders.hpp"
#include "svea/gradcheck.hpp"

namespace svea {

inline constexpr double kGradTolerance = 1e-3;

struct GradCheckCase {
  std::string name;
  GradCheckReport report;
  bool passed() const { return report.max_rel_error <= kGradTolerance; }
};

/// One case per differentiable primitive, on small random inputs kept away
/// from kinks. The loss is a fixed random projection of the primitive output.
std::vector<GradCheckCase> gradcheck_primitives(std::uint64_t seed);

/// Encoder plus a DQN head under a half-squared TD loss on a batch of two
/// random observations. `max_coords` caps the coordinates per tensor (0: all).
GradCheckCase gradcheck_critic(const std::string& name, const EncoderConfig& encoder, int hidden,
                               std::int64_t max_coords, std::uint64_t seed);

/// Primitives, the desk CNN critic and the desk ViT critic.
std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed);

}  // namespace svea
