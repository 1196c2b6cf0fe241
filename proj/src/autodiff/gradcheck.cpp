#include "svea/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "svea/rng.hpp"

namespace svea {
namespace {

double eval_loss(const ParamStore64& params, const LossBuilder64& loss) {
  Tape64 tape;
  return loss(tape, params).value().item();
}

}  // namespace

GradCheckReport finite_diff_check(ParamStore64 params, const LossBuilder64& loss, double eps,
                                  std::int64_t max_coords, std::uint64_t seed) {
  Gradients64 analytic;
  {
    Tape64 tape;
    Var64 l = loss(tape, params);
    tape.backward(l);
    analytic = tape.gradients(params);
  }

  // Coordinate list (entry, offset); with a cap, each entry keeps a seeded subset.
  std::vector<std::pair<std::size_t, std::int64_t>> coords;
  Rng rng = make_stream(seed, "gradcheck");
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<std::int64_t> offsets(static_cast<std::size_t>(params.value(i).numel()));
    std::iota(offsets.begin(), offsets.end(), std::int64_t{0});
    if (max_coords > 0 && static_cast<std::int64_t>(offsets.size()) > max_coords) {
      std::shuffle(offsets.begin(), offsets.end(), rng);
      offsets.resize(static_cast<std::size_t>(max_coords));
      std::sort(offsets.begin(), offsets.end());
    }
    for (std::int64_t j : offsets) coords.emplace_back(i, j);
  }

  GradCheckReport report;
  for (auto [i, j] : coords) {
    double& w = params.value(i)[j];
    const double saved = w;
    w = saved + eps;
    const double up = eval_loss(params, loss);
    w = saved - eps;
    const double down = eval_loss(params, loss);
    w = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i][j];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    ++report.coords_checked;
    if (rel > report.max_rel_error || report.worst_index < 0) {
      report.max_rel_error = rel;
      report.worst_param = params.name(i);
      report.worst_index = j;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace svea
