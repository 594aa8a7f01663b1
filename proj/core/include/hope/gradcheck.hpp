#pragma once

#include "hope/autodiff.hpp"
#include "hope/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace hope {

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates checked per parameter tensor; tensors smaller than this are
  // checked exhaustively.
  std::size_t coords_per_param = 32;
  // Gradients smaller than this are compared absolutely.
  double denominator_floor = 1e-3;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Builds the scalar loss on the given tape. Called once for the analytic
// gradient and twice per checked coordinate.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients against central differences.
///
/// The error for one coordinate is |analytic - fd| / max(floor, |analytic|, |fd|);
/// the result reports the maximum over all sampled coordinates. Parameter
/// values are restored and gradients zeroed before returning.
GradCheckResult grad_check(const LossBuilder& loss, std::span<const NamedParam> params,
                           const GradCheckOptions& options = {});

} // namespace hope
