#pragma once

#include "hope/gradcheck.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hope {

enum class GradCheckTarget { layers, unet, pipeline };

std::string to_string(GradCheckTarget target);
GradCheckTarget parse_gradcheck_target(const std::string& name);

struct GradCheckCase {
  std::string name;
  GradCheckResult result;
};

// layers:   every differentiable op and graph layer on small random inputs
// unet:     the U-Net with each pooling kind, plus the two baseline lifters
// pipeline: stub encoder, refinement net and the full default cascade
//
// Inputs are checked alongside parameters where a layer has none of its own.
std::vector<GradCheckCase> run_gradcheck_suite(GradCheckTarget target, std::uint64_t seed = 0,
                                               const GradCheckOptions& options = {});

} // namespace hope
