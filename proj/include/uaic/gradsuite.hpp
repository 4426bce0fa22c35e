#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uaic/optim.hpp"

namespace uaic::nc {

struct GradSuiteResult {
    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
};

/// Finite-difference checks of every graph primitive (through a fixed
/// random projection to a scalar), a masked transformer block, and the
/// estimator, insertion, AR and one-shot losses at width 8.
std::vector<GradSuiteResult> run_gradient_suite(std::uint64_t seed = 17);

} // namespace uaic::nc
