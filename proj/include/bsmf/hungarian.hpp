// Kuhn-Munkres assignment for dense square cost matrices.
#pragma once

#include "bsmf/core.hpp"

#include <vector>

namespace bsmf {

/// Minimum-cost perfect matching. Returns assignment[i] = column matched to row i.
std::vector<int> solve_assignment(const Matrix& cost);

}  // namespace bsmf
