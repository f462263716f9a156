#pragma once

#include "acgm/common.hpp"

namespace acgm {

// Fixed 10-node baseline DAG used for robustness comparisons against the
// learned graphs. Checked on every call: exactly 28 edges and acyclic.
Matrix fixed_baseline_dag();

inline constexpr int kFixedBaselineEdges = 28;

}  // namespace acgm
