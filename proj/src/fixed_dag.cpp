#include "acgm/fixed_dag.hpp"

#include "acgm/dagmath.hpp"

namespace acgm {

Matrix fixed_baseline_dag() {
  static const int rows[10][10] = {
      {0, 1, 0, 1, 0, 1, 1, 0, 1, 0},
      {0, 0, 0, 1, 0, 1, 1, 0, 1, 0},
      {0, 1, 0, 1, 0, 1, 1, 0, 1, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 1, 0, 1, 0, 0, 0, 0, 1, 0},
      {0, 0, 0, 1, 0, 0, 0, 0, 1, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 1, 0, 1, 0, 1, 1, 0, 1, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 1, 0, 1, 0, 1, 0, 0, 1, 0},
  };
  Matrix a(10, 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) a(i, j) = static_cast<double>(rows[i][j]);
  }
  if (dagmath::edge_count(a) != kFixedBaselineEdges) {
    throw FormatError("fixed baseline DAG corrupted: edge count != 28");
  }
  if (!dagmath::is_acyclic(a)) {
    throw FormatError("fixed baseline DAG corrupted: graph is cyclic");
  }
  return a;
}

}  // namespace acgm
