#include "acgm/dagmath.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace acgm::dagmath {

namespace {

void check_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError(std::string(who) + ": matrix must be square and nonempty");
  }
}

void check_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw ArgumentError(std::string(who) + ": matrix has non-finite entries");
  }
}

}  // namespace

void validate_adjacency(const Matrix& a) {
  check_square(a, "adjacency");
  check_finite(a, "adjacency");
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double v = a(i, j);
      if (v != 0.0 && v != 1.0) {
        throw ArgumentError("adjacency: entries must be exactly 0 or 1");
      }
      if (i == j && v != 0.0) {
        throw ArgumentError("adjacency: diagonal must be zero");
      }
    }
  }
}

void validate_weights(const Matrix& w) {
  check_square(w, "weights");
  check_finite(w, "weights");
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double v = w(i, j);
      if (v < 0.0 || v > 1.0) {
        throw ArgumentError("weights: entries must lie in [0,1]");
      }
      if (i == j && v != 0.0) {
        throw ArgumentError("weights: diagonal must be zero");
      }
    }
  }
}

double matexp_trace(const Matrix& b) {
  check_square(b, "matexp_trace");
  check_finite(b, "matexp_trace");
  if ((b.array() < 0.0).any()) {
    throw ArgumentError("matexp_trace: entries must be nonnegative");
  }
  const Eigen::Index d = b.rows();
  Matrix term = Matrix::Identity(d, d);
  double sum = static_cast<double>(d);  // trace of the m = 0 term
  const int max_terms = 4 * static_cast<int>(d);
  for (int m = 1; m <= max_terms; ++m) {
    term = (term * b) / static_cast<double>(m);
    sum += term.trace();
    // Gauge convergence on the whole term, not its trace: on a DAG every
    // power has zero trace while off-diagonal mass may remain.
    if (term.cwiseAbs().sum() < 1e-12 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

Matrix matexp(const Matrix& b) {
  check_square(b, "matexp");
  check_finite(b, "matexp");
  const Eigen::Index d = b.rows();
  Matrix term = Matrix::Identity(d, d);
  Matrix sum = term;
  const int max_terms = 4 * static_cast<int>(d) + 32;
  for (int m = 1; m <= max_terms; ++m) {
    term = (term * b) / static_cast<double>(m);
    sum += term;
    if (term.cwiseAbs().sum() < 1e-16 * std::max(1.0, sum.cwiseAbs().sum())) break;
  }
  return sum;
}

double acyclicity_value(const Matrix& w) {
  check_square(w, "acyclicity_value");
  return matexp_trace(w.cwiseProduct(w)) - static_cast<double>(w.rows());
}

Matrix acyclicity_grad(const Matrix& w) {
  check_square(w, "acyclicity_grad");
  check_finite(w, "acyclicity_grad");
  const Matrix e = matexp(w.cwiseProduct(w));
  return e.transpose().cwiseProduct(2.0 * w);
}

double depth_value(const Matrix& w, int k) {
  check_square(w, "depth_value");
  check_finite(w, "depth_value");
  if (k < 1) throw ArgumentError("depth_value: k must be >= 1");
  Matrix p = w;
  for (int m = 1; m < k; ++m) p = p * w;
  return p.sum();
}

Matrix depth_grad(const Matrix& w, int k) {
  check_square(w, "depth_grad");
  check_finite(w, "depth_grad");
  if (k < 1) throw ArgumentError("depth_grad: k must be >= 1");
  const Eigen::Index d = w.rows();
  // Precompute (W^T)^m for m = 0..k-1.
  std::vector<Matrix> powers;
  powers.reserve(k);
  powers.push_back(Matrix::Identity(d, d));
  const Matrix wt = w.transpose();
  for (int m = 1; m < k; ++m) powers.push_back(powers.back() * wt);
  const Matrix ones = Matrix::Ones(d, d);
  Matrix grad = Matrix::Zero(d, d);
  for (int m = 0; m < k; ++m) {
    grad += powers[m] * ones * powers[k - 1 - m];
  }
  return grad;
}

namespace {

enum class Color { White, Gray, Black };

// Iterative DFS that records the gray path; returns the cycle node sequence
// if a back edge is found. Nodes and neighbors are visited in ascending
// order, so the result is deterministic.
std::vector<int> dfs_find_cycle(const Matrix& a) {
  const int d = static_cast<int>(a.rows());
  std::vector<Color> color(d, Color::White);
  std::vector<int> path;

  struct Frame {
    int node;
    int next;  // next neighbor index to try
  };

  for (int start = 0; start < d; ++start) {
    if (color[start] != Color::White) continue;
    std::vector<Frame> stack{{start, 0}};
    color[start] = Color::Gray;
    path.push_back(start);
    while (!stack.empty()) {
      Frame& f = stack.back();
      bool descended = false;
      while (f.next < d) {
        const int j = f.next++;
        if (a(f.node, j) == 0.0) continue;
        if (color[j] == Color::Gray) {
          // cycle: slice the gray path from j to the current node
          auto it = std::find(path.begin(), path.end(), j);
          return std::vector<int>(it, path.end());
        }
        if (color[j] == Color::White) {
          color[j] = Color::Gray;
          path.push_back(j);
          stack.push_back({j, 0});
          descended = true;
          break;
        }
      }
      if (!descended && f.next >= d) {
        color[f.node] = Color::Black;
        path.pop_back();
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace

bool is_acyclic(const Matrix& a) {
  validate_adjacency(a);
  return dfs_find_cycle(a).empty();
}

std::vector<int> find_cycle(const Matrix& a) {
  validate_adjacency(a);
  return dfs_find_cycle(a);
}

std::vector<int> topological_order(const Matrix& a) {
  validate_adjacency(a);
  const int d = static_cast<int>(a.rows());
  std::vector<int> indegree(d, 0);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (a(i, j) != 0.0) ++indegree[j];
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < d; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(d);
  while (!ready.empty()) {
    const int i = ready.top();
    ready.pop();
    order.push_back(i);
    for (int j = 0; j < d; ++j) {
      if (a(i, j) != 0.0 && --indegree[j] == 0) ready.push(j);
    }
  }
  if (static_cast<int>(order.size()) != d) {
    throw CyclicGraphError("topological_order: input graph has a cycle");
  }
  return order;
}

std::optional<int> nilpotent_index(const Matrix& a) {
  validate_adjacency(a);
  const int d = static_cast<int>(a.rows());
  Matrix p = a;
  for (int k = 1; k <= d; ++k) {
    if (p.cwiseAbs().sum() == 0.0) return k;
    if (k < d) p = p * a;
  }
  return std::nullopt;
}

int longest_path_edges(const Matrix& a) {
  const std::vector<int> order = topological_order(a);  // validates + cycle check
  const int d = static_cast<int>(a.rows());
  std::vector<int> dist(d, 0);
  int best = 0;
  for (int i : order) {
    for (int j = 0; j < d; ++j) {
      if (a(i, j) != 0.0) {
        dist[j] = std::max(dist[j], dist[i] + 1);
        best = std::max(best, dist[j]);
      }
    }
  }
  return best;
}

std::vector<int> parents_of(const Matrix& a, int i) {
  validate_adjacency(a);
  if (i < 0 || i >= a.rows()) {
    throw ArgumentError("parents_of: agent index out of range");
  }
  std::vector<int> out;
  for (int j = 0; j < a.rows(); ++j) {
    if (a(j, i) != 0.0) out.push_back(j);
  }
  return out;
}

int edge_count(const Matrix& a) {
  validate_adjacency(a);
  return static_cast<int>(std::lround(a.sum()));
}

}  // namespace acgm::dagmath
