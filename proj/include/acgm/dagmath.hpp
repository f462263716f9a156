#pragma once

#include "acgm/common.hpp"

#include <optional>
#include <vector>

namespace acgm::dagmath {

// A square matrix is an adjacency matrix when every entry is exactly 0 or 1
// and the diagonal is zero. Edge convention: A(j, i) == 1 means j -> i,
// i.e. row index is the source and j is a parent of i.
void validate_adjacency(const Matrix& a);

// Weight matrices hold edge probabilities: entries in [0, 1], zero diagonal.
void validate_weights(const Matrix& w);

// trace(e^B) for entrywise nonnegative B via the power series
// sum_m trace(B^m)/m!. Terminates once the current term is negligible
// (entrywise sum below 1e-12 * max(1, accumulated trace)) or after 4*d
// terms. Exact for nilpotent B, where the terms vanish identically.
double matexp_trace(const Matrix& b);

// Full matrix exponential by the same series, run to numerical convergence.
Matrix matexp(const Matrix& b);

// trace(e^{W o W}) - d; zero exactly on matrices whose support is acyclic.
double acyclicity_value(const Matrix& w);

// Gradient of acyclicity_value: (e^{W o W})^T o 2W (o = Hadamard product).
Matrix acyclicity_grad(const Matrix& w);

// sum of all entries of W^k; counts length-k walks when W is binary.
double depth_value(const Matrix& w, int k);

// Exact gradient of depth_value, valid for singular W:
// sum_{m=0}^{k-1} (W^T)^m J (W^T)^{k-1-m} with J the all-ones matrix.
Matrix depth_grad(const Matrix& w, int k);

// DFS with three-color marking.
bool is_acyclic(const Matrix& a);

// Nodes of some directed cycle in order (first node repeated implicitly),
// or empty if the graph is acyclic. Deterministic for a given matrix.
std::vector<int> find_cycle(const Matrix& a);

// Kahn's algorithm; ties among zero-indegree nodes broken by lowest index.
// Throws CyclicGraphError on cyclic input.
std::vector<int> topological_order(const Matrix& a);

// Smallest k <= d with A^k = 0, or nullopt when the graph is cyclic.
std::optional<int> nilpotent_index(const Matrix& a);

// Length in edges of the longest directed path; requires acyclic input.
int longest_path_edges(const Matrix& a);

// { j : A(j, i) == 1 }
std::vector<int> parents_of(const Matrix& a, int i);

int edge_count(const Matrix& a);

}  // namespace acgm::dagmath
