#pragma once

#include <cstddef>
#include <iosfwd>

#include "wntf/tensor.hpp"

namespace wntf {

enum class Weighting { binary, heat };

struct KnnOptions {
  std::size_t p = 5;
  Weighting weighting = Weighting::binary;
  double sigma = 1.0;  // heat kernel width
};

// p-nearest-neighbour affinity over samples, symmetrized by union, no
// self-loops. degrees(i) is the row sum of weights.
struct AffinityGraph {
  Matrix weights;
  Vector degrees;
  KnnOptions options;

  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }
  Matrix laplacian() const;
};

// Rows of `samples` are the points. Euclidean distance; equal distances are
// broken toward the lower index.
AffinityGraph build_knn(const Matrix& samples, const KnnOptions& options);

// sum_{i,j} V_ij ||a_i - a_j||^2 over rows of `a`, as the explicit double sum.
double smoothness(const AffinityGraph& graph, const Matrix& a);

// The same quantity as 2 tr(A^T (D - V) A).
double smoothness_trace(const AffinityGraph& graph, const Matrix& a);

// "i,j,weight" header, one line per undirected edge with i < j.
void write_edge_list(const AffinityGraph& graph, std::ostream& out);

}  // namespace wntf
