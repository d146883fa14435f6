#include "wntf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "wntf/parallel.hpp"

namespace wntf {

Matrix AffinityGraph::laplacian() const {
  Matrix l = -weights;
  l.diagonal() += degrees;
  return l;
}

AffinityGraph build_knn(const Matrix& samples, const KnnOptions& options) {
  const Eigen::Index n = samples.rows();
  if (options.p < 1 || static_cast<Eigen::Index>(options.p) >= n)
    throw std::invalid_argument("build_knn: need 1 <= p < number of samples");
  if (options.weighting == Weighting::heat && !(options.sigma > 0.0))
    throw std::invalid_argument("build_knn: heat weighting needs sigma > 0");

  Matrix dist2(n, n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) dist2(i, j) = (samples.row(i) - samples.row(j)).squaredNorm();

  Matrix directed = Matrix::Zero(n, n);
  const auto p = static_cast<std::ptrdiff_t>(options.p);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + p, order.end(),
                      [&](Eigen::Index x, Eigen::Index y) {
                        if (dist2(i, x) != dist2(i, y)) return dist2(i, x) < dist2(i, y);
                        return x < y;
                      });
    for (std::ptrdiff_t k = 0; k < p; ++k) directed(i, order[static_cast<std::size_t>(k)]) = 1.0;
  }

  AffinityGraph g;
  g.options = options;
  g.weights = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      if (directed(i, j) == 0.0 && directed(j, i) == 0.0) continue;
      g.weights(i, j) = options.weighting == Weighting::binary
                            ? 1.0
                            : std::exp(-dist2(i, j) / (options.sigma * options.sigma));
    }
  g.degrees = g.weights.rowwise().sum();
  return g;
}

double smoothness(const AffinityGraph& graph, const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (static_cast<std::size_t>(n) != graph.size())
    throw std::invalid_argument("smoothness: graph and factor disagree on sample count");
  std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = graph.weights(i, j);
      if (w != 0.0) acc += w * (a.row(i) - a.row(j)).squaredNorm();
    }
    rows[static_cast<std::size_t>(i)] = acc;
  }
  return std::accumulate(rows.begin(), rows.end(), 0.0);
}

double smoothness_trace(const AffinityGraph& graph, const Matrix& a) {
  if (static_cast<std::size_t>(a.rows()) != graph.size())
    throw std::invalid_argument("smoothness_trace: graph and factor disagree on sample count");
  return 2.0 * (a.transpose() * graph.laplacian() * a).trace();
}

void write_edge_list(const AffinityGraph& graph, std::ostream& out) {
  out << "i,j,weight\n";
  const Eigen::Index n = graph.weights.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (graph.weights(i, j) != 0.0) out << i << ',' << j << ',' << graph.weights(i, j) << '\n';
}

}  // namespace wntf
