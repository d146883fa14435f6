#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wntf/tensor.hpp"

namespace wntf {

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;  // k x d
  double wcss = 0.0;
};

// Lloyd iterations from k-means++ seeds, best of `restarts` by within-cluster
// sum of squares (ties go to the earliest restart). Rows of `points` are the
// observations. An empty cluster is reseeded with the point farthest from
// its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int restarts = 10,
                    int max_iters = 300);

// Minimum-cost perfect assignment on a square matrix; result[row] = column.
std::vector<int> solve_assignment(const Matrix& cost);

// Fraction matched under the best bijection between predicted and true labels.
double accuracy(std::span<const int> predicted, std::span<const int> truth);
// Mutual information in nats.
double mutual_information(std::span<const int> predicted, std::span<const int> truth);
// MI / sqrt(H(pred) H(truth)). If either labelling has a single class the
// value is 1 when both do, else 0.
double normalized_mi(std::span<const int> predicted, std::span<const int> truth);
// MI / max(H(pred), H(truth)): the "MI" column reported alongside NMI. Same
// single-class convention as normalized_mi.
double max_normalized_mi(std::span<const int> predicted, std::span<const int> truth);
double purity(std::span<const int> predicted, std::span<const int> truth);

struct ClusteringScores {
  double acc = 0.0;
  double nmi = 0.0;
  double mi = 0.0;  // max-entropy normalized
  double mi_raw = 0.0;
  double purity = 0.0;
};

ClusteringScores score_clustering(std::span<const int> predicted, std::span<const int> truth);

struct ClusteringResult {
  std::vector<int> predicted;
  std::vector<int> truth;
  ClusteringScores scores;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct EvaluationSummary {
  MetricStats acc, nmi, mi, mi_raw, purity;
  std::vector<std::uint64_t> seeds;           // ascending
  std::vector<ClusteringScores> per_seed;     // aligned with seeds
};

// Aggregates per-seed scores; the result does not depend on input order.
EvaluationSummary summarize(std::vector<std::pair<std::uint64_t, ClusteringScores>> runs);

// k-means on the rows of `embedding` once per seed, scored against `truth`.
EvaluationSummary evaluate_embedding(const Matrix& embedding, std::span<const int> truth,
                                     std::size_t k, std::span<const std::uint64_t> seeds,
                                     int restarts = 10);

}  // namespace wntf
