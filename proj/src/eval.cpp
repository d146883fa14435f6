#include "wntf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace wntf {

namespace {

using Index = Eigen::Index;

void check_lengths(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("labelings differ in length");
  if (a.empty()) throw std::invalid_argument("labelings are empty");
}

// Compact relabeling to 0..k-1 in ascending label order.
std::vector<int> compact(std::span<const int> labels, int& classes) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  classes = next;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

struct Contingency {
  Matrix counts;  // predicted x truth
  double n = 0.0;
};

Contingency contingency(std::span<const int> predicted, std::span<const int> truth) {
  check_lengths(predicted, truth);
  int kp = 0;
  int kt = 0;
  const auto p = compact(predicted, kp);
  const auto t = compact(truth, kt);
  Contingency c{Matrix::Zero(kp, kt), static_cast<double>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i) c.counts(p[i], t[i]) += 1.0;
  return c;
}

double entropy(const Vector& counts, double n) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i)
    if (counts(i) > 0.0) h -= counts(i) / n * std::log(counts(i) / n);
  return h;
}

double mi_from(const Contingency& c) {
  const Vector rows = c.counts.rowwise().sum();
  const Vector cols = c.counts.colwise().sum().transpose();
  double mi = 0.0;
  for (Index j = 0; j < c.counts.cols(); ++j)
    for (Index i = 0; i < c.counts.rows(); ++i) {
      const double nij = c.counts(i, j);
      if (nij > 0.0) mi += nij / c.n * std::log(c.n * nij / (rows(i) * cols(j)));
    }
  return std::max(mi, 0.0);
}

double squared_distance(const Matrix& points, Index i, const Matrix& centroids, Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

KMeansResult lloyd(const Matrix& points, std::size_t k, std::mt19937_64& rng, int max_iters) {
  const Index n = points.rows();
  const auto kk = static_cast<Index>(k);
  Matrix centroids(kk, points.cols());

  // k-means++ seeding
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  Vector nearest(n);
  for (Index i = 0; i < n; ++i) nearest(i) = squared_distance(points, i, centroids, 0);
  for (Index c = 1; c < kk; ++c) {
    const double total = nearest.sum();
    Index pick = first(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> unit(0.0, total);
      const double target = unit(rng);
      double cumulative = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (nearest(i) <= 0.0) continue;
        cumulative += nearest(i);
        pick = i;
        if (cumulative > target) break;
      }
    }
    centroids.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i)
      nearest(i) = std::min(nearest(i), squared_distance(points, i, centroids, c));
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = squared_distance(points, i, centroids, 0);
      for (Index c = 1; c < kk; ++c) {
        const double d = squared_distance(points, i, centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    // repair empty clusters with the worst-fitted point
    std::vector<Index> sizes(k, 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (Index c = 0; c < kk; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(l)] < 2) continue;
        const double d = squared_distance(points, i, centroids, l);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) break;
      --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
      sizes[static_cast<std::size_t>(c)] = 1;
      changed = true;
    }
    centroids.setZero();
    for (Index i = 0; i < n; ++i) centroids.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
    for (Index c = 0; c < kk; ++c)
      if (sizes[static_cast<std::size_t>(c)] > 0)
        centroids.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    if (!changed) break;
  }

  KMeansResult r;
  r.labels = std::move(labels);
  r.centroids = std::move(centroids);
  for (Index i = 0; i < n; ++i)
    r.wcss += squared_distance(points, i, r.centroids, r.labels[static_cast<std::size_t>(i)]);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int restarts,
                    int max_iters) {
  if (k < 1 || static_cast<Index>(k) > points.rows())
    throw std::invalid_argument("kmeans: need 1 <= k <= number of points");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    KMeansResult candidate = lloyd(points, k, rng, max_iters);
    if (candidate.wcss < best.wcss) best = std::move(candidate);
  }
  return best;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  const Contingency c = contingency(predicted, truth);
  const Index size = std::max(c.counts.rows(), c.counts.cols());
  Matrix padded = Matrix::Zero(size, size);
  padded.topLeftCorner(c.counts.rows(), c.counts.cols()) = c.counts;
  const Matrix cost = padded.maxCoeff() - padded.array();
  const std::vector<int> match = solve_assignment(cost);
  double hits = 0.0;
  for (Index i = 0; i < size; ++i) hits += padded(i, match[static_cast<std::size_t>(i)]);
  return hits / c.n;
}

double mutual_information(std::span<const int> predicted, std::span<const int> truth) {
  return mi_from(contingency(predicted, truth));
}

namespace {

template <typename Norm>
double normalized(std::span<const int> predicted, std::span<const int> truth, Norm norm) {
  const Contingency c = contingency(predicted, truth);
  const double hp = entropy(c.counts.rowwise().sum(), c.n);
  const double ht = entropy(c.counts.colwise().sum().transpose(), c.n);
  const bool single_p = c.counts.rows() == 1;
  const bool single_t = c.counts.cols() == 1;
  if (single_p || single_t) return single_p && single_t ? 1.0 : 0.0;
  return std::clamp(mi_from(c) / norm(hp, ht), 0.0, 1.0);
}

}  // namespace

double normalized_mi(std::span<const int> predicted, std::span<const int> truth) {
  return normalized(predicted, truth, [](double a, double b) { return std::sqrt(a * b); });
}

double max_normalized_mi(std::span<const int> predicted, std::span<const int> truth) {
  return normalized(predicted, truth, [](double a, double b) { return std::max(a, b); });
}

double purity(std::span<const int> predicted, std::span<const int> truth) {
  const Contingency c = contingency(predicted, truth);
  return c.counts.rowwise().maxCoeff().sum() / c.n;
}

ClusteringScores score_clustering(std::span<const int> predicted, std::span<const int> truth) {
  ClusteringScores s;
  s.acc = accuracy(predicted, truth);
  s.nmi = normalized_mi(predicted, truth);
  s.mi = max_normalized_mi(predicted, truth);
  s.mi_raw = mutual_information(predicted, truth);
  s.purity = purity(predicted, truth);
  return s;
}

EvaluationSummary summarize(std::vector<std::pair<std::uint64_t, ClusteringScores>> runs) {
  if (runs.empty()) throw std::invalid_argument("summarize: no runs");
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  EvaluationSummary s;
  for (const auto& [seed, scores] : runs) {
    s.seeds.push_back(seed);
    s.per_seed.push_back(scores);
  }
  const auto stats = [&](double ClusteringScores::*field) {
    MetricStats m;
    for (const auto& r : s.per_seed) m.mean += r.*field;
    m.mean /= static_cast<double>(s.per_seed.size());
    if (s.per_seed.size() > 1) {
      double ss = 0.0;
      for (const auto& r : s.per_seed) ss += (r.*field - m.mean) * (r.*field - m.mean);
      m.stddev = std::sqrt(ss / static_cast<double>(s.per_seed.size() - 1));
    }
    return m;
  };
  s.acc = stats(&ClusteringScores::acc);
  s.nmi = stats(&ClusteringScores::nmi);
  s.mi = stats(&ClusteringScores::mi);
  s.mi_raw = stats(&ClusteringScores::mi_raw);
  s.purity = stats(&ClusteringScores::purity);
  return s;
}

EvaluationSummary evaluate_embedding(const Matrix& embedding, std::span<const int> truth,
                                     std::size_t k, std::span<const std::uint64_t> seeds,
                                     int restarts) {
  if (static_cast<std::size_t>(embedding.rows()) != truth.size())
    throw std::invalid_argument("evaluate_embedding: embedding rows must match labels");
  std::vector<std::pair<std::uint64_t, ClusteringScores>> runs;
  for (std::uint64_t seed : seeds) {
    const KMeansResult km = kmeans(embedding, k, seed, restarts);
    runs.emplace_back(seed, score_clustering(km.labels, truth));
  }
  return summarize(std::move(runs));
}

}  // namespace wntf
