#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "wntf/eval.hpp"

using namespace wntf;

namespace {

// Direct count from the joint histogram, in nats.
double mi_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [k, p] : joint) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  return mi;
}

std::vector<int> relabel(const std::vector<int>& labels, std::mt19937_64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> out;
  for (int l : labels) out.push_back(perm[static_cast<std::size_t>(l)] + 10);
  return out;
}

}  // namespace

TEST_CASE("kmeans examples") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.1);
  Matrix blobs(40, 2);
  std::vector<int> truth;
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double c = i < 20 ? 0.0 : 10.0;
    blobs(i, 0) = c + n(rng);
    blobs(i, 1) = c + n(rng);
    truth.push_back(i < 20 ? 0 : 1);
  }
  const KMeansResult two = kmeans(blobs, 2, 3);
  CHECK(accuracy(two.labels, truth) == 1.0);

  const KMeansResult one = kmeans(blobs, 1, 3);
  CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 0; }));
  const Eigen::RowVectorXd mean = blobs.colwise().mean();
  CHECK((one.centroids.row(0) - mean).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix pts = oracle::random_matrix(7, 3, rng);
  const KMeansResult all = kmeans(pts, 7, 5);
  CHECK(all.wcss == 0.0);
  std::vector<int> sorted = all.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::unique(sorted.begin(), sorted.end()) == sorted.end());

  const KMeansResult a = kmeans(pts, 3, 9), b = kmeans(pts, 3, 9);
  CHECK(a.labels == b.labels);
  CHECK(a.wcss == b.wcss);

  // Duplicate points force empty clusters during seeding and Lloyd steps.
  Matrix dup = Matrix::Zero(6, 2);
  dup.row(5) << 1.0, 1.0;
  const KMeansResult repaired = kmeans(dup, 3, 0);
  CHECK(repaired.labels.size() == 6);
  CHECK(std::isfinite(repaired.wcss));

  CHECK_THROWS(kmeans(pts, 8, 0));
  CHECK_THROWS(kmeans(pts, 0, 0));
}

TEST_CASE("solve_assignment matches brute force on small matrices") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index k = 1 + t % 6;
    const Matrix c = oracle::random_matrix(k, k, rng);
    const std::vector<int> got = solve_assignment(c);
    double got_cost = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) got_cost += c(i, got[static_cast<std::size_t>(i)]);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) s += c(i, perm[static_cast<std::size_t>(i)]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got_cost == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("metric hand examples") {
  const std::vector<int> t{0, 0, 1, 1};
  CHECK(accuracy(t, t) == 1.0);
  CHECK(accuracy(std::vector<int>{1, 1, 0, 0}, t) == 1.0);
  CHECK(accuracy(std::vector<int>{0, 1, 1, 1}, t) == 0.75);
  CHECK(std::abs(mutual_information(std::vector<int>{0, 1, 0, 1}, t)) < 1e-15);
  CHECK(normalized_mi(t, t) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(purity(t, t) == 1.0);
  CHECK(purity(std::vector<int>{5, 5, 5, 5}, t) == 0.5);
  CHECK(purity(std::vector<int>{0, 0, 0, 1, 1, 1}, std::vector<int>{0, 0, 1, 1, 2, 2}) == 4.0 / 6.0);
  CHECK(mutual_information(t, t) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const std::vector<int> single{3, 3, 3, 3};
  CHECK(normalized_mi(single, single) == 1.0);
  CHECK(normalized_mi(t, single) == 0.0);
  CHECK(max_normalized_mi(single, single) == 1.0);
  CHECK(max_normalized_mi(single, t) == 0.0);
  CHECK_THROWS(accuracy(t, std::vector<int>{0, 1}));
  CHECK_THROWS(normalized_mi(t, std::vector<int>{0, 1}));
  CHECK_THROWS(purity(t, std::vector<int>{0, 1}));
}

TEST_CASE("metric properties on random labelings") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int kp = 1 + trial % 6, kt = 1 + (trial / 6) % 6;
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 30);
    const std::vector<int> p = oracle::random_labels(n, kp, rng);
    const std::vector<int> t = oracle::random_labels(n, kt, rng);
    const double acc = accuracy(p, t);
    CHECK(acc == doctest::Approx(oracle::accuracy_bruteforce(p, t)).epsilon(1e-15));
    CHECK(purity(p, t) >= acc);
    CHECK(normalized_mi(p, t) == doctest::Approx(normalized_mi(t, p)).epsilon(1e-14));
    CHECK(std::abs(mutual_information(p, t) - mi_oracle(p, t)) <= 1e-12 * (1.0 + mi_oracle(p, t)));

    const std::vector<int> q = relabel(p, rng);
    CHECK(accuracy(q, t) == acc);
    CHECK(purity(q, t) == purity(p, t));
    CHECK(normalized_mi(q, t) == doctest::Approx(normalized_mi(p, t)).epsilon(1e-14));

    const ClusteringScores s = score_clustering(p, t);
    for (double v : {s.acc, s.nmi, s.mi, s.purity}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-15);
    }
    CHECK(s.mi <= s.nmi + 1e-15);
  }
}

TEST_CASE("independent labelings have vanishing NMI") {
  std::mt19937_64 rng(4);
  const std::vector<int> a = oracle::random_labels(10000, 5, rng);
  const std::vector<int> b = oracle::random_labels(10000, 5, rng);
  CHECK(normalized_mi(a, b) <= 0.05);
}

TEST_CASE("summarize and evaluate_embedding") {
  std::vector<std::pair<std::uint64_t, ClusteringScores>> runs{
      {3, {0.5, 0.4, 0.3, 0.6, 0.7}}, {1, {1.0, 1.0, 1.0, 1.0, 1.0}}, {2, {0.75, 0.6, 0.5, 0.8, 0.8}}};
  const EvaluationSummary s = summarize(runs);
  std::reverse(runs.begin(), runs.end());
  const EvaluationSummary r = summarize(runs);
  CHECK(s.acc.mean == r.acc.mean);
  CHECK(s.acc.stddev == r.acc.stddev);
  CHECK(s.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(s.acc.mean == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s.acc.stddev == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(summarize({{7, {0.5, 0.5, 0.5, 0.5, 0.5}}}).acc.stddev == 0.0);

  const std::vector<int> truth{0, 0, 1, 1, 2, 2, 2};
  Matrix onehot = Matrix::Zero(7, 3);
  for (Eigen::Index i = 0; i < 7; ++i) onehot(i, truth[static_cast<std::size_t>(i)]) = 1.0;
  const std::vector<std::uint64_t> seeds{4, 1, 9};
  const EvaluationSummary e = evaluate_embedding(onehot, truth, 3, seeds);
  for (const ClusteringScores& c : e.per_seed) {
    CHECK(c.acc == 1.0);
    CHECK(c.nmi == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.purity == 1.0);
  }

  std::mt19937_64 rng(5);
  const Matrix emb = oracle::random_matrix(30, 3, rng);
  const std::vector<int> t = oracle::random_labels(30, 3, rng);
  const std::vector<std::uint64_t> one{6};
  const EvaluationSummary single = evaluate_embedding(emb, t, 3, one);
  const KMeansResult km = kmeans(emb, 3, 6);
  CHECK(single.acc.mean == accuracy(km.labels, t));
  CHECK(single.nmi.mean == normalized_mi(km.labels, t));

  const std::vector<std::uint64_t> fwd{1, 2, 3, 4}, back{4, 3, 2, 1};
  const EvaluationSummary f = evaluate_embedding(emb, t, 3, fwd);
  const EvaluationSummary b = evaluate_embedding(emb, t, 3, back);
  CHECK(f.acc.mean == b.acc.mean);
  CHECK(f.nmi.mean == b.nmi.mean);
  CHECK(f.purity.stddev == b.purity.stddev);
}
