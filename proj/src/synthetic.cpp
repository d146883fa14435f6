#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "wntf/experiment.hpp"

namespace wntf {

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.sample_shape.empty()) throw std::invalid_argument("synthetic: empty sample shape");
  if (spec.clusters == 0 || spec.per_cluster == 0)
    throw std::invalid_argument("synthetic: clusters and per_cluster must be positive");
  if (!(spec.noise >= 0.0)) throw std::invalid_argument("synthetic: noise must be >= 0");
  for (std::size_t e : spec.sample_shape)
    if (e == 0) throw std::invalid_argument("synthetic: zero extent");

  std::mt19937_64 rng(spec.seed);
  const std::size_t features = element_count(spec.sample_shape);

  std::vector<std::vector<double>> templates(spec.clusters, std::vector<double>(features, 1.0));
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    std::size_t stride = 1;
    for (std::size_t extent : spec.sample_shape) {
      std::uniform_real_distribution<double> centre_dist(0.0, static_cast<double>(extent));
      std::uniform_real_distribution<double> width_dist(1.0, 3.0);
      const double centre = centre_dist(rng);
      const double width = width_dist(rng);
      for (std::size_t f = 0; f < features; ++f) {
        const double i = static_cast<double>((f / stride) % extent);
        templates[c][f] *= std::exp(-(i - centre) * (i - centre) / (2.0 * width * width));
      }
      stride *= extent;
    }
  }

  const std::size_t samples = spec.clusters * spec.per_cluster;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(samples);
  labels.reserve(samples);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t s = 0; s < spec.per_cluster; ++s) {
      std::vector<double> row(templates[c]);
      if (spec.noise > 0.0)
        for (double& v : row) v = std::max(0.0, v + spec.noise * gauss(rng));
      rows.push_back(std::move(row));
      labels.push_back(static_cast<int>(c));
    }
  }

  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Shape shape = spec.sample_shape;
  shape.push_back(samples);
  std::vector<double> values(features * samples);
  std::vector<int> shuffled(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    std::copy(rows[order[s]].begin(), rows[order[s]].end(), values.begin() + s * features);
    shuffled[s] = labels[order[s]];
  }
  return Dataset{DataTensor(std::move(shape), std::move(values)), std::move(shuffled)};
}

}  // namespace wntf
