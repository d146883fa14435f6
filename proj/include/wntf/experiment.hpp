#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wntf/eval.hpp"
#include "wntf/factorize.hpp"
#include "wntf/tensor.hpp"

namespace wntf {

struct Dataset {
  DataTensor tensor;
  std::vector<int> labels;  // one per sample (last mode)
};

// Generative recipe:
//   For each cluster c and each spatial mode n, draw a centre uniform on
//   [0, I_n) and a width uniform on [1, 3]; the template is the outer product
//   of the Gaussian bumps exp(-(i - centre)^2 / (2 width^2)).
//   Each sample is max(0, template + noise * N(0, 1)), per_cluster samples
//   per cluster, then the samples are shuffled.
// All draws come from one mt19937_64(seed) in that order.
struct SyntheticSpec {
  Shape sample_shape{8, 8};
  std::size_t clusters = 3;
  std::size_t per_cluster = 20;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticSpec& spec);

enum class DataFormat { wntf, csv };
DataFormat parse_format(const std::string& text);

// Reads a tensor (samples along the last mode) and its labels, then scales
// the values to [0, 1] by the global max. `sample_shape` is required for csv.
// Labels default to the dataset path with extension ".labels".
Dataset ingest(const std::filesystem::path& path, DataFormat format, const Shape& sample_shape,
               const std::optional<std::filesystem::path>& labels = std::nullopt);

std::filesystem::path default_labels_path(const std::filesystem::path& dataset);

enum class Algorithm { kmeans, nmf, gnmf, ncp, gncp, gwntf };
Algorithm parse_algorithm(const std::string& text);
std::string to_string(Algorithm a);

struct ExperimentConfig {
  // Data. dataset == "synthetic" generates data from the synth-* keys.
  std::string dataset = "synthetic";
  DataFormat format = DataFormat::wntf;
  Shape shape;         // per-sample shape for csv input
  std::string labels;  // empty: default_labels_path(dataset)
  SyntheticSpec synthetic;

  Algorithm algorithm = Algorithm::gwntf;
  std::size_t rank = 0;      // 0: number of clusters
  std::size_t clusters = 0;  // 0: distinct labels in the data

  double lambda = 100.0;
  double alpha = 1.0;
  double beta = 1.0;
  double mu = 1e4;
  std::size_t p_neighbors = 5;
  Weighting weighting = Weighting::binary;
  double sigma = 1.0;
  int sinkhorn_iters = 10;
  double sinkhorn_tol = 0.0;
  std::vector<std::size_t> wasserstein_modes;  // empty: all
  SampleCost sample_cost = SampleCost::discrete;
  TargetCoupling coupling = TargetCoupling::pooled;
  bool warm_start = false;
  double tol = 1e-5;
  int max_iters = 200;

  int runs = 10;
  std::uint64_t seed = 0;
  int kmeans_restarts = 10;

  std::string out = "out";
  bool dump_factors = false;

  void validate() const;

  // Keys match the long CLI flags without the leading dashes.
  std::map<std::string, std::string> to_map() const;
  static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);

  // FNV-1a over the canonical key=value listing, excluding `out`.
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

// Flat "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_config(std::istream& in);

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ClusteringScores scores;
  int iterations = 0;
  bool converged = false;
  std::vector<ObjectiveBreakdown> objective_trace;  // gwntf only
  std::vector<double> loss_trace;                   // baselines
  PhaseTimings timings;
  std::vector<double> wtd_by_mode;  // tensor methods only
  double wall_clock_s = 0.0;
};

struct ResultRow {
  std::string algorithm;
  std::string dataset;
  EvaluationSummary summary;
  int runs = 0;
  int failures = 0;
  double wall_clock_s = 0.0;
  std::string config_hash;
};

// results.csv carries no timing so that repeated runs are byte-identical;
// wall-clock lives in report.json.
void write_results_header(std::ostream& out);
void write_result_row(const ResultRow& row, std::ostream& out);

struct ExperimentOutcome {
  ResultRow row;
  std::vector<SeedRun> runs;
  std::shared_ptr<const AffinityGraph> graph;  // graph methods only
};

// Fits and scores one seed per Monte-Carlo run on an already loaded dataset.
// Throws when fewer than half of the seeds succeed.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const Dataset& data);

// Loads the data, runs, and writes <out>/results.csv, <out>/report.json and,
// with dump_factors, <out>/factors/*.wntf. Graph methods also write
// <out>/graph_edges.csv.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

Dataset load_dataset(const ExperimentConfig& cfg);

void write_report_json(const ExperimentConfig& cfg, const ExperimentOutcome& outcome,
                       std::ostream& out);

}  // namespace wntf
