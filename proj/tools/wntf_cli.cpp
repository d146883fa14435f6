#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wntf/bench.hpp"
#include "wntf/experiment.hpp"
#include "wntf/graph.hpp"
#include "wntf/parallel.hpp"
#include "wntf/tensor_io.hpp"

namespace {

struct KeyedOptions {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> flag_options;
  std::string config_file;

  void option(CLI::App* app, const std::string& key, const std::string& help) {
    options[key] = app->add_option("--" + key, values[key], help);
  }
  void flag(CLI::App* app, const std::string& key, const std::string& help) {
    flag_options[key] = app->add_flag("--" + key, flags[key], help);
  }

  std::map<std::string, std::string> merged() const {
    std::map<std::string, std::string> kv;
    if (!config_file.empty()) kv = wntf::read_config_file(config_file);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) kv[key] = values.at(key);
    for (const auto& [key, opt] : flag_options)
      if (opt->count() > 0) kv[key] = flags.at(key) ? "true" : "false";
    return kv;
  }
};

void add_experiment_options(CLI::App* app, KeyedOptions& k) {
  app->add_option("--config", k.config_file, "key=value config file; flags override it");
  k.option(app, "dataset", "tensor file, or 'synthetic'");
  k.option(app, "format", "wntf or csv");
  k.option(app, "shape", "per-sample shape for csv input, e.g. 32x32");
  k.option(app, "labels", "label file (default: dataset with .labels extension)");
  k.option(app, "synth-shape", "synthetic tensor shape, samples last (e.g. 8x8x60)");
  k.option(app, "synth-clusters", "synthetic cluster count");
  k.option(app, "synth-noise", "synthetic noise level");
  k.option(app, "synth-seed", "synthetic generator seed");
  k.option(app, "algo", "kmeans, nmf, gnmf, ncp, gncp or gwntf");
  k.option(app, "rank", "factorization rank (0: number of clusters)");
  k.option(app, "clusters", "k-means cluster count (0: distinct labels)");
  k.option(app, "lambda", "entropic sharpness");
  k.option(app, "alpha", "source-marginal weight");
  k.option(app, "beta", "target-marginal weight");
  k.option(app, "mu", "graph regularization weight");
  k.option(app, "p-neighbors", "nearest neighbours per sample");
  k.option(app, "weighting", "binary or heat");
  k.option(app, "sigma", "heat kernel width");
  k.option(app, "sinkhorn-iters", "inner Sinkhorn iterations");
  k.option(app, "sinkhorn-tol", "inner Sinkhorn early-stop tolerance (0: off)");
  k.option(app, "wasserstein-modes", "0-based comma-separated modes, or 'all'");
  k.option(app, "sample-cost", "discrete or grid");
  k.option(app, "coupling", "pooled or per_mode");
  k.option(app, "tol", "relative objective change tolerance");
  k.option(app, "max-iters", "outer iteration budget");
  k.option(app, "runs", "Monte-Carlo runs");
  k.option(app, "seed", "seed base");
  k.option(app, "kmeans-restarts", "k-means restarts per run");
  k.option(app, "out", "output directory");
  k.flag(app, "warm-start", "keep Sinkhorn scalings between outer iterations");
  k.flag(app, "dump-factors", "write factors/*.wntf");
}

void print_row(const wntf::ResultRow& row) {
  const auto& s = row.summary;
  std::printf("%-7s acc %.4f±%.4f  nmi %.4f±%.4f  mi %.4f±%.4f  purity %.4f±%.4f  (%d runs, %d failed, %.2fs)\n",
              row.algorithm.c_str(), s.acc.mean, s.acc.stddev, s.nmi.mean, s.nmi.stddev, s.mi.mean,
              s.mi.stddev, s.purity.mean, s.purity.stddev, row.runs, row.failures, row.wall_clock_s);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-regularized Wasserstein nonnegative tensor factorization"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "convert a dataset to the WNTF binary format");
  std::string in_path, in_format = "csv", in_shape, in_labels, in_out, in_edges;
  std::size_t in_p = 5;
  ingest->add_option("--dataset", in_path, "input file")->required();
  ingest->add_option("--format", in_format, "wntf or csv");
  ingest->add_option("--shape", in_shape, "per-sample shape, e.g. 32x32");
  ingest->add_option("--labels", in_labels, "label file");
  ingest->add_option("--out", in_out, "output .wntf path")->required();
  ingest->add_option("--edges", in_edges, "also write the kNN graph edge list (CSV)");
  ingest->add_option("--p-neighbors", in_p, "neighbours for --edges");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic clustered tensor");
  std::string sy_shape = "8x8x60", sy_out, sy_format = "wntf";
  std::size_t sy_clusters = 3;
  double sy_noise = 0.05;
  std::uint64_t sy_seed = 0;
  synth->add_option("--shape", sy_shape, "tensor shape, samples last");
  synth->add_option("--clusters", sy_clusters, "cluster count");
  synth->add_option("--noise", sy_noise, "noise level");
  synth->add_option("--seed", sy_seed, "generator seed");
  synth->add_option("--format", sy_format, "wntf or csv");
  synth->add_option("--out", sy_out, "output path")->required();

  // fit / eval
  auto* fit = app.add_subcommand("fit", "run one algorithm over Monte-Carlo seeds");
  KeyedOptions fit_opts;
  add_experiment_options(fit, fit_opts);
  auto* eval = app.add_subcommand("eval", "run several algorithms and tabulate the results");
  KeyedOptions eval_opts;
  add_experiment_options(eval, eval_opts);
  std::string eval_algos = "kmeans,nmf,gnmf,ncp,gncp,gwntf";
  eval->add_option("--algos", eval_algos, "comma-separated algorithms");

  // bench
  auto* bench = app.add_subcommand("bench", "time serial against parallel kernels");
  std::string b_shape = "32x32x200", b_out;
  wntf::BenchOptions bopts;
  bench->add_option("--shape", b_shape, "tensor shape");
  bench->add_option("--rank", bopts.rank, "rank");
  bench->add_option("--runs", bopts.repeats, "repeats per kernel");
  bench->add_option("--seed", bopts.seed, "seed");
  bench->add_option("--lambda", bopts.lambda, "entropic sharpness");
  bench->add_option("--sinkhorn-iters", bopts.sinkhorn_iters, "Sinkhorn iterations");
  bench->add_option("--out", b_out, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    wntf::configure_threads_from_env();

    if (*ingest) {
      std::optional<std::filesystem::path> labels;
      if (!in_labels.empty()) labels = in_labels;
      const wntf::Shape shape = in_shape.empty() ? wntf::Shape{} : wntf::parse_shape(in_shape);
      const wntf::Dataset d = wntf::ingest(in_path, wntf::parse_format(in_format), shape, labels);
      wntf::write_wntf(d.tensor, std::filesystem::path(in_out));
      wntf::write_labels(d.labels, wntf::default_labels_path(in_out));
      std::cout << "wrote " << in_out << " shape " << wntf::format_shape(d.tensor.shape()) << ", "
                << d.labels.size() << " labels\n";
      if (!in_edges.empty()) {
        const std::size_t last = d.tensor.order() - 1;
        wntf::KnnOptions ko;
        ko.p = in_p;
        const wntf::AffinityGraph g = wntf::build_knn(wntf::matricize(d.tensor, last), ko);
        std::ofstream edges(in_edges);
        wntf::write_edge_list(g, edges);
      }
      return 0;
    }

    if (*synth) {
      const wntf::Shape full = wntf::parse_shape(sy_shape);
      if (full.size() < 2 || sy_clusters == 0 || full.back() % sy_clusters != 0)
        throw std::invalid_argument("synth: sample count must be a positive multiple of --clusters");
      wntf::SyntheticSpec spec;
      spec.sample_shape.assign(full.begin(), full.end() - 1);
      spec.clusters = sy_clusters;
      spec.per_cluster = full.back() / sy_clusters;
      spec.noise = sy_noise;
      spec.seed = sy_seed;
      const wntf::Dataset d = wntf::make_synthetic(spec);
      if (wntf::parse_format(sy_format) == wntf::DataFormat::csv) {
        std::ofstream out(sy_out);
        wntf::write_csv_samples(d.tensor, out);
      } else {
        wntf::write_wntf(d.tensor, std::filesystem::path(sy_out));
      }
      wntf::write_labels(d.labels, wntf::default_labels_path(sy_out));
      std::cout << "wrote " << sy_out << " shape " << wntf::format_shape(d.tensor.shape()) << "\n";
      return 0;
    }

    if (*fit) {
      const wntf::ExperimentConfig cfg = wntf::ExperimentConfig::from_map(fit_opts.merged());
      const wntf::ExperimentOutcome outcome = wntf::run_experiment(cfg);
      print_row(outcome.row);
      for (const auto& r : outcome.runs)
        if (!r.ok) std::cerr << "seed " << r.seed << " failed: " << r.error << "\n";
      return 0;
    }

    if (*eval) {
      const auto kv = eval_opts.merged();
      const wntf::ExperimentConfig base = wntf::ExperimentConfig::from_map(kv);
      const std::filesystem::path out_dir(base.out);
      std::filesystem::create_directories(out_dir);
      std::ofstream table(out_dir / "results.csv");
      wntf::write_results_header(table);
      int failed = 0;
      for (const std::string& name : split_list(eval_algos)) {
        wntf::ExperimentConfig cfg = base;
        cfg.algorithm = wntf::parse_algorithm(name);
        cfg.out = (out_dir / name).string();
        try {
          const wntf::ExperimentOutcome outcome = wntf::run_experiment(cfg);
          wntf::write_result_row(outcome.row, table);
          print_row(outcome.row);
        } catch (const std::exception& e) {
          std::cerr << name << ": " << e.what() << "\n";
          ++failed;
        }
      }
      return failed ? 1 : 0;
    }

    if (*bench) {
      bopts.shape = wntf::parse_shape(b_shape);
      const auto rows = wntf::run_benchmarks(bopts);
      wntf::print_bench_table(rows, std::cout);
      if (!b_out.empty()) {
        std::ofstream out(b_out);
        wntf::write_bench_csv(rows, out);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
