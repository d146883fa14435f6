#include "wntf/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "wntf/error.hpp"
#include "wntf/graph.hpp"
#include "wntf/tensor_io.hpp"
#include "wntf/transport.hpp"

namespace wntf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
  if (used != v.size()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  }
  if (used != v.size()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long n = parse_int(key, v);
  if (n < 0) throw std::invalid_argument("config: " + key + " must be >= 0");
  return static_cast<std::size_t>(n);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: " + key + " expects a boolean, got '" + v + "'");
}

std::vector<std::size_t> parse_modes(const std::string& v) {
  std::vector<std::size_t> modes;
  if (v.empty() || v == "all") return modes;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    modes.push_back(parse_count("wasserstein-modes", item));
  }
  return modes;
}

std::string format_modes(const std::vector<std::size_t>& modes) {
  if (modes.empty()) return "all";
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(modes[i]);
  }
  return out;
}

std::string to_string(DataFormat f) { return f == DataFormat::csv ? "csv" : "wntf"; }
std::string to_string(Weighting w) { return w == Weighting::heat ? "heat" : "binary"; }
std::string to_string(SampleCost c) { return c == SampleCost::grid ? "grid" : "discrete"; }
std::string to_string(TargetCoupling c) { return c == TargetCoupling::per_mode ? "per_mode" : "pooled"; }

std::size_t distinct_labels(const std::vector<int>& labels) {
  return std::set<int>(labels.begin(), labels.end()).size();
}

bool uses_graph(Algorithm a) {
  return a == Algorithm::gnmf || a == Algorithm::gncp || a == Algorithm::gwntf;
}

// Per-mode entropic transport value <C, T> - H(T)/lambda between the
// prepared input and the reconstruction.
std::vector<double> wtd_by_mode(const DataTensor& x, const KruskalFactors& f,
                                const GwntfConfig& cfg) {
  const Shape& shape = x.shape();
  const std::vector<CostMatrix> costs =
      cfg.costs.empty() ? default_costs(shape, cfg.sample_cost) : cfg.costs;
  const TransportHyperParams& h = cfg.transport;
  std::vector<double> out;
  for (std::size_t m : cfg.participating_modes(x.order())) {
    const Matrix x_unf = matricize(x, m);
    TransportState state = initial_state(m, make_kernel(costs[m], h.lambda, h.kernel_floor),
                                         x_unf.cols());
    state = update_scalings(x_unf, reconstruct_unfolded(f, m), std::move(state), h);
    const PlanTerms terms = plan_terms(state, costs[m]);
    out.push_back(terms.transport - terms.entropy / h.lambda);
  }
  return out;
}

GwntfConfig gwntf_config(const ExperimentConfig& cfg, std::size_t rank,
                         std::shared_ptr<const AffinityGraph> graph) {
  GwntfConfig g;
  g.rank = rank;
  g.transport.lambda = cfg.lambda;
  g.transport.alpha = cfg.alpha;
  g.transport.beta = cfg.beta;
  g.transport.sinkhorn_iters = cfg.sinkhorn_iters;
  g.transport.sinkhorn_tol = cfg.sinkhorn_tol;
  g.mu = cfg.mu;
  g.graph = std::move(graph);
  g.max_outer_iters = cfg.max_iters;
  g.tol = cfg.tol;
  g.wasserstein_modes = cfg.wasserstein_modes;
  g.sample_cost = cfg.sample_cost;
  g.coupling = cfg.coupling;
  g.warm_start = cfg.warm_start;
  return g;
}

void dump_factor_files(const std::filesystem::path& dir, const std::string& tag,
                       const std::vector<Matrix>& factors) {
  std::filesystem::create_directories(dir);
  for (std::size_t n = 0; n < factors.size(); ++n)
    write_wntf(factors[n], dir / (tag + "_mode" + std::to_string(n) + ".wntf"));
}

nlohmann::json stats_json(const MetricStats& s) {
  return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}};
}

nlohmann::json scores_json(const ClusteringScores& s) {
  return nlohmann::json{{"acc", s.acc}, {"nmi", s.nmi}, {"mi", s.mi}, {"mi_raw", s.mi_raw},
                        {"purity", s.purity}};
}

}  // namespace

DataFormat parse_format(const std::string& text) {
  if (text == "wntf" || text == "binary" || text == "wntf-binary") return DataFormat::wntf;
  if (text == "csv") return DataFormat::csv;
  throw std::invalid_argument("unknown format '" + text + "' (expected wntf or csv)");
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "kmeans") return Algorithm::kmeans;
  if (text == "nmf") return Algorithm::nmf;
  if (text == "gnmf") return Algorithm::gnmf;
  if (text == "ncp") return Algorithm::ncp;
  if (text == "gncp") return Algorithm::gncp;
  if (text == "gwntf") return Algorithm::gwntf;
  throw std::invalid_argument("unknown algorithm '" + text + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::nmf: return "nmf";
    case Algorithm::gnmf: return "gnmf";
    case Algorithm::ncp: return "ncp";
    case Algorithm::gncp: return "gncp";
    case Algorithm::gwntf: return "gwntf";
  }
  return "unknown";
}

std::filesystem::path default_labels_path(const std::filesystem::path& dataset) {
  std::filesystem::path p = dataset;
  p.replace_extension(".labels");
  return p;
}

Dataset ingest(const std::filesystem::path& path, DataFormat format, const Shape& sample_shape,
               const std::optional<std::filesystem::path>& labels) {
  DataTensor raw = [&] {
    if (format == DataFormat::csv) {
      if (sample_shape.empty()) throw std::invalid_argument("ingest: csv input needs a sample shape");
      return read_csv_samples(path, sample_shape);
    }
    DataTensor t = read_wntf(path);
    if (!sample_shape.empty()) {
      Shape expected = sample_shape;
      expected.push_back(t.shape().back());
      if (expected != t.shape())
        throw FormatError("ingest: tensor shape " + format_shape(t.shape()) +
                          " does not match declared sample shape " + format_shape(sample_shape));
    }
    return t;
  }();
  std::vector<int> y = read_labels(labels.value_or(default_labels_path(path)));
  if (y.size() != raw.shape().back())
    throw FormatError("ingest: " + std::to_string(y.size()) + " labels for " +
                      std::to_string(raw.shape().back()) + " samples");
  const double peak = raw.max();
  DataTensor scaled = peak > 0.0 ? raw.scaled(1.0 / peak) : raw;
  return Dataset{std::move(scaled), std::move(y)};
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("config: max-iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be > 0");
  if (kmeans_restarts < 1) throw std::invalid_argument("config: kmeans-restarts must be >= 1");
  if (format == DataFormat::csv && dataset != "synthetic" && shape.empty())
    throw std::invalid_argument("config: csv input needs --shape");
  if (uses_graph(algorithm)) {
    if (p_neighbors < 1) throw std::invalid_argument("config: p-neighbors must be >= 1");
    if (!(mu >= 0.0)) throw std::invalid_argument("config: mu must be >= 0");
    if (weighting == Weighting::heat && !(sigma > 0.0))
      throw std::invalid_argument("config: sigma must be > 0");
  }
  if (algorithm == Algorithm::gwntf) {
    TransportHyperParams h;
    h.lambda = lambda;
    h.alpha = alpha;
    h.beta = beta;
    h.sinkhorn_iters = sinkhorn_iters;
    h.sinkhorn_tol = sinkhorn_tol;
    h.validate();
  }
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset;
  kv["format"] = to_string(format);
  kv["shape"] = shape.empty() ? "" : format_shape(shape);
  kv["labels"] = labels;
  Shape synth_shape = synthetic.sample_shape;
  synth_shape.push_back(synthetic.clusters * synthetic.per_cluster);
  kv["synth-shape"] = format_shape(synth_shape);
  kv["synth-clusters"] = std::to_string(synthetic.clusters);
  kv["synth-noise"] = fmt_double(synthetic.noise);
  kv["synth-seed"] = std::to_string(synthetic.seed);
  kv["algo"] = wntf::to_string(algorithm);
  kv["rank"] = std::to_string(rank);
  kv["clusters"] = std::to_string(clusters);
  kv["lambda"] = fmt_double(lambda);
  kv["alpha"] = fmt_double(alpha);
  kv["beta"] = fmt_double(beta);
  kv["mu"] = fmt_double(mu);
  kv["p-neighbors"] = std::to_string(p_neighbors);
  kv["weighting"] = to_string(weighting);
  kv["sigma"] = fmt_double(sigma);
  kv["sinkhorn-iters"] = std::to_string(sinkhorn_iters);
  kv["sinkhorn-tol"] = fmt_double(sinkhorn_tol);
  kv["wasserstein-modes"] = format_modes(wasserstein_modes);
  kv["sample-cost"] = to_string(sample_cost);
  kv["coupling"] = to_string(coupling);
  kv["warm-start"] = warm_start ? "true" : "false";
  kv["tol"] = fmt_double(tol);
  kv["max-iters"] = std::to_string(max_iters);
  kv["runs"] = std::to_string(runs);
  kv["seed"] = std::to_string(seed);
  kv["kmeans-restarts"] = std::to_string(kmeans_restarts);
  kv["out"] = out;
  kv["dump-factors"] = dump_factors ? "true" : "false";
  return kv;
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  for (const auto& [key, raw] : kv) {
    const std::string v = trim(raw);
    if (key == "dataset") c.dataset = v;
    else if (key == "format") c.format = parse_format(v);
    else if (key == "shape") c.shape = v.empty() ? Shape{} : parse_shape(v);
    else if (key == "labels") c.labels = v;
    else if (key == "synth-shape") {
      Shape s = parse_shape(v);
      if (s.size() < 2) throw std::invalid_argument("config: synth-shape needs at least two modes");
      c.synthetic.sample_shape.assign(s.begin(), s.end() - 1);
      c.synthetic.per_cluster = s.back();  // divided by the cluster count below
    } else if (key == "synth-clusters") c.synthetic.clusters = parse_count(key, v);
    else if (key == "synth-noise") c.synthetic.noise = parse_double(key, v);
    else if (key == "synth-seed") c.synthetic.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "algo") c.algorithm = parse_algorithm(v);
    else if (key == "rank") c.rank = parse_count(key, v);
    else if (key == "clusters") c.clusters = parse_count(key, v);
    else if (key == "lambda") c.lambda = parse_double(key, v);
    else if (key == "alpha") c.alpha = parse_double(key, v);
    else if (key == "beta") c.beta = parse_double(key, v);
    else if (key == "mu") c.mu = parse_double(key, v);
    else if (key == "p-neighbors") c.p_neighbors = parse_count(key, v);
    else if (key == "weighting") {
      if (v == "binary") c.weighting = Weighting::binary;
      else if (v == "heat") c.weighting = Weighting::heat;
      else throw std::invalid_argument("config: weighting must be binary or heat");
    } else if (key == "sigma") c.sigma = parse_double(key, v);
    else if (key == "sinkhorn-iters") c.sinkhorn_iters = static_cast<int>(parse_int(key, v));
    else if (key == "sinkhorn-tol") c.sinkhorn_tol = parse_double(key, v);
    else if (key == "wasserstein-modes") c.wasserstein_modes = parse_modes(v);
    else if (key == "sample-cost") {
      if (v == "discrete") c.sample_cost = SampleCost::discrete;
      else if (v == "grid") c.sample_cost = SampleCost::grid;
      else throw std::invalid_argument("config: sample-cost must be discrete or grid");
    } else if (key == "coupling") {
      if (v == "pooled") c.coupling = TargetCoupling::pooled;
      else if (v == "per_mode" || v == "per-mode") c.coupling = TargetCoupling::per_mode;
      else throw std::invalid_argument("config: coupling must be pooled or per_mode");
    } else if (key == "warm-start") c.warm_start = parse_bool(key, v);
    else if (key == "tol") c.tol = parse_double(key, v);
    else if (key == "max-iters") c.max_iters = static_cast<int>(parse_int(key, v));
    else if (key == "runs") c.runs = static_cast<int>(parse_int(key, v));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "kmeans-restarts") c.kmeans_restarts = static_cast<int>(parse_int(key, v));
    else if (key == "out") c.out = v;
    else if (key == "dump-factors") c.dump_factors = parse_bool(key, v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (kv.count("synth-shape")) {
    const std::size_t total = c.synthetic.per_cluster;
    if (c.synthetic.clusters == 0 || total % c.synthetic.clusters != 0)
      throw std::invalid_argument("config: synth-shape sample count must be a multiple of synth-clusters");
    c.synthetic.per_cluster = total / c.synthetic.clusters;
  }
  return c;
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [key, value] : to_map()) {
    if (key == "out") continue;
    for (char ch : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string ExperimentConfig::hash_hex() const {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << hash();
  return ss.str();
}

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in);
}

void write_results_header(std::ostream& out) {
  out << "algorithm,dataset,acc_mean,acc_std,nmi_mean,nmi_std,mi_mean,mi_std,mi_raw_mean,"
         "mi_raw_std,purity_mean,purity_std,runs,failures,config_hash\n";
}

void write_result_row(const ResultRow& row, std::ostream& out) {
  const EvaluationSummary& s = row.summary;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                s.acc.mean, s.acc.stddev, s.nmi.mean, s.nmi.stddev, s.mi.mean, s.mi.stddev,
                s.mi_raw.mean, s.mi_raw.stddev, s.purity.mean, s.purity.stddev);
  std::string dataset = row.dataset;
  if (dataset.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char ch : dataset) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    dataset = quoted + "\"";
  }
  out << row.algorithm << ',' << dataset << ',' << buf << ',' << row.runs << ',' << row.failures
      << ',' << row.config_hash << '\n';
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "synthetic") return make_synthetic(cfg.synthetic);
  std::optional<std::filesystem::path> labels;
  if (!cfg.labels.empty()) labels = cfg.labels;
  return ingest(cfg.dataset, cfg.format, cfg.shape, labels);
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto start = Clock::now();
  const DataTensor& x = data.tensor;
  const std::size_t samples = x.shape().back();
  if (data.labels.size() != samples)
    throw std::invalid_argument("run_experiment: label count does not match sample count");
  const std::size_t k = cfg.clusters ? cfg.clusters : distinct_labels(data.labels);
  const std::size_t rank = cfg.rank ? cfg.rank : k;
  if (k < 1 || k > samples) throw std::invalid_argument("run_experiment: invalid cluster count");

  const Matrix sample_rows = matricize(x, x.order() - 1);
  std::shared_ptr<const AffinityGraph> graph;
  if (uses_graph(cfg.algorithm)) {
    const double peak = x.max();
    KnnOptions ko;
    ko.p = cfg.p_neighbors;
    ko.weighting = cfg.weighting;
    ko.sigma = cfg.sigma;
    graph = std::make_shared<AffinityGraph>(
        build_knn(peak > 0.0 ? Matrix(sample_rows / peak) : sample_rows, ko));
  }

  BaselineOptions bo;
  bo.rank = rank;
  bo.max_iters = cfg.max_iters;
  bo.tol = cfg.tol;

  ExperimentOutcome outcome;
  outcome.graph = graph;
  std::vector<std::pair<std::uint64_t, ClusteringScores>> scored;
  int failures = 0;
  for (int r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    SeedRun run;
    run.seed = seed;
    const auto run_start = Clock::now();
    try {
      Matrix embedding;
      bo.seed = seed;
      switch (cfg.algorithm) {
        case Algorithm::kmeans:
          embedding = sample_rows;
          break;
        case Algorithm::nmf:
        case Algorithm::gnmf: {
          const NmfReport rep = cfg.algorithm == Algorithm::nmf
                                    ? nmf_fit(sample_rows, bo)
                                    : gnmf_fit(sample_rows, bo, *graph, cfg.mu);
          embedding = rep.w;
          run.loss_trace = rep.trace;
          run.iterations = rep.iterations_run;
          run.converged = rep.converged;
          if (cfg.dump_factors)
            dump_factor_files(std::filesystem::path(cfg.out) / "factors",
                              "seed" + std::to_string(seed), {rep.h, rep.w});
          break;
        }
        case Algorithm::ncp:
        case Algorithm::gncp:
        case Algorithm::gwntf: {
          std::optional<KruskalFactors> factors;
          const GwntfConfig gcfg = gwntf_config(cfg, rank, graph);
          if (cfg.algorithm == Algorithm::gwntf) {
            GwntfConfig fit_cfg = gcfg;
            fit_cfg.seed = seed;
            FitReport rep = gwntf_fit(x, fit_cfg);
            run.objective_trace = rep.objective_trace;
            run.iterations = rep.iterations_run;
            run.converged = rep.converged;
            run.timings = rep.timings;
            factors.emplace(std::move(rep.factors));
          } else {
            NcpReport rep = cfg.algorithm == Algorithm::ncp ? ncp_fit(x, bo)
                                                            : gncp_fit(x, bo, *graph, cfg.mu);
            run.loss_trace = rep.trace;
            run.iterations = rep.iterations_run;
            run.converged = rep.converged;
            factors.emplace(std::move(rep.factors));
          }
          run.wtd_by_mode = wtd_by_mode(prepare_input(x, gcfg.transport.floor), *factors, gcfg);
          embedding = factors->factor(x.order() - 1);
          if (cfg.dump_factors)
            dump_factor_files(std::filesystem::path(cfg.out) / "factors",
                              "seed" + std::to_string(seed), factors->factors());
          break;
        }
      }
      const EvaluationSummary one = evaluate_embedding(
          embedding, data.labels, k, std::span<const std::uint64_t>(&seed, 1), cfg.kmeans_restarts);
      run.scores = one.per_seed.front();
      run.ok = true;
      scored.emplace_back(seed, run.scores);
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
      ++failures;
    }
    run.wall_clock_s = seconds_since(run_start);
    outcome.runs.push_back(std::move(run));
  }

  outcome.row.algorithm = to_string(cfg.algorithm);
  outcome.row.dataset = cfg.dataset;
  outcome.row.runs = cfg.runs;
  outcome.row.failures = failures;
  outcome.row.config_hash = cfg.hash_hex();
  outcome.row.wall_clock_s = seconds_since(start);
  if (2 * static_cast<int>(scored.size()) < cfg.runs) {
    std::string msg = "run_experiment: " + std::to_string(failures) + " of " +
                      std::to_string(cfg.runs) + " runs failed";
    for (const SeedRun& r : outcome.runs)
      if (!r.ok) {
        msg += "; first error (seed " + std::to_string(r.seed) + "): " + r.error;
        break;
      }
    throw std::runtime_error(msg);
  }
  outcome.row.summary = summarize(std::move(scored));
  return outcome;
}

void write_report_json(const ExperimentConfig& cfg, const ExperimentOutcome& outcome,
                       std::ostream& out) {
  nlohmann::json j;
  nlohmann::json config;
  for (const auto& [key, value] : cfg.to_map()) config[key] = value;
  j["config"] = config;
  j["config_hash"] = outcome.row.config_hash;
  j["algorithm"] = outcome.row.algorithm;
  j["dataset"] = outcome.row.dataset;
  const EvaluationSummary& s = outcome.row.summary;
  j["metrics"] = {{"acc", stats_json(s.acc)},
                  {"nmi", stats_json(s.nmi)},
                  {"mi", stats_json(s.mi)},
                  {"mi_raw", stats_json(s.mi_raw)},
                  {"purity", stats_json(s.purity)},
                  {"mi_convention", "MI / max(H(pred), H(truth)); mi_raw in nats"},
                  {"std_convention", "sample standard deviation over successful runs"}};
  j["runs_requested"] = outcome.row.runs;
  j["failures"] = outcome.row.failures;
  j["wall_clock_s"] = outcome.row.wall_clock_s;
  nlohmann::json runs = nlohmann::json::array();
  for (const SeedRun& r : outcome.runs) {
    nlohmann::json jr;
    jr["seed"] = r.seed;
    jr["ok"] = r.ok;
    if (!r.ok) jr["error"] = r.error;
    jr["scores"] = scores_json(r.scores);
    jr["iterations"] = r.iterations;
    jr["converged"] = r.converged;
    nlohmann::json trace = nlohmann::json::array();
    for (const ObjectiveBreakdown& b : r.objective_trace)
      trace.push_back({{"total", b.total},
                       {"transport", b.transport},
                       {"entropy", b.entropy},
                       {"source_kl", b.source_kl},
                       {"target_kl", b.target_kl},
                       {"graph", b.graph}});
    jr["objective_trace"] = trace;
    jr["loss_trace"] = r.loss_trace;
    jr["timings"] = {{"transport_s", r.timings.transport_s},
                     {"factors_s", r.timings.factors_s},
                     {"objective_s", r.timings.objective_s}};
    jr["wtd_by_mode"] = r.wtd_by_mode;
    jr["wall_clock_s"] = r.wall_clock_s;
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  out << j.dump(2) << '\n';
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset data = load_dataset(cfg);
  const std::filesystem::path out_dir(cfg.out);
  std::filesystem::create_directories(out_dir);
  ExperimentOutcome outcome = run_experiment(cfg, data);

  {
    std::ofstream csv(out_dir / "results.csv");
    write_results_header(csv);
    write_result_row(outcome.row, csv);
  }
  {
    std::ofstream json(out_dir / "report.json");
    write_report_json(cfg, outcome, json);
  }
  if (outcome.graph) {
    std::ofstream edges(out_dir / "graph_edges.csv");
    write_edge_list(*outcome.graph, edges);
  }
  return outcome;
}

}  // namespace wntf
