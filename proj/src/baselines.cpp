#include <cmath>
#include <stdexcept>

#include "wntf/error.hpp"
#include "wntf/factorize.hpp"

namespace wntf {

namespace {

double kl_objective(const DataTensor& x, const KruskalFactors& f, double floor) {
  return kl_divergence(matricize(x, 0), reconstruct_unfolded(f, 0), floor);
}

void validate(const BaselineOptions& opts) {
  if (opts.rank < 1) throw std::invalid_argument("baseline: rank must be >= 1");
  if (opts.max_iters < 1) throw std::invalid_argument("baseline: max_iters must be >= 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("baseline: tol must be > 0");
  if (!(opts.floor > 0.0)) throw std::invalid_argument("baseline: floor must be > 0");
}

NcpReport fit_cp(const DataTensor& x_raw, const BaselineOptions& opts, const AffinityGraph* graph,
                 double mu) {
  validate(opts);
  if (mu < 0.0) throw std::invalid_argument("gncp: mu must be >= 0");
  if (graph && graph->size() != x_raw.shape().back())
    throw std::invalid_argument("gncp: graph size does not match the sample mode");
  double scale = 1.0;
  const DataTensor x = prepare_input(x_raw, opts.floor, &scale);
  const std::size_t order = x.order();
  std::vector<Matrix> unfolded;
  for (std::size_t n = 0; n < order; ++n) unfolded.push_back(matricize(x, n));

  NcpReport report{initialize_factors(x.shape(), opts.rank, opts.seed, x.sum()), {}, 0, false,
                   scale};
  const bool regularized = graph && mu > 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    for (std::size_t n = 0; n < order; ++n) {
      Matrix next = regularized && n + 1 == order
                        ? update_sample_factor(report.factors, *graph, unfolded[n], 1.0, mu,
                                               opts.floor)
                        : update_factor(report.factors, n, unfolded[n], opts.floor);
      report.factors.set_factor(n, std::move(next));
    }
    double value = kl_objective(x, report.factors, opts.floor);
    if (regularized) value += mu * smoothness(*graph, report.factors.factor(order - 1));
    if (!std::isfinite(value))
      throw NumericError("cp baseline: non-finite objective at iteration " + std::to_string(it));
    report.trace.push_back(value);
    report.iterations_run = it;
    if (should_stop(report.trace, opts.tol, opts.stop_window)) {
      report.converged = true;
      break;
    }
  }
  return report;
}

// Samples x features becomes the 2-way tensor features x samples, so the
// sample factor is the last CP factor.
DataTensor as_feature_sample_tensor(const Matrix& x_mat) {
  const Matrix t = x_mat.transpose();
  return DataTensor({static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.cols())},
                    std::vector<double>(t.data(), t.data() + t.size()));
}

NmfReport to_nmf(NcpReport cp) {
  NmfReport r;
  r.h = cp.factors.factor(0);
  r.w = cp.factors.factor(1);
  r.trace = std::move(cp.trace);
  r.iterations_run = cp.iterations_run;
  r.converged = cp.converged;
  return r;
}

}  // namespace

NcpReport ncp_fit(const DataTensor& x, const BaselineOptions& opts) {
  return fit_cp(x, opts, nullptr, 0.0);
}

NcpReport gncp_fit(const DataTensor& x, const BaselineOptions& opts, const AffinityGraph& graph,
                   double mu) {
  return fit_cp(x, opts, &graph, mu);
}

NmfReport nmf_fit(const Matrix& x_mat, const BaselineOptions& opts) {
  return to_nmf(fit_cp(as_feature_sample_tensor(x_mat), opts, nullptr, 0.0));
}

NmfReport gnmf_fit(const Matrix& x_mat, const BaselineOptions& opts, const AffinityGraph& graph,
                   double lambda) {
  return to_nmf(fit_cp(as_feature_sample_tensor(x_mat), opts, &graph, lambda));
}

}  // namespace wntf
