#include "wntf/factorize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "wntf/error.hpp"
#include "wntf/kernels.hpp"

namespace wntf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite factor entry");
}

}  // namespace

void GwntfConfig::validate(const Shape& shape) const {
  if (rank < 1) throw std::invalid_argument("gwntf: rank must be >= 1");
  if (!(mu >= 0.0)) throw std::invalid_argument("gwntf: mu must be >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("gwntf: tol must be > 0");
  if (max_outer_iters < 1) throw std::invalid_argument("gwntf: max_outer_iters must be >= 1");
  if (stop_window < 1) throw std::invalid_argument("gwntf: stop_window must be >= 1");
  transport.validate();
  if (mu > 0.0 && !graph) throw std::invalid_argument("gwntf: mu > 0 requires an affinity graph");
  if (graph && graph->size() != shape.back())
    throw std::invalid_argument("gwntf: graph size does not match the sample mode");
  for (std::size_t m : wasserstein_modes)
    if (m >= shape.size()) throw std::invalid_argument("gwntf: wasserstein mode out of range");
  if (!costs.empty()) {
    if (costs.size() != shape.size()) throw std::invalid_argument("gwntf: need one cost per mode");
    for (std::size_t n = 0; n < shape.size(); ++n)
      if (costs[n].size() != shape[n]) throw std::invalid_argument("gwntf: cost size mismatch");
  }
}

std::vector<std::size_t> GwntfConfig::participating_modes(std::size_t order) const {
  if (wasserstein_modes.empty()) {
    std::vector<std::size_t> all(order);
    for (std::size_t n = 0; n < order; ++n) all[n] = n;
    return all;
  }
  std::vector<std::size_t> modes = wasserstein_modes;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  return modes;
}

std::vector<CostMatrix> default_costs(const Shape& shape, SampleCost sample_cost) {
  std::vector<CostMatrix> costs;
  for (std::size_t n = 0; n < shape.size(); ++n) {
    const bool sample_mode = n + 1 == shape.size();
    if (sample_mode && sample_cost == SampleCost::discrete)
      costs.push_back(discrete_cost(shape[n]));
    else
      costs.push_back(grid_cost(shape[n], 2.0, true));
  }
  return costs;
}

DataTensor prepare_input(const DataTensor& x, double floor, double* scale) {
  const double top = x.max();
  const double factor = top > 0.0 ? 1.0 / top : 1.0;
  std::vector<double> values(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) values[k] = std::max(x[k] * factor, floor);
  if (scale) *scale = factor;
  return DataTensor(x.shape(), std::move(values));
}

KruskalFactors initialize_factors(const Shape& shape, std::size_t rank, std::uint64_t seed,
                                  double target_mass) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Matrix> factors;
  for (std::size_t extent : shape) {
    Matrix f(static_cast<Eigen::Index>(extent), static_cast<Eigen::Index>(rank));
    for (Eigen::Index r = 0; r < f.cols(); ++r)
      for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, r) = 1.0 - unit(rng);  // (0, 1]
    factors.push_back(std::move(f));
  }
  // total mass of the CP model: sum_r prod_n (column sum of factor n)
  Vector per_rank = Vector::Ones(static_cast<Eigen::Index>(rank));
  for (const Matrix& f : factors) per_rank = per_rank.cwiseProduct(f.colwise().sum().transpose());
  const double mass = per_rank.sum();
  if (target_mass > 0.0 && mass > 0.0) {
    const double s = std::pow(target_mass / mass, 1.0 / static_cast<double>(shape.size()));
    for (Matrix& f : factors) f *= s;
  }
  return KruskalFactors(std::move(factors));
}

Matrix update_factor(const KruskalFactors& f, std::size_t mode, const Matrix& target,
                     double floor) {
  const Matrix& a = f.factor(mode);
  const Matrix coproduct = coproduct_matrix(f, mode);
  if (target.rows() != a.rows() || target.cols() != coproduct.rows())
    throw std::invalid_argument("update_factor: target has the wrong shape");
  Matrix numer;
  kernels::parallel::ratio_product(target, a, coproduct, floor, numer);
  const Eigen::RowVectorXd denom = coproduct.colwise().sum().cwiseMax(floor);
  Matrix next = a.cwiseProduct(numer);
  next.array().rowwise() /= denom.array();
  require_finite(next, "update_factor");
  return next;
}

Matrix update_sample_factor(const KruskalFactors& f, const AffinityGraph& graph,
                            const Matrix& target, double beta, double mu, double floor) {
  const std::size_t mode = f.order() - 1;
  if (mu == 0.0) return update_factor(f, mode, target, floor);
  const Matrix& a = f.factor(mode);
  if (graph.size() != static_cast<std::size_t>(a.rows()))
    throw std::invalid_argument("update_sample_factor: graph size does not match sample factor");
  const Matrix coproduct = coproduct_matrix(f, mode);
  if (target.rows() != a.rows() || target.cols() != coproduct.rows())
    throw std::invalid_argument("update_sample_factor: target has the wrong shape");
  Matrix numer;
  kernels::parallel::ratio_product(target, a, coproduct, floor, numer);
  const Eigen::RowVectorXd s = coproduct.colwise().sum();
  const Matrix neighbour = graph.weights * a;

  Matrix next(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r) {
    const double q = beta * s(r);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double p = 4.0 * mu * graph.degrees(i);
      const double c = a(i, r) * (beta * numer(i, r) + 4.0 * mu * neighbour(i, r));
      next(i, r) = 2.0 * c / std::max(q + std::sqrt(q * q + 4.0 * p * c), floor);
    }
  }
  require_finite(next, "update_sample_factor");
  return next;
}

Matrix pooled_target(std::span<const Matrix> targets, std::span<const std::size_t> modes,
                     const Shape& shape, std::size_t mode) {
  if (targets.size() != modes.size() || targets.empty())
    throw std::invalid_argument("pooled_target: need one target per participating mode");
  std::vector<double> sum(element_count(shape), 0.0);
  std::vector<double> folded(sum.size());
  for (std::size_t k = 0; k < modes.size(); ++k) {
    kernels::parallel::fold(targets[k], shape, modes[k], folded);
    for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += folded[e];
  }
  const double inv = 1.0 / static_cast<double>(modes.size());
  for (double& v : sum) v *= inv;
  Matrix out;
  kernels::parallel::unfold(sum, shape, mode, out);
  return out;
}

namespace {

// Objective pieces that depend only on the transport states.
struct ModeTerms {
  double transport = 0.0;
  double entropy = 0.0;
  double source_kl = 0.0;  // unweighted
  Matrix target;           // Psi(T_n)
};

ModeTerms mode_terms(const Matrix& x_unf, const TransportState& state, const CostMatrix& cost,
                     double floor) {
  PlanTerms pt = plan_terms(state, cost);
  ModeTerms mt;
  mt.transport = pt.transport;
  mt.entropy = pt.entropy;
  mt.source_kl = kl_divergence(pt.marginals.source, x_unf, floor);
  mt.target = std::move(pt.marginals.target);
  return mt;
}

ObjectiveBreakdown assemble(const std::vector<ModeTerms>& terms,
                            std::span<const std::size_t> modes, const KruskalFactors& f,
                            const AffinityGraph* graph, const GwntfConfig& cfg) {
  const TransportHyperParams& h = cfg.transport;
  ObjectiveBreakdown o;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    o.transport += terms[k].transport;
    o.entropy -= terms[k].entropy / h.lambda;
    o.source_kl += h.alpha * terms[k].source_kl;
    o.target_kl +=
        h.beta * kl_divergence(terms[k].target, reconstruct_unfolded(f, modes[k]), h.floor);
  }
  if (cfg.mu > 0.0 && graph) o.graph = cfg.mu * smoothness(*graph, f.factor(f.order() - 1));
  o.total = o.transport + o.entropy + o.source_kl + o.target_kl + o.graph;
  return o;
}

}  // namespace

KruskalFactors factor_sweep(const KruskalFactors& f, std::span<const Matrix> targets,
                            const DataTensor& x, const GwntfConfig& cfg) {
  const Shape& shape = x.shape();
  const std::size_t order = shape.size();
  const std::vector<std::size_t> modes = cfg.participating_modes(order);
  if (targets.size() != modes.size())
    throw std::invalid_argument("factor_sweep: need one target per participating mode");
  if (f.shape() != shape) throw std::invalid_argument("factor_sweep: factor shape mismatch");
  if (cfg.mu > 0.0 && !cfg.graph) throw std::invalid_argument("factor_sweep: mu > 0 requires a graph");
  const TransportHyperParams& h = cfg.transport;
  const double beta_eff =
      cfg.coupling == TargetCoupling::pooled ? h.beta * static_cast<double>(modes.size()) : h.beta;
  KruskalFactors next = f;
  for (std::size_t n = 0; n < order; ++n) {
    Matrix target;
    if (cfg.coupling == TargetCoupling::pooled) {
      target = pooled_target(targets, modes, shape, n);
    } else {
      const auto pos = std::find(modes.begin(), modes.end(), n);
      target = pos != modes.end() ? targets[static_cast<std::size_t>(pos - modes.begin())]
                                  : matricize(x, n);
    }
    Matrix updated = n == order - 1 && cfg.mu > 0.0
                         ? update_sample_factor(next, *cfg.graph, target, beta_eff, cfg.mu, h.floor)
                         : update_factor(next, n, target, h.floor);
    next.set_factor(n, std::move(updated));
  }
  return next;
}

ObjectiveBreakdown gwntf_objective(const DataTensor& x, const KruskalFactors& f,
                                   std::span<const TransportState> states,
                                   std::span<const CostMatrix> costs, const AffinityGraph* graph,
                                   const GwntfConfig& cfg) {
  const std::vector<std::size_t> modes = cfg.participating_modes(x.order());
  if (states.size() != modes.size())
    throw std::invalid_argument("gwntf_objective: need one state per participating mode");
  if (costs.size() != x.order()) throw std::invalid_argument("gwntf_objective: need one cost per mode");
  if (f.shape() != x.shape()) throw std::invalid_argument("gwntf_objective: factor shape mismatch");
  std::vector<ModeTerms> terms;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (states[k].mode != modes[k])
      throw std::invalid_argument("gwntf_objective: state order does not match modes");
    terms.push_back(mode_terms(matricize(x, modes[k]), states[k], costs[modes[k]],
                               cfg.transport.floor));
  }
  return assemble(terms, modes, f, graph, cfg);
}

bool should_stop(std::span<const double> totals, double tol, int window) {
  if (window < 1 || totals.size() < static_cast<std::size_t>(window) + 1) return false;
  for (std::size_t k = totals.size() - static_cast<std::size_t>(window); k < totals.size(); ++k) {
    const double scale = std::max(std::abs(totals[k]), 1e-300);
    if (!(std::abs(totals[k] - totals[k - 1]) / scale < tol)) return false;
  }
  return true;
}

FitReport gwntf_fit(const DataTensor& x_raw, const GwntfConfig& cfg) {
  cfg.validate(x_raw.shape());
  const TransportHyperParams& h = cfg.transport;
  const Shape& shape = x_raw.shape();
  const std::size_t order = shape.size();

  double scale = 1.0;
  const DataTensor x = prepare_input(x_raw, h.floor, &scale);
  const std::vector<std::size_t> modes = cfg.participating_modes(order);
  const std::vector<CostMatrix> costs =
      cfg.costs.empty() ? default_costs(shape, cfg.sample_cost) : cfg.costs;
  const AffinityGraph* graph = cfg.graph.get();

  FitReport report{initialize_factors(shape, cfg.rank, cfg.seed, x.sum()), {}, 0, false, {},
                   scale, {}};
  if (cfg.rank > *std::min_element(shape.begin(), shape.end()))
    report.warnings.push_back("rank exceeds the smallest mode size (overcomplete model)");

  std::vector<Matrix> unfolded;
  std::vector<TransportState> states;
  for (std::size_t m : modes) {
    unfolded.push_back(matricize(x, m));
    states.push_back(initial_state(m, make_kernel(costs[m], h.lambda, h.kernel_floor),
                                   unfolded.back().cols()));
  }

  std::vector<double> totals;
  std::vector<ModeTerms> terms(modes.size());
  for (int it = 1; it <= cfg.max_outer_iters; ++it) {
    try {
      auto t0 = Clock::now();
      // Transport refresh from the previous iteration's reconstruction.
      for (std::size_t k = 0; k < modes.size(); ++k) {
        const std::size_t m = modes[k];
        if (!cfg.warm_start || it == 1)
          states[k].scale_v.setConstant(1.0 / static_cast<double>(shape[m]));
        states[k] = update_scalings(unfolded[k], reconstruct_unfolded(report.factors, m),
                                    std::move(states[k]), h);
        terms[k] = mode_terms(unfolded[k], states[k], costs[m], h.floor);
      }
      report.timings.transport_s += seconds_since(t0);

      t0 = Clock::now();
      std::vector<Matrix> targets;
      for (const ModeTerms& t : terms) targets.push_back(t.target);
      report.factors = factor_sweep(report.factors, targets, x, cfg);
      report.timings.factors_s += seconds_since(t0);

      t0 = Clock::now();
      report.objective_trace.push_back(assemble(terms, modes, report.factors, graph, cfg));
      report.timings.objective_s += seconds_since(t0);
    } catch (const NumericError& e) {
      throw NumericError("gwntf_fit: outer iteration " + std::to_string(it) + ": " + e.what());
    }
    report.iterations_run = it;
    totals.push_back(report.objective_trace.back().total);
    if (!std::isfinite(totals.back()))
      throw NumericError("gwntf_fit: non-finite objective at outer iteration " + std::to_string(it));
    if (should_stop(totals, cfg.tol, cfg.stop_window)) {
      report.converged = true;
      break;
    }
  }
  return report;
}

}  // namespace wntf
