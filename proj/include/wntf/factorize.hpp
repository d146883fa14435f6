#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wntf/graph.hpp"
#include "wntf/tensor.hpp"
#include "wntf/transport.hpp"

namespace wntf {

// How the target marginals feed the factor updates.
//   pooled    every factor is fitted to the mean of the refolded target
//             marginals of all participating modes, weighted by beta * |modes|.
//             This is the exact MM step for the summed target-KL terms.
//   per_mode  factor n is fitted to the target marginal of mode n alone (the
//             data unfolding when mode n does not participate).
enum class TargetCoupling { pooled, per_mode };

// Ground cost for the last (sample) mode when it participates.
enum class SampleCost { discrete, grid };

struct GwntfConfig {
  std::size_t rank = 1;
  TransportHyperParams transport;
  double mu = 1e4;
  std::shared_ptr<const AffinityGraph> graph;  // required when mu > 0
  int max_outer_iters = 200;
  double tol = 1e-5;
  int stop_window = 3;
  std::uint64_t seed = 0;
  std::vector<std::size_t> wasserstein_modes;  // empty: all modes
  std::vector<CostMatrix> costs;               // empty: default_costs()
  SampleCost sample_cost = SampleCost::discrete;
  TargetCoupling coupling = TargetCoupling::pooled;
  bool warm_start = false;  // keep V between outer iterations instead of resetting to 1/I_n

  void validate(const Shape& shape) const;
  std::vector<std::size_t> participating_modes(std::size_t order) const;
};

// Squared grid distance, normalized to max 1, on every mode but the last;
// the last mode uses `sample_cost`.
std::vector<CostMatrix> default_costs(const Shape& shape, SampleCost sample_cost);

// Weighted contributions; total is their sum.
struct ObjectiveBreakdown {
  double total = 0.0;
  double transport = 0.0;  // sum <T_n, C_n>
  double entropy = 0.0;    // -(1/lambda) sum H(T_n)
  double source_kl = 0.0;  // alpha * sum KL(Phi(T_n) || X_(n))
  double target_kl = 0.0;  // beta * sum KL(Psi(T_n) || Xhat_(n))
  double graph = 0.0;      // mu * smoothness(A_N)
};

struct PhaseTimings {
  double transport_s = 0.0;
  double factors_s = 0.0;
  double objective_s = 0.0;
};

struct FitReport {
  KruskalFactors factors;
  std::vector<ObjectiveBreakdown> objective_trace;  // one entry per outer iteration
  int iterations_run = 0;
  bool converged = false;
  PhaseTimings timings;
  double input_scale = 1.0;  // the input was multiplied by this before fitting
  std::vector<std::string> warnings;
};

// Divides by the global max and floors every entry at `floor`.
DataTensor prepare_input(const DataTensor& x, double floor, double* scale = nullptr);

// i.i.d. uniform (0, 1] entries from a seeded generator, rescaled so the
// reconstruction carries `target_mass`.
KruskalFactors initialize_factors(const Shape& shape, std::size_t rank, std::uint64_t seed,
                                  double target_mass);

// `states` holds one state per participating mode, in the order of
// cfg.participating_modes(). `costs` has one entry per mode of x.
ObjectiveBreakdown gwntf_objective(const DataTensor& x, const KruskalFactors& f,
                                   std::span<const TransportState> states,
                                   std::span<const CostMatrix> costs, const AffinityGraph* graph,
                                   const GwntfConfig& cfg);

// A <- A .* [(target / (A B^T)) B] / [1 B], B the coproduct matrix of `mode`.
Matrix update_factor(const KruskalFactors& f, std::size_t mode, const Matrix& target,
                     double floor = 1e-12);

// Sample-factor update for beta * KL(target || A B^T) + mu * smoothness(A).
// Each entry is the positive root of the separable surrogate's stationarity
// condition
//   4 mu d_i a^2 + beta s_r a - a~ (beta N_ir + 4 mu (V a~)_ir) = 0,
// N = (target / (A B^T)) B, s = 1 B, evaluated in the cancellation-free form
// 2c / (q + sqrt(q^2 + 4 p c)). With mu == 0 it is update_factor.
Matrix update_sample_factor(const KruskalFactors& f, const AffinityGraph& graph,
                            const Matrix& target, double beta, double mu, double floor = 1e-12);

// Mean over participating modes of the refolded target marginals, unfolded
// along `mode`.
Matrix pooled_target(std::span<const Matrix> targets, std::span<const std::size_t> modes,
                     const Shape& shape, std::size_t mode);

// One pass of factor updates n = 0..N-1 against fixed target marginals
// (one per participating mode, in participating_modes() order). The sample
// factor takes the graph-regularized update when cfg.mu > 0. `x` is the
// prepared input; per_mode coupling fits non-participating modes to it.
KruskalFactors factor_sweep(const KruskalFactors& f, std::span<const Matrix> targets,
                            const DataTensor& x, const GwntfConfig& cfg);

FitReport gwntf_fit(const DataTensor& x, const GwntfConfig& cfg);

// True once the last `window` relative changes of `totals` are all < tol.
// Ties count as "continue".
bool should_stop(std::span<const double> totals, double tol, int window);

// ---------------------------------------------------------------------------
// Baselines: KL multiplicative updates with the same input preparation,
// seeding and stopping rule.

struct BaselineOptions {
  std::size_t rank = 1;
  int max_iters = 200;
  double tol = 1e-5;
  int stop_window = 3;
  std::uint64_t seed = 0;
  double floor = 1e-12;
};

struct NcpReport {
  KruskalFactors factors;
  std::vector<double> trace;  // KL(X || Xhat) + mu * smoothness(A_N)
  int iterations_run = 0;
  bool converged = false;
  double input_scale = 1.0;
};

NcpReport ncp_fit(const DataTensor& x, const BaselineOptions& opts);
NcpReport gncp_fit(const DataTensor& x, const BaselineOptions& opts, const AffinityGraph& graph,
                   double mu);

struct NmfReport {
  Matrix w;  // samples x R
  Matrix h;  // features x R; x_mat ~ w h^T
  std::vector<double> trace;
  int iterations_run = 0;
  bool converged = false;
};

// x_mat has one sample per row (the sample-mode unfolding).
NmfReport nmf_fit(const Matrix& x_mat, const BaselineOptions& opts);
NmfReport gnmf_fit(const Matrix& x_mat, const BaselineOptions& opts, const AffinityGraph& graph,
                   double lambda);

}  // namespace wntf
