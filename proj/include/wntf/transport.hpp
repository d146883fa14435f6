#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wntf/tensor.hpp"

namespace wntf {

// Symmetric nonnegative ground-distance matrix with a zero diagonal.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

// C(i, j) = |i - j|^q, optionally divided by its largest entry.
CostMatrix grid_cost(std::size_t n, double exponent, bool normalize);

// C(i, j) = 1 for i != j. Every relocation costs the same, so the cost is
// invariant to how the indices are ordered.
CostMatrix discrete_cost(std::size_t n);

struct TransportHyperParams {
  double lambda = 100.0;  // entropic sharpness
  double alpha = 1.0;     // source-marginal KL weight
  double beta = 1.0;      // target-marginal KL weight
  int sinkhorn_iters = 10;
  double sinkhorn_tol = 0.0;  // > 0: per-slice early stop on relative change of V
  double floor = 1e-12;       // clamp for unfoldings and denominators
  double kernel_floor = 1e-300;
  double scaling_floor = 1e-300;  // clamp for K v and K^T u inside the Sinkhorn loop

  double phi() const { return lambda * alpha / (lambda * alpha + 1.0); }
  double psi() const { return lambda * beta / (lambda * beta + 1.0); }
  void validate() const;
};

// K = exp(-lambda C - 1), entries below `floor` clamped up to it.
Matrix make_kernel(const CostMatrix& c, double lambda, double floor = 1e-300);

// Scalings of the sliced plan for one mode: slice j of the plan is
// diag(U.col(j)) * K * diag(V.col(j)).
struct TransportState {
  std::size_t mode = 0;
  Matrix kernel;   // I_n x I_n
  Matrix scale_u;  // I_n x I_-n
  Matrix scale_v;  // I_n x I_-n
};

// U = 1, V = 1 / I_n.
TransportState initial_state(std::size_t mode, Matrix kernel, Eigen::Index slices);

// Inner Sinkhorn loop for the KL-relaxed problem (source x_unf, target
// xhat_unf), starting from state.scale_v. Both unfoldings are floored first.
// Throws NumericError on NaN/Inf.
TransportState update_scalings(const Matrix& x_unf, const Matrix& xhat_unf,
                               TransportState state, const TransportHyperParams& h);

struct Marginals {
  Matrix source;  // U .* (K V): row sums of each slice
  Matrix target;  // V .* (K^T U): column sums of each slice
};

Marginals marginals(const TransportState& state);

struct PlanTerms {
  double transport = 0.0;  // sum_j <C, T_j>
  double entropy = 0.0;    // sum_j H(T_j), H(T) = -<T, log T>
  Marginals marginals;
};

PlanTerms plan_terms(const TransportState& state, const CostMatrix& cost);

// Generalized KL, sum x log(x/y) - x + y, with both sides floored.
double kl_divergence(const Matrix& x, const Matrix& y, double floor = 1e-12);

struct ExactOtResult {
  double distance = 0.0;
  Matrix plan;
};

// Exact transport LP solved as a min-cost flow. Desk scale only (m <= 64).
ExactOtResult exact_ot(const Vector& a, const Vector& b, const CostMatrix& c);

struct SinkhornOptions {
  int max_iters = 200000;
  double tol = 1e-10;  // l1 row-marginal error; columns are exact after each sweep
};

struct SinkhornResult {
  double distance = 0.0;   // <C, T> - H(T) / lambda
  double transport = 0.0;  // <C, T>
  double entropy = 0.0;    // H(T)
  Matrix plan;
  int iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;  // ||T 1 - a||_1 + ||T^T 1 - b||_1
};

// Balanced entropic transport between a and b. Both are floored to h.floor
// and renormalized to unit mass. Non-convergence is reported, not thrown.
SinkhornResult sinkhorn_distance(const Vector& a, const Vector& b, const CostMatrix& c,
                                 const TransportHyperParams& h, const SinkhornOptions& opts = {});

// Sum over columns of sinkhorn_distance(a.col(j), b.col(j)).
double wasserstein_matrix_distance(const Matrix& a, const Matrix& b, const CostMatrix& c,
                                   const TransportHyperParams& h,
                                   const SinkhornOptions& opts = {});

struct TensorDistance {
  double total = 0.0;
  std::vector<double> by_mode;
};

TensorDistance wasserstein_tensor_distance(const DataTensor& x, const DataTensor& y,
                                           std::span<const CostMatrix> costs,
                                           const TransportHyperParams& h,
                                           const SinkhornOptions& opts = {});

}  // namespace wntf
