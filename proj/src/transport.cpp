#include "wntf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wntf/error.hpp"
#include "wntf/kernels.hpp"

namespace wntf {

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
    throw std::invalid_argument("CostMatrix: must be square and nonempty");
  if (!entries_.allFinite() || (entries_.array() < 0.0).any())
    throw std::invalid_argument("CostMatrix: entries must be finite and nonnegative");
  if (entries_.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("CostMatrix: diagonal must be zero");
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("CostMatrix: must be symmetric");
}

CostMatrix grid_cost(std::size_t n, double exponent, bool normalize) {
  if (n < 1) throw std::invalid_argument("grid_cost: n must be >= 1");
  if (!(exponent > 0.0)) throw std::invalid_argument("grid_cost: exponent must be > 0");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix c(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      c(i, j) = std::pow(std::abs(static_cast<double>(i - j)), exponent);
  const double top = c.maxCoeff();
  if (normalize && top > 0.0) c /= top;
  return CostMatrix(std::move(c));
}

CostMatrix discrete_cost(std::size_t n) {
  if (n < 1) throw std::invalid_argument("discrete_cost: n must be >= 1");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix c = Matrix::Ones(m, m);
  c.diagonal().setZero();
  return CostMatrix(std::move(c));
}

void TransportHyperParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("alpha, beta must be >= 0");
  if (sinkhorn_iters < 1) throw std::invalid_argument("sinkhorn_iters must be >= 1");
  if (!(floor > 0.0) || !(kernel_floor > 0.0) || !(scaling_floor > 0.0)) throw std::invalid_argument("floors must be > 0");
  if (sinkhorn_tol < 0.0) throw std::invalid_argument("sinkhorn_tol must be >= 0");
}

Matrix make_kernel(const CostMatrix& c, double lambda, double floor) {
  if (!(lambda > 0.0)) throw std::invalid_argument("make_kernel: lambda must be > 0");
  return c.entries().unaryExpr([&](double cost) { return std::max(std::exp(-lambda * cost - 1.0), floor); });
}

TransportState initial_state(std::size_t mode, Matrix kernel, Eigen::Index slices) {
  TransportState s;
  s.mode = mode;
  const Eigen::Index n = kernel.rows();
  s.scale_u = Matrix::Ones(n, slices);
  s.scale_v = Matrix::Constant(n, slices, 1.0 / static_cast<double>(n));
  s.kernel = std::move(kernel);
  return s;
}

TransportState update_scalings(const Matrix& x_unf, const Matrix& xhat_unf,
                               TransportState state, const TransportHyperParams& h) {
  h.validate();
  const Eigen::Index n = state.kernel.rows();
  if (x_unf.rows() != n || xhat_unf.rows() != n || x_unf.cols() != xhat_unf.cols() ||
      state.scale_v.rows() != n || state.scale_v.cols() != x_unf.cols())
    throw std::invalid_argument("update_scalings: dimension mismatch");
  const double phi = h.phi();
  const double psi = h.psi();
  const Matrix source_pow = x_unf.array().max(h.floor).pow(phi).matrix();
  const Matrix target_pow = xhat_unf.array().max(h.floor).pow(psi).matrix();
  const kernels::SweepStatus status = kernels::parallel::sinkhorn_scalings(
      state.kernel, source_pow, target_pow, phi, psi, h.sinkhorn_iters, h.sinkhorn_tol,
      h.scaling_floor, state.scale_v, state.scale_u);
  if (!status.finite || !state.scale_u.allFinite())
    throw NumericError("update_scalings: non-finite scaling in mode " +
                       std::to_string(state.mode) + ", slice " +
                       std::to_string(status.bad_column));
  return state;
}

Marginals marginals(const TransportState& state) {
  Marginals m;
  m.source = (state.scale_u.array() * (state.kernel * state.scale_v).array()).matrix();
  m.target = (state.scale_v.array() * (state.kernel.transpose() * state.scale_u).array()).matrix();
  return m;
}

PlanTerms plan_terms(const TransportState& state, const CostMatrix& cost) {
  if (static_cast<Eigen::Index>(cost.size()) != state.kernel.rows())
    throw std::invalid_argument("plan_terms: cost size does not match kernel");
  PlanTerms out;
  const kernels::PlanSums sums =
      kernels::parallel::plan_sums(state.kernel, cost.entries(), state.scale_u, state.scale_v,
                                   out.marginals.source, out.marginals.target);
  out.transport = sums.transport;
  out.entropy = -sums.plan_log_plan;
  return out;
}

double kl_divergence(const Matrix& x, const Matrix& y, double floor) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument("kl_divergence: shape mismatch");
  return kernels::parallel::kl_divergence(x, y, floor);
}

SinkhornResult sinkhorn_distance(const Vector& a_in, const Vector& b_in, const CostMatrix& c,
                                 const TransportHyperParams& h, const SinkhornOptions& opts) {
  h.validate();
  const Eigen::Index m = static_cast<Eigen::Index>(c.size());
  if (a_in.size() != m || b_in.size() != m)
    throw std::invalid_argument("sinkhorn_distance: marginal length does not match cost");
  Vector a = a_in.cwiseMax(h.floor);
  Vector b = b_in.cwiseMax(h.floor);
  a /= a.sum();
  b /= b.sum();

  const Matrix kernel = make_kernel(c, h.lambda, h.kernel_floor);
  Vector u = Vector::Ones(m);
  Vector v = Vector::Ones(m);
  SinkhornResult r;
  constexpr int kCheckEvery = 10;
  for (int it = 1; it <= opts.max_iters; ++it) {
    u = a.cwiseQuotient((kernel * v).cwiseMax(h.scaling_floor));
    v = b.cwiseQuotient((kernel.transpose() * u).cwiseMax(h.scaling_floor));
    r.iterations = it;
    if (it % kCheckEvery == 0 || it == opts.max_iters) {
      if (!u.allFinite() || !v.allFinite())
        throw NumericError("sinkhorn_distance: non-finite scaling at iteration " +
                           std::to_string(it));
      const double err = (u.cwiseProduct(kernel * v) - a).lpNorm<1>();
      if (err < opts.tol) {
        r.converged = true;
        break;
      }
    }
  }
  r.plan = u.asDiagonal() * kernel * v.asDiagonal();
  r.transport = (r.plan.array() * c.entries().array()).sum();
  r.entropy = -(r.plan.array() > 0.0).select(r.plan.array() * r.plan.array().log(), 0.0).sum();
  r.distance = r.transport - r.entropy / h.lambda;
  r.marginal_error = (r.plan.rowwise().sum() - a).lpNorm<1>() +
                     (r.plan.colwise().sum().transpose() - b).lpNorm<1>();
  return r;
}

double wasserstein_matrix_distance(const Matrix& a, const Matrix& b, const CostMatrix& c,
                                   const TransportHyperParams& h, const SinkhornOptions& opts) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("wasserstein_matrix_distance: shape mismatch");
  if (a.rows() != static_cast<Eigen::Index>(c.size()))
    throw std::invalid_argument("wasserstein_matrix_distance: cost size mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    total += sinkhorn_distance(a.col(j), b.col(j), c, h, opts).distance;
  return total;
}

TensorDistance wasserstein_tensor_distance(const DataTensor& x, const DataTensor& y,
                                           std::span<const CostMatrix> costs,
                                           const TransportHyperParams& h,
                                           const SinkhornOptions& opts) {
  if (x.shape() != y.shape()) throw std::invalid_argument("wasserstein_tensor_distance: shapes differ");
  if (costs.size() != x.order())
    throw std::invalid_argument("wasserstein_tensor_distance: need one cost per mode");
  TensorDistance d;
  for (std::size_t n = 0; n < x.order(); ++n) {
    if (costs[n].size() != x.extent(n))
      throw std::invalid_argument("wasserstein_tensor_distance: cost size mismatch in mode " +
                                  std::to_string(n));
    const double term =
        wasserstein_matrix_distance(matricize(x, n), matricize(y, n), costs[n], h, opts);
    d.by_mode.push_back(term);
    d.total += term;
  }
  return d;
}

}  // namespace wntf
