// Reference kernels: whole-matrix Eigen expressions and index arithmetic
// written the direct way. Kept independent of the OpenMP loop structure so
// the two can be checked against each other.

#include <algorithm>
#include <cmath>
#include <vector>

#include "wntf/kernels.hpp"

namespace wntf::kernels::serial {

namespace {

// Column of the mode-n unfolding that holds the entry at `index`.
std::size_t unfolded_column(const std::vector<std::size_t>& index, const Shape& shape,
                            std::size_t mode) {
  std::size_t column = 0;
  std::size_t stride = 1;
  for (std::size_t m = 0; m < shape.size(); ++m) {
    if (m == mode) continue;
    column += index[m] * stride;
    stride *= shape[m];
  }
  return column;
}

void decompose(std::size_t linear, const Shape& shape, std::vector<std::size_t>& index) {
  for (std::size_t m = 0; m < shape.size(); ++m) {
    index[m] = linear % shape[m];
    linear /= shape[m];
  }
}

}  // namespace

void unfold(std::span<const double> values, const Shape& shape, std::size_t mode,
            Matrix& out) {
  const std::size_t rows = shape[mode];
  out.resize(static_cast<Eigen::Index>(rows),
             static_cast<Eigen::Index>(values.size() / rows));
  std::vector<std::size_t> index(shape.size());
  for (std::size_t linear = 0; linear < values.size(); ++linear) {
    decompose(linear, shape, index);
    out(static_cast<Eigen::Index>(index[mode]),
        static_cast<Eigen::Index>(unfolded_column(index, shape, mode))) = values[linear];
  }
}

void fold(const Matrix& unfolded, const Shape& shape, std::size_t mode,
          std::span<double> out) {
  std::vector<std::size_t> index(shape.size());
  for (std::size_t linear = 0; linear < out.size(); ++linear) {
    decompose(linear, shape, index);
    out[linear] = unfolded(static_cast<Eigen::Index>(index[mode]),
                           static_cast<Eigen::Index>(unfolded_column(index, shape, mode)));
  }
}

void product_transpose(const Matrix& a, const Matrix& b, Matrix& out) {
  out.noalias() = a * b.transpose();
}

SweepStatus sinkhorn_scalings(const Matrix& kernel, const Matrix& source_pow,
                              const Matrix& target_pow, double phi, double psi,
                              int iters, double tol, double floor, Matrix& v,
                              Matrix& u) {
  SweepStatus status;
  const Eigen::Index cols = v.cols();
  std::vector<bool> active(static_cast<std::size_t>(cols), true);
  std::vector<int> count(static_cast<std::size_t>(cols), 0);
  for (int it = 0; it < iters; ++it) {
    const Matrix kv = kernel * v;
    const Matrix us = (source_pow.array() / kv.array().max(floor).pow(phi)).matrix();
    const Matrix ktu = kernel.transpose() * us;
    const Matrix next = (target_pow.array() / ktu.array().max(floor).pow(psi)).matrix();
    bool any = false;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (!active[sj]) continue;
      if (!next.col(j).allFinite()) {
        status.finite = false;
        status.bad_column = sj;
        return status;
      }
      const double change =
          ((next.col(j) - v.col(j)).array().abs() / next.col(j).array().abs().max(1e-300))
              .maxCoeff();
      v.col(j) = next.col(j);
      ++count[sj];
      if (tol > 0.0 && change < tol) active[sj] = false;
      any = any || active[sj];
    }
    if (!any) break;
  }
  for (int c : count) status.iterations = std::max(status.iterations, c);
  const Matrix kv = kernel * v;
  u = (source_pow.array() / kv.array().max(floor).pow(phi)).matrix();
  return status;
}

PlanSums plan_sums(const Matrix& kernel, const Matrix& cost, const Matrix& u,
                   const Matrix& v, Matrix& source, Matrix& target) {
  PlanSums sums;
  source = (u.array() * (kernel * v).array()).matrix();
  target = (v.array() * (kernel.transpose() * u).array()).matrix();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const Matrix plan = u.col(j).asDiagonal() * kernel * v.col(j).asDiagonal();
    sums.transport += (plan.array() * cost.array()).sum();
    sums.plan_log_plan += (plan.array() > 0.0).select(plan.array() * plan.array().log(), 0.0).sum();
  }
  return sums;
}

double kl_divergence(const Matrix& x, const Matrix& y, double floor) {
  const auto xs = x.array().max(floor);
  const auto ys = y.array().max(floor);
  return (xs * (xs / ys).log() - xs + ys).sum();
}

void ratio_product(const Matrix& target, const Matrix& factor, const Matrix& coproduct,
                   double floor, Matrix& out) {
  const Matrix approx = factor * coproduct.transpose();
  out.noalias() = (target.array() / approx.array().max(floor)).matrix() * coproduct;
}

}  // namespace wntf::kernels::serial
