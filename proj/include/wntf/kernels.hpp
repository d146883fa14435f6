#pragma once

// Hot loops of the factorization, in two flavours with identical contracts:
//
//   kernels::serial    plain loops, single thread. The reference used by tests
//                      and the benchmark baseline.
//   kernels::parallel  OpenMP over independent columns (or rows). No
//                      cross-thread reductions: partial sums are written per
//                      column and reduced in a fixed order, so results do not
//                      depend on the schedule.
//
// The library's public operations call kernels::parallel.
//
//   unfold / fold        mode-n matricization of a column-major buffer and back
//   product_transpose    out = a * b^T
//   sinkhorn_scalings    powered Sinkhorn loop, column by column:
//                          v <- target_pow / (K^T (source_pow / (K v)^phi))^psi
//                        for `iters` sweeps (with tol > 0 a column stops once the
//                        relative sup-norm change of v drops below tol), then
//                          u <- source_pow / (K v)^phi
//   plan_sums            slice plans T_j = diag(u_j) K diag(v_j): fills the row
//                        sums (source) and column sums (target), returns the
//                        summed <C, T> and <T, log T>
//   kl_divergence        sum x log(x/y) - x + y, both sides floored
//   ratio_product        out = (target / max(factor * coproduct^T, floor)) * coproduct

#include <cstddef>
#include <span>

#include "wntf/tensor.hpp"

namespace wntf::kernels {

struct SweepStatus {
  int iterations = 0;  // largest per-column iteration count
  bool finite = true;
  std::size_t bad_column = 0;
};

struct PlanSums {
  double transport = 0.0;
  double plan_log_plan = 0.0;  // equals -H(T)
};

namespace serial {

void unfold(std::span<const double> values, const Shape& shape, std::size_t mode,
            Matrix& out);
void fold(const Matrix& unfolded, const Shape& shape, std::size_t mode,
          std::span<double> out);
void product_transpose(const Matrix& a, const Matrix& b, Matrix& out);
SweepStatus sinkhorn_scalings(const Matrix& kernel, const Matrix& source_pow,
                              const Matrix& target_pow, double phi, double psi,
                              int iters, double tol, double floor, Matrix& v,
                              Matrix& u);
PlanSums plan_sums(const Matrix& kernel, const Matrix& cost, const Matrix& u,
                   const Matrix& v, Matrix& source, Matrix& target);
double kl_divergence(const Matrix& x, const Matrix& y, double floor);
void ratio_product(const Matrix& target, const Matrix& factor,
                   const Matrix& coproduct, double floor, Matrix& out);

}  // namespace serial

namespace parallel {

void unfold(std::span<const double> values, const Shape& shape, std::size_t mode,
            Matrix& out);
void fold(const Matrix& unfolded, const Shape& shape, std::size_t mode,
          std::span<double> out);
void product_transpose(const Matrix& a, const Matrix& b, Matrix& out);
SweepStatus sinkhorn_scalings(const Matrix& kernel, const Matrix& source_pow,
                              const Matrix& target_pow, double phi, double psi,
                              int iters, double tol, double floor, Matrix& v,
                              Matrix& u);
PlanSums plan_sums(const Matrix& kernel, const Matrix& cost, const Matrix& u,
                   const Matrix& v, Matrix& source, Matrix& target);
double kl_divergence(const Matrix& x, const Matrix& y, double floor);
void ratio_product(const Matrix& target, const Matrix& factor,
                   const Matrix& coproduct, double floor, Matrix& out);

}  // namespace parallel

}  // namespace wntf::kernels
