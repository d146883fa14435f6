#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <omp.h>

#include "wntf/kernels.hpp"
#include "wntf/parallel.hpp"

namespace wntf::kernels::parallel {

namespace {

using Index = Eigen::Index;

struct Strides {
  std::size_t below = 1;  // product of extents before the mode
  std::size_t above = 1;  // product of extents after the mode
  std::size_t rows = 1;
};

Strides strides_for(const Shape& shape, std::size_t mode) {
  Strides s;
  s.rows = shape[mode];
  for (std::size_t m = 0; m < mode; ++m) s.below *= shape[m];
  for (std::size_t m = mode + 1; m < shape.size(); ++m) s.above *= shape[m];
  return s;
}

// Fixed-order sum so the total does not depend on the thread schedule.
double ordered_sum(const std::vector<double>& parts) {
  return std::accumulate(parts.begin(), parts.end(), 0.0);
}

}  // namespace

void unfold(std::span<const double> values, const Shape& shape, std::size_t mode,
            Matrix& out) {
  const Strides s = strides_for(shape, mode);
  const auto cols = static_cast<std::ptrdiff_t>(s.below * s.above);
  out.resize(static_cast<Index>(s.rows), cols);
  // entry (lo, i, hi) sits at lo + below * (i + rows * hi); its column is lo + below * hi
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    const std::size_t lo = static_cast<std::size_t>(j) % s.below;
    const std::size_t hi = static_cast<std::size_t>(j) / s.below;
    const std::size_t base = lo + s.below * s.rows * hi;
    for (std::size_t i = 0; i < s.rows; ++i)
      out(static_cast<Index>(i), j) = values[base + s.below * i];
  }
}

void fold(const Matrix& unfolded, const Shape& shape, std::size_t mode,
          std::span<double> out) {
  const Strides s = strides_for(shape, mode);
  const auto cols = static_cast<std::ptrdiff_t>(s.below * s.above);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    const std::size_t lo = static_cast<std::size_t>(j) % s.below;
    const std::size_t hi = static_cast<std::size_t>(j) / s.below;
    const std::size_t base = lo + s.below * s.rows * hi;
    for (std::size_t i = 0; i < s.rows; ++i)
      out[base + s.below * i] = unfolded(static_cast<Index>(i), j);
  }
}

void product_transpose(const Matrix& a, const Matrix& b, Matrix& out) {
  const Index rows = a.rows();
  const Index cols = b.rows();
  const Index rank = a.cols();
  out.resize(rows, cols);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index j = 0; j < cols; ++j) {
    double* col = out.col(j).data();
    std::fill(col, col + rows, 0.0);
    for (Index r = 0; r < rank; ++r) {
      const double w = b(j, r);
      const double* ar = a.col(r).data();
      for (Index i = 0; i < rows; ++i) col[i] += ar[i] * w;
    }
  }
}

SweepStatus sinkhorn_scalings(const Matrix& kernel, const Matrix& source_pow,
                              const Matrix& target_pow, double phi, double psi,
                              int iters, double tol, double floor, Matrix& v,
                              Matrix& u) {
  const Index n = kernel.rows();
  const Index cols = v.cols();
  u.resize(n, cols);
  std::vector<int> count(static_cast<std::size_t>(cols), 0);
  std::vector<char> bad(static_cast<std::size_t>(cols), 0);

#pragma omp parallel num_threads(thread_count())
  {
    std::vector<double> kv(static_cast<std::size_t>(n));
    std::vector<double> us(static_cast<std::size_t>(n));
    std::vector<double> next(static_cast<std::size_t>(n));

    const auto apply_kernel = [&](const double* x, double* y) {
      std::fill(y, y + n, 0.0);
      for (Index k = 0; k < n; ++k) {
        const double xk = x[k];
        const double* kc = kernel.col(k).data();
        for (Index i = 0; i < n; ++i) y[i] += kc[i] * xk;
      }
    };
    const auto apply_kernel_transpose = [&](const double* x, Index k) {
      const double* kc = kernel.col(k).data();
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += kc[i] * x[i];
      return acc;
    };

#pragma omp for schedule(static)
    for (Index j = 0; j < cols; ++j) {
      double* vj = v.col(j).data();
      const double* xp = source_pow.col(j).data();
      const double* yp = target_pow.col(j).data();
      int done = 0;
      for (int it = 0; it < iters; ++it) {
        apply_kernel(vj, kv.data());
        for (Index i = 0; i < n; ++i) us[static_cast<std::size_t>(i)] =
            xp[i] / std::pow(std::max(kv[static_cast<std::size_t>(i)], floor), phi);
        double change = 0.0;
        bool finite = true;
        for (Index k = 0; k < n; ++k) {
          const double ktu = apply_kernel_transpose(us.data(), k);
          const double value = yp[k] / std::pow(std::max(ktu, floor), psi);
          finite = finite && std::isfinite(value);
          change = std::max(change, std::abs(value - vj[k]) / std::max(std::abs(value), 1e-300));
          next[static_cast<std::size_t>(k)] = value;
        }
        if (!finite) {
          bad[static_cast<std::size_t>(j)] = 1;
          break;
        }
        std::copy(next.begin(), next.end(), vj);
        ++done;
        if (tol > 0.0 && change < tol) break;
      }
      count[static_cast<std::size_t>(j)] = done;
      apply_kernel(vj, kv.data());
      double* uj = u.col(j).data();
      for (Index i = 0; i < n; ++i)
        uj[i] = xp[i] / std::pow(std::max(kv[static_cast<std::size_t>(i)], floor), phi);
    }
  }

  SweepStatus status;
  for (std::size_t j = 0; j < bad.size(); ++j) {
    if (bad[j]) {
      status.finite = false;
      status.bad_column = j;
      return status;
    }
  }
  status.iterations = count.empty() ? 0 : *std::max_element(count.begin(), count.end());
  return status;
}

PlanSums plan_sums(const Matrix& kernel, const Matrix& cost, const Matrix& u,
                   const Matrix& v, Matrix& source, Matrix& target) {
  const Index n = kernel.rows();
  const Index cols = u.cols();
  source.setZero(n, cols);
  target.setZero(n, cols);
  std::vector<double> transport(static_cast<std::size_t>(cols), 0.0);
  std::vector<double> entropy(static_cast<std::size_t>(cols), 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index j = 0; j < cols; ++j) {
    double t_sum = 0.0;
    double e_sum = 0.0;
    for (Index k = 0; k < n; ++k) {
      const double vk = v(k, j);
      double col_mass = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double t = u(i, j) * kernel(i, k) * vk;
        source(i, j) += t;
        col_mass += t;
        t_sum += t * cost(i, k);
        if (t > 0.0) e_sum += t * std::log(t);
      }
      target(k, j) = col_mass;
    }
    transport[static_cast<std::size_t>(j)] = t_sum;
    entropy[static_cast<std::size_t>(j)] = e_sum;
  }
  return {ordered_sum(transport), ordered_sum(entropy)};
}

double kl_divergence(const Matrix& x, const Matrix& y, double floor) {
  const Index cols = x.cols();
  const Index rows = x.rows();
  std::vector<double> parts(static_cast<std::size_t>(cols), 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (Index i = 0; i < rows; ++i) {
      const double a = std::max(x(i, j), floor);
      const double b = std::max(y(i, j), floor);
      acc += a * std::log(a / b) - a + b;
    }
    parts[static_cast<std::size_t>(j)] = acc;
  }
  return ordered_sum(parts);
}

void ratio_product(const Matrix& target, const Matrix& factor, const Matrix& coproduct,
                   double floor, Matrix& out) {
  const Index rows = factor.rows();
  const Index rank = factor.cols();
  const Index cols = coproduct.rows();
  out.setZero(rows, rank);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      double approx = 0.0;
      for (Index r = 0; r < rank; ++r) approx += factor(i, r) * coproduct(j, r);
      const double ratio = target(i, j) / std::max(approx, floor);
      for (Index r = 0; r < rank; ++r) out(i, r) += ratio * coproduct(j, r);
    }
  }
}

}  // namespace wntf::kernels::parallel
