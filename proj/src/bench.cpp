#include "wntf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "wntf/kernels.hpp"
#include "wntf/parallel.hpp"
#include "wntf/transport.hpp"

namespace wntf {

namespace {

template <class F>
double best_time(int repeats, F&& body) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

double max_diff(const Matrix& a, const Matrix& b) {
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace

std::vector<BenchRow> run_benchmarks(const BenchOptions& opts) {
  if (opts.shape.size() < 2) throw std::invalid_argument("bench: shape needs at least two modes");
  if (opts.repeats < 1 || opts.rank < 1) throw std::invalid_argument("bench: repeats and rank must be >= 1");
  std::mt19937_64 rng(opts.seed);
  const Shape& shape = opts.shape;
  const std::size_t total = element_count(shape);
  std::vector<double> values(total);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (double& v : values) v = u(rng);

  const int threads = thread_count();
  std::vector<BenchRow> rows;
  auto add = [&](std::string name, double ts, double tp, double diff) {
    rows.push_back(BenchRow{std::move(name), ts, tp, tp > 0.0 ? ts / tp : 0.0, diff, threads});
  };

  const std::size_t mode = 0;
  const auto in = static_cast<Eigen::Index>(shape[mode]);
  const auto cols = static_cast<Eigen::Index>(total / shape[mode]);
  const auto r = static_cast<Eigen::Index>(opts.rank);

  {
    const std::size_t last = shape.size() - 1;
    Matrix a, b;
    const double ts = best_time(opts.repeats, [&] { kernels::serial::unfold(values, shape, last, a); });
    const double tp = best_time(opts.repeats, [&] { kernels::parallel::unfold(values, shape, last, b); });
    add("unfold", ts, tp, max_diff(a, b));
    std::vector<double> fa(total), fb(total);
    const double fs = best_time(opts.repeats, [&] { kernels::serial::fold(a, shape, last, fa); });
    const double fp = best_time(opts.repeats, [&] { kernels::parallel::fold(a, shape, last, fb); });
    add("fold", fs, fp, max_diff(fa, fb));
  }

  const Matrix factor = random_matrix(in, r, rng);
  const Matrix coproduct = random_matrix(cols, r, rng);
  {
    Matrix a, b;
    const double ts = best_time(opts.repeats, [&] { kernels::serial::product_transpose(factor, coproduct, a); });
    const double tp = best_time(opts.repeats, [&] { kernels::parallel::product_transpose(factor, coproduct, b); });
    add("product_transpose", ts, tp, max_diff(a, b));
  }

  Matrix x_unf;
  kernels::parallel::unfold(values, shape, mode, x_unf);
  Matrix xhat;
  kernels::parallel::product_transpose(factor, coproduct, xhat);
  {
    Matrix a, b;
    const double ts = best_time(opts.repeats, [&] { kernels::serial::ratio_product(x_unf, factor, coproduct, 1e-12, a); });
    const double tp = best_time(opts.repeats, [&] { kernels::parallel::ratio_product(x_unf, factor, coproduct, 1e-12, b); });
    add("ratio_product", ts, tp, max_diff(a, b));
  }
  {
    double ks = 0.0, kp = 0.0;
    const double ts = best_time(opts.repeats, [&] { ks = kernels::serial::kl_divergence(x_unf, xhat, 1e-12); });
    const double tp = best_time(opts.repeats, [&] { kp = kernels::parallel::kl_divergence(x_unf, xhat, 1e-12); });
    add("kl_divergence", ts, tp, std::abs(ks - kp));
  }

  TransportHyperParams h;
  h.lambda = opts.lambda;
  h.sinkhorn_iters = opts.sinkhorn_iters;
  const CostMatrix cost = grid_cost(shape[mode], 2.0, true);
  const Matrix kernel = make_kernel(cost, h.lambda, h.kernel_floor);
  const Matrix src = x_unf.array().pow(h.phi()).matrix();
  const Matrix tgt = xhat.array().pow(h.psi()).matrix();
  const Matrix v0 = Matrix::Constant(in, cols, 1.0 / static_cast<double>(in));
  Matrix us, vs, up, vp;
  {
    const double ts = best_time(opts.repeats, [&] {
      vs = v0;
      kernels::serial::sinkhorn_scalings(kernel, src, tgt, h.phi(), h.psi(), h.sinkhorn_iters, 0.0, h.floor, vs, us);
    });
    const double tp = best_time(opts.repeats, [&] {
      vp = v0;
      kernels::parallel::sinkhorn_scalings(kernel, src, tgt, h.phi(), h.psi(), h.sinkhorn_iters, 0.0, h.floor, vp, up);
    });
    add("sinkhorn_scalings", ts, tp, std::max(max_diff(us, up), max_diff(vs, vp)));
  }
  {
    Matrix s1, t1, s2, t2;
    kernels::PlanSums ps, pp;
    const double ts = best_time(opts.repeats, [&] { ps = kernels::serial::plan_sums(kernel, cost.entries(), us, vs, s1, t1); });
    const double tp = best_time(opts.repeats, [&] { pp = kernels::parallel::plan_sums(kernel, cost.entries(), us, vs, s2, t2); });
    add("plan_sums", ts, tp,
        std::max({max_diff(s1, s2), max_diff(t1, t2), std::abs(ps.transport - pp.transport)}));
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "kernel,threads,serial_s,parallel_s,speedup,max_abs_diff\n";
  char buf[256];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.6e,%.6e,%.3f,%.3e\n", r.kernel.c_str(), r.threads,
                  r.serial_s, r.parallel_s, r.speedup, r.max_abs_diff);
    out << buf;
  }
}

void print_bench_table(const std::vector<BenchRow>& rows, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %8s %12s %12s %8s %10s\n", "kernel", "threads",
                "serial[s]", "parallel[s]", "speedup", "max|diff|");
  out << buf;
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %8d %12.4e %12.4e %8.2f %10.2e\n", r.kernel.c_str(),
                  r.threads, r.serial_s, r.parallel_s, r.speedup, r.max_abs_diff);
    out << buf;
  }
}

}  // namespace wntf
