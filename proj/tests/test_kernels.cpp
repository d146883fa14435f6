#include <doctest.h>

#include "oracles.hpp"
#include "wntf/kernels.hpp"
#include "wntf/parallel.hpp"
#include "wntf/transport.hpp"

using namespace wntf;

namespace {

double max_abs(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

double max_rel(const Matrix& a, const Matrix& b) {
  return max_abs(a, b) / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct ThreadGuard {
  int saved = thread_count();
  ~ThreadGuard() { set_thread_count(saved); }
};

}  // namespace

TEST_CASE("parallel and serial kernels agree for every thread count") {
  ThreadGuard guard;
  std::mt19937_64 rng(21);
  const Shape shape{7, 5, 6};
  const DataTensor t = oracle::random_tensor(shape, rng, 0.01, 1.0);

  for (int threads : {1, 2, 3, 8}) {
    CAPTURE(threads);
    set_thread_count(threads);
    for (std::size_t mode = 0; mode < shape.size(); ++mode) {
      CAPTURE(mode);
      Matrix us, up;
      kernels::serial::unfold(t.values(), shape, mode, us);
      kernels::parallel::unfold(t.values(), shape, mode, up);
      CHECK(us == up);
      CHECK(us == oracle::unfold(t, mode));
      std::vector<double> fs(t.size()), fp(t.size());
      kernels::serial::fold(us, shape, mode, fs);
      kernels::parallel::fold(us, shape, mode, fp);
      CHECK(fs == fp);
      CHECK(std::equal(fs.begin(), fs.end(), t.values().begin()));

      const auto in = us.rows();
      const auto cols = us.cols();
      const Matrix factor = oracle::random_matrix(in, 3, rng, 0.1, 1.0);
      const Matrix coproduct = oracle::random_matrix(cols, 3, rng, 0.1, 1.0);
      Matrix ps, pp;
      kernels::serial::product_transpose(factor, coproduct, ps);
      kernels::parallel::product_transpose(factor, coproduct, pp);
      CHECK(max_rel(ps, pp) <= 1e-12);

      Matrix rs, rp;
      kernels::serial::ratio_product(us, factor, coproduct, 1e-12, rs);
      kernels::parallel::ratio_product(us, factor, coproduct, 1e-12, rp);
      CHECK(max_rel(rs, rp) <= 1e-12);

      const double ks = kernels::serial::kl_divergence(us, ps, 1e-12);
      const double kp = kernels::parallel::kl_divergence(us, ps, 1e-12);
      CHECK(kp == doctest::Approx(ks).epsilon(1e-12));

      const CostMatrix cost = grid_cost(static_cast<std::size_t>(in), 2.0, true);
      const Matrix kernel = make_kernel(cost, 50.0);
      const double phi = 0.9, psi = 0.8;
      const Matrix src = us.array().pow(phi).matrix();
      const Matrix tgt = ps.array().pow(psi).matrix();
      for (double tol : {0.0, 1e-6}) {
        Matrix vs = Matrix::Constant(in, cols, 1.0 / static_cast<double>(in)), vp = vs, u_s, u_p;
        const auto ss = kernels::serial::sinkhorn_scalings(kernel, src, tgt, phi, psi, 25, tol, 1e-300, vs, u_s);
        const auto sp = kernels::parallel::sinkhorn_scalings(kernel, src, tgt, phi, psi, 25, tol, 1e-300, vp, u_p);
        CHECK(ss.finite);
        CHECK(sp.finite);
        CHECK(ss.iterations == sp.iterations);
        CHECK(max_rel(vs, vp) <= 1e-12);
        CHECK(max_rel(u_s, u_p) <= 1e-12);

        Matrix s1, t1, s2, t2;
        const auto qs = kernels::serial::plan_sums(kernel, cost.entries(), u_s, vs, s1, t1);
        const auto qp = kernels::parallel::plan_sums(kernel, cost.entries(), u_s, vs, s2, t2);
        CHECK(max_rel(s1, s2) <= 1e-12);
        CHECK(max_rel(t1, t2) <= 1e-12);
        CHECK(qp.transport == doctest::Approx(qs.transport).epsilon(1e-12));
        CHECK(qp.plan_log_plan == doctest::Approx(qs.plan_log_plan).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("parallel kernels are bit-stable across repeated calls") {
  ThreadGuard guard;
  set_thread_count(4);
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(9, 40, rng, 0.01, 1.0);
  const Matrix y = oracle::random_matrix(9, 40, rng, 0.01, 1.0);
  const double first = kernels::parallel::kl_divergence(x, y, 1e-12);
  for (int i = 0; i < 5; ++i) CHECK(kernels::parallel::kl_divergence(x, y, 1e-12) == first);
}

TEST_CASE("sinkhorn sweep reports non-finite columns") {
  const Matrix kernel = Matrix::Constant(2, 2, 0.3);
  Matrix src(2, 2), tgt(2, 2);
  src.setOnes();
  tgt << 1, 1, 1, std::numeric_limits<double>::infinity();
  for (int variant = 0; variant < 2; ++variant) {
    Matrix v = Matrix::Constant(2, 2, 0.5), u;
    const auto status = variant == 0
        ? kernels::serial::sinkhorn_scalings(kernel, src, tgt, 0.5, 0.5, 5, 0.0, 1e-300, v, u)
        : kernels::parallel::sinkhorn_scalings(kernel, src, tgt, 0.5, 0.5, 5, 0.0, 1e-300, v, u);
    CHECK_FALSE(status.finite);
    CHECK(status.bad_column == 1);
  }
}

TEST_CASE("thread count configuration") {
  ThreadGuard guard;
  set_thread_count(3);
  CHECK(thread_count() == 3);
  CHECK_THROWS(set_thread_count(-1));
  set_thread_count(0);
  CHECK(thread_count() >= 1);
  setenv("WNTF_THREADS", "2", 1);
  CHECK(configure_threads_from_env() == 2);
  setenv("WNTF_THREADS", "zero", 1);
  CHECK_THROWS(configure_threads_from_env());
  unsetenv("WNTF_THREADS");
}
