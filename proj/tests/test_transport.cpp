#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "wntf/error.hpp"
#include "wntf/transport.hpp"

using namespace wntf;

namespace {

TransportHyperParams params(double lambda, double alpha = 1.0, double beta = 1.0, int iters = 10) {
  TransportHyperParams h;
  h.lambda = lambda;
  h.alpha = alpha;
  h.beta = beta;
  h.sinkhorn_iters = iters;
  return h;
}

Vector random_masses(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector a(m);
  for (int i = 0; i < m; ++i) a(i) = u(rng) + 0.1;
  return a / a.sum();
}

CostMatrix random_euclidean_cost(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix pts(m, 2);
  for (int i = 0; i < m; ++i) pts.row(i) << u(rng), u(rng);
  Matrix c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) c(i, j) = i == j ? 0.0 : (pts.row(i) - pts.row(j)).norm();
  return CostMatrix(c);
}

TransportState solved_state(const Matrix& x, const Matrix& xhat, const CostMatrix& c,
                            const TransportHyperParams& h) {
  TransportState s = initial_state(0, make_kernel(c, h.lambda, h.kernel_floor), x.cols());
  return update_scalings(x, xhat, std::move(s), h);
}

}  // namespace

TEST_CASE("CostMatrix invariants") {
  Matrix ok(2, 2);
  ok << 0, 1, 1, 0;
  CHECK_NOTHROW(CostMatrix{ok});
  Matrix diag = ok;
  diag(0, 0) = 0.1;
  CHECK_THROWS(CostMatrix{diag});
  Matrix asym = ok;
  asym(0, 1) = 2;
  CHECK_THROWS(CostMatrix{asym});
  Matrix neg = -ok;
  CHECK_THROWS(CostMatrix{neg});
  CHECK_THROWS(CostMatrix{Matrix::Zero(2, 3)});
}

TEST_CASE("grid_cost and discrete_cost") {
  Matrix expect(3, 3);
  expect << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  CHECK(grid_cost(3, 1.0, false).entries() == expect);
  Matrix two(2, 2);
  two << 0, 1, 1, 0;
  CHECK(grid_cost(2, 2.0, true).entries() == two);
  const CostMatrix g = grid_cost(5, 2.0, true);
  CHECK(g(0, 4) == 1.0);
  CHECK(g(1, 2) == doctest::Approx(1.0 / 16.0));
  CHECK(grid_cost(1, 2.0, true).entries() == Matrix::Zero(1, 1));
  CHECK_THROWS(grid_cost(3, 0.0, false));

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> n(1, 12);
  std::uniform_real_distribution<double> q(0.2, 3.0);
  for (int t = 0; t < 20; ++t) {
    const CostMatrix c = grid_cost(n(rng), q(rng), t % 2 == 0);
    CHECK(c.entries() == c.entries().transpose());
    CHECK(c.entries().diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
  const CostMatrix d = discrete_cost(3);
  CHECK(d.entries().sum() == 6.0);
  CHECK(d(1, 1) == 0.0);
}

TEST_CASE("make_kernel") {
  const Matrix k0 = make_kernel(CostMatrix(Matrix::Zero(3, 3)), 7.0);
  CHECK((k0.array() - std::exp(-1.0)).abs().maxCoeff() == 0.0);

  const Matrix k = make_kernel(discrete_cost(3), 100.0);
  CHECK(k(0, 0) == std::exp(-1.0));
  CHECK(k(0, 1) == doctest::Approx(std::exp(-101.0)).epsilon(1e-12));
  const Matrix clamped = make_kernel(discrete_cost(3), 100.0, 1e-30);
  CHECK(clamped(0, 1) == 1e-30);
  CHECK_THROWS(make_kernel(discrete_cost(3), 0.0));

  std::mt19937_64 rng(8);
  const CostMatrix c = random_euclidean_cost(6, rng);
  const Matrix kr = make_kernel(c, 3.0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
          if (c(i, j) < c(a, b)) CHECK(kr(i, j) > kr(a, b));
  CHECK((kr.array() <= std::exp(-1.0)).all());
  CHECK((kr.array() > 0.0).all());
}

TEST_CASE("update_scalings with zero marginal weights gives unit scalings") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(4, 3, rng, 0.1, 1.0);
  const Matrix y = oracle::random_matrix(4, 3, rng, 0.1, 1.0);
  const TransportHyperParams h = params(100.0, 0.0, 0.0, 7);
  CHECK(h.phi() == 0.0);
  CHECK(h.psi() == 0.0);
  const TransportState s = solved_state(x, y, grid_cost(4, 2.0, true), h);
  CHECK(s.scale_u == Matrix::Ones(4, 3));
  CHECK(s.scale_v == Matrix::Ones(4, 3));
}

TEST_CASE("update_scalings validates its inputs") {
  const Matrix x = Matrix::Ones(3, 2);
  TransportState s = initial_state(0, make_kernel(discrete_cost(3), 10.0), 2);
  CHECK(s.scale_u == Matrix::Ones(3, 2));
  CHECK(s.scale_v == Matrix::Constant(3, 2, 1.0 / 3.0));
  CHECK_THROWS(update_scalings(Matrix::Ones(2, 2), x, s, params(10.0)));
  CHECK_THROWS(update_scalings(x, x, s, params(-1.0)));
  CHECK_THROWS(update_scalings(x, x, s, params(10.0, 1.0, 1.0, 0)));
}

TEST_CASE("symmetric input with zero cost gives equal marginals") {
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(5, 4, rng, 0.1, 1.0);
  const TransportState s = solved_state(x, x, CostMatrix(Matrix::Zero(5, 5)), params(100.0, 1.0, 1.0, 200));
  const Marginals m = marginals(s);
  CHECK((m.source - m.target).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("inner Sinkhorn iterates converge") {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(4, 3, rng, 0.1, 1.0);
  const Matrix y = oracle::random_matrix(4, 3, rng, 0.1, 1.0);
  const CostMatrix c = grid_cost(4, 2.0, true);
  double previous_change = std::numeric_limits<double>::infinity();
  Matrix previous = solved_state(x, y, c, params(100.0, 1.0, 1.0, 1)).scale_v;
  for (int iters : {500, 1000, 2000, 4000}) {
    const Matrix v = solved_state(x, y, c, params(100.0, 1.0, 1.0, iters)).scale_v;
    const Matrix next = solved_state(x, y, c, params(100.0, 1.0, 1.0, iters + 1)).scale_v;
    const double change = (next - v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
    CHECK(change <= previous_change);
    previous_change = change;
    previous = v;
  }
  CHECK(previous_change < 1e-8);
}

TEST_CASE("the converged scalings are stationary for the relaxed objective") {
  // C + (1/lambda)(log T + 1) + alpha log(Phi/X) + beta log(Psi/Xhat) = 0
  // reduces to log(u)/lambda + alpha log(Phi/X) = 0 and the mirror for v.
  // Near-zero source entries used to break this through denominator clamping.
  std::mt19937_64 rng(12);
  Matrix x = oracle::random_matrix(8, 3, rng, 0.1, 1.0);
  for (int i = 0; i < 8; i += 3) x.row(i).setConstant(1e-12);
  const Matrix y = oracle::random_matrix(8, 3, rng, 0.1, 1.0);
  const TransportHyperParams h = params(100.0, 1.0, 1.0, 3000);
  const TransportState s = solved_state(x, y, grid_cost(8, 2.0, true), h);
  const Marginals m = marginals(s);
  const Matrix row_res = s.scale_u.array().log() / h.lambda + h.alpha * (m.source.array() / x.array()).log();
  const Matrix col_res = s.scale_v.array().log() / h.lambda + h.beta * (m.target.array() / y.array()).log();
  CHECK(row_res.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(col_res.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("marginals") {
  TransportState s = initial_state(0, make_kernel(CostMatrix(Matrix::Zero(3, 3)), 5.0), 2);
  s.scale_v.setOnes();
  const Marginals m = marginals(s);
  CHECK((m.source.array() - 3.0 * std::exp(-1.0)).abs().maxCoeff() < 1e-15);
  CHECK((m.target.array() - 3.0 * std::exp(-1.0)).abs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = oracle::random_matrix(6, 5, rng, 0.0, 1.0);
    const Matrix y = oracle::random_matrix(6, 5, rng, 0.0, 1.0);
    const TransportState st = solved_state(x, y, grid_cost(6, 2.0, true), params(100.0));
    const Marginals mm = marginals(st);
    CHECK((mm.source.array() >= 0.0).all());
    CHECK((mm.target.array() >= 0.0).all());
    const Eigen::RowVectorXd src_mass = mm.source.colwise().sum();
    const Eigen::RowVectorXd tgt_mass = mm.target.colwise().sum();
    CHECK((src_mass - tgt_mass).cwiseAbs().maxCoeff() <= 1e-10 * src_mass.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("growing source weight pins the source marginal to the data") {
  std::mt19937_64 rng(7);
  const Matrix x = oracle::random_matrix(8, 6, rng, 0.05, 1.0);
  const Matrix y = oracle::random_matrix(8, 6, rng, 0.05, 1.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    const Marginals m = marginals(solved_state(x, y, grid_cost(8, 2.0, true), params(100.0, alpha, 1.0, 3000)));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      worst = std::max(worst, (m.source.col(j) - x.col(j)).lpNorm<1>() / x.col(j).lpNorm<1>());
    CHECK(worst < previous);
    previous = worst;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("sinkhorn_distance limits and oracle agreement") {
  Vector half(2);
  half << 0.5, 0.5;
  Matrix c2(2, 2);
  c2 << 0, 1, 1, 0;
  const SinkhornResult same = sinkhorn_distance(half, half, CostMatrix(c2), params(100.0));
  CHECK(same.converged);
  CHECK(same.transport <= 1e-3);
  CHECK((same.plan - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-3);

  std::mt19937_64 rng(14);
  const Vector a = random_masses(4, rng), b = random_masses(4, rng);
  const SinkhornResult flat = sinkhorn_distance(a, b, random_euclidean_cost(4, rng), params(1e-6));
  CHECK((flat.plan - a * b.transpose()).cwiseAbs().maxCoeff() < 1e-5);

  for (int t = 0; t < 10; ++t) {
    const Vector p = random_masses(6, rng), q = random_masses(6, rng);
    const CostMatrix c = random_euclidean_cost(6, rng);
    const double exact = exact_ot(p, q, c).distance;
    const SinkhornResult s = sinkhorn_distance(p, q, c, params(500.0));
    CHECK(s.converged);
    CHECK(s.marginal_error < 1e-8);
    CHECK(std::abs(s.transport - exact) <= 0.01 * exact);
    CHECK(s.distance >= exact - std::log(36.0) / 500.0);
  }
}

TEST_CASE("balanced marginal error decreases with the iteration budget") {
  std::mt19937_64 rng(15);
  const Vector a = random_masses(6, rng), b = random_masses(6, rng);
  const CostMatrix c = random_euclidean_cost(6, rng);
  SinkhornOptions o;
  o.tol = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int iters : {1, 2, 5, 10, 50, 200, 1000}) {
    o.max_iters = iters;
    const double err = sinkhorn_distance(a, b, c, params(50.0), o).marginal_error;
    CHECK(err <= previous * (1.0 + 1e-12));
    previous = err;
  }
  CHECK(previous < 1e-8);
}

TEST_CASE("flooring below 1e-14 does not change strictly positive results") {
  std::mt19937_64 rng(16);
  const Matrix x = oracle::random_matrix(5, 4, rng, 0.01, 1.0);
  const Matrix y = oracle::random_matrix(5, 4, rng, 0.01, 1.0);
  TransportHyperParams lo = params(100.0), hi = params(100.0);
  lo.floor = 1e-20;
  hi.floor = 1e-15;
  const CostMatrix c = grid_cost(5, 2.0, true);
  const TransportState a = solved_state(x, y, c, lo), b = solved_state(x, y, c, hi);
  CHECK(((a.scale_u - b.scale_u).array().abs() / b.scale_u.array().abs()).maxCoeff() < 1e-9);
  CHECK(((a.scale_v - b.scale_v).array().abs() / b.scale_v.array().abs()).maxCoeff() < 1e-9);
}

TEST_CASE("matrix and tensor Wasserstein distances decompose") {
  std::mt19937_64 rng(17);
  const Matrix a = oracle::random_matrix(4, 3, rng, 0.05, 1.0);
  const Matrix b = oracle::random_matrix(4, 3, rng, 0.05, 1.0);
  const CostMatrix c = grid_cost(4, 2.0, true);
  const TransportHyperParams h = params(50.0);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < 3; ++j) sum += sinkhorn_distance(a.col(j), b.col(j), c, h).distance;
  CHECK(wasserstein_matrix_distance(a, b, c, h) == sum);
  CHECK(wasserstein_matrix_distance(a.col(0), b.col(0), c, h) ==
        sinkhorn_distance(a.col(0), b.col(0), c, h).distance);
  CHECK_THROWS(wasserstein_matrix_distance(a, b.leftCols(2), c, h));

  double transport = 0.0;
  for (Eigen::Index j = 0; j < 3; ++j) transport += sinkhorn_distance(a.col(j), a.col(j), c, params(500.0)).transport;
  CHECK(transport <= 1e-3 * 3);

  const DataTensor x = oracle::random_tensor({4, 5}, rng, 0.05, 1.0);
  const DataTensor y = oracle::random_tensor({4, 5}, rng, 0.05, 1.0);
  const std::vector<CostMatrix> costs{grid_cost(4, 2.0, true), grid_cost(5, 2.0, true)};
  const TensorDistance d = wasserstein_tensor_distance(x, y, costs, h);
  REQUIRE(d.by_mode.size() == 2);
  CHECK(d.by_mode[0] == wasserstein_matrix_distance(matricize(x, 0), matricize(y, 0), costs[0], h));
  CHECK(d.by_mode[1] == wasserstein_matrix_distance(matricize(x, 1), matricize(y, 1), costs[1], h));
  CHECK(d.total == doctest::Approx(d.by_mode[0] + d.by_mode[1]).epsilon(1e-15));
  CHECK_THROWS(wasserstein_tensor_distance(x, y, std::vector<CostMatrix>{costs[0]}, h));
}

TEST_CASE("tensor Wasserstein distance properties") {
  std::mt19937_64 rng(18);
  const Shape shape{3, 3, 3};
  const std::vector<CostMatrix> costs(3, grid_cost(3, 2.0, true));
  const TransportHyperParams h = params(100.0);

  const DataTensor same = oracle::random_tensor(shape, rng, 0.05, 1.0);
  double cost_terms = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    const Matrix u = matricize(same, n);
    for (Eigen::Index j = 0; j < u.cols(); ++j) cost_terms += sinkhorn_distance(u.col(j), u.col(j), costs[n], params(500.0)).transport;
  }
  CHECK(cost_terms <= 1e-3 * 27);

  for (int t = 0; t < 5; ++t) {
    const DataTensor x = oracle::random_tensor(shape, rng, 0.05, 1.0);
    const DataTensor y = oracle::random_tensor(shape, rng, 0.05, 1.0);
    const double xy = wasserstein_tensor_distance(x, y, costs, h).total;
    const double yx = wasserstein_tensor_distance(y, x, costs, h).total;
    CHECK(std::abs(xy - yx) <= 1e-8 * std::max(1.0, std::abs(xy)));

    // Interpolating y toward x lowers the distance at every step.
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 10; ++step) {
      const double w = step / 10.0;
      std::vector<double> v(x.size());
      for (std::size_t e = 0; e < v.size(); ++e) v[e] = (1.0 - w) * y[e] + w * x[e];
      const double d = wasserstein_tensor_distance(x, DataTensor(shape, v), costs, h).total;
      CHECK(d < previous);
      previous = d;
    }
  }
}
