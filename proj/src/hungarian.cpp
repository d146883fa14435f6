// Shortest-augmenting-path assignment with row/column potentials, O(n^3).

#include <limits>
#include <stdexcept>
#include <vector>

#include "wntf/eval.hpp"

namespace wntf {

std::vector<int> solve_assignment(const Matrix& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw std::invalid_argument("solve_assignment: cost must be square");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> owner(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r = owner[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = cost(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) -
                               u[r] - v[c];
        if (reduced < minv[c]) {
          minv[c] = reduced;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[owner[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> result(n, -1);
  for (std::size_t c = 1; c <= n; ++c) result[owner[c] - 1] = static_cast<int>(c - 1);
  return result;
}

}  // namespace wntf
