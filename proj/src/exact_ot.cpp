// Exact discrete transport via successive shortest paths on the bipartite
// flow network  source -> supply_i -> demand_j -> sink.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wntf/transport.hpp"

namespace wntf {

namespace {

constexpr std::size_t kMaxOracleSize = 64;

struct Edge {
  std::size_t to;
  std::size_t rev;  // index of the reverse edge in adj[to]
  double capacity;
  double cost;
};

class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes) : adj_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity, double cost) {
    adj_[from].push_back({to, adj_[to].size(), capacity, cost});
    adj_[to].push_back({from, adj_[from].size() - 1, 0.0, -cost});
    return adj_[from].size() - 1;
  }

  const Edge& edge(std::size_t from, std::size_t index) const { return adj_[from][index]; }

  // Pushes up to `demand` units from s to t along cheapest residual paths.
  double min_cost_flow(std::size_t s, std::size_t t, double demand, double eps) {
    const std::size_t n = adj_.size();
    double sent = 0.0;
    std::vector<double> dist(n);
    std::vector<std::size_t> prev_node(n), prev_edge(n);
    std::vector<char> queued(n);
    while (sent < demand - eps) {
      std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
      std::fill(queued.begin(), queued.end(), 0);
      dist[s] = 0.0;
      std::deque<std::size_t> queue{s};
      queued[s] = 1;
      while (!queue.empty()) {
        const std::size_t x = queue.front();
        queue.pop_front();
        queued[x] = 0;
        for (std::size_t k = 0; k < adj_[x].size(); ++k) {
          const Edge& e = adj_[x][k];
          if (e.capacity <= eps) continue;
          const double nd = dist[x] + e.cost;
          if (nd < dist[e.to] - 1e-15) {
            dist[e.to] = nd;
            prev_node[e.to] = x;
            prev_edge[e.to] = k;
            if (!queued[e.to]) {
              queued[e.to] = 1;
              queue.push_back(e.to);
            }
          }
        }
      }
      if (!std::isfinite(dist[t])) break;
      double push = demand - sent;
      for (std::size_t x = t; x != s; x = prev_node[x])
        push = std::min(push, adj_[prev_node[x]][prev_edge[x]].capacity);
      for (std::size_t x = t; x != s; x = prev_node[x]) {
        Edge& e = adj_[prev_node[x]][prev_edge[x]];
        e.capacity -= push;
        adj_[x][e.rev].capacity += push;
      }
      sent += push;
    }
    return sent;
  }

 private:
  std::vector<std::vector<Edge>> adj_;
};

}  // namespace

ExactOtResult exact_ot(const Vector& a, const Vector& b, const CostMatrix& c) {
  const std::size_t m = c.size();
  if (m > kMaxOracleSize) throw std::invalid_argument("exact_ot: size exceeds oracle limit of 64");
  if (static_cast<std::size_t>(a.size()) != m || static_cast<std::size_t>(b.size()) != m)
    throw std::invalid_argument("exact_ot: marginal length does not match cost");
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any())
    throw std::invalid_argument("exact_ot: marginals must be nonnegative");
  const double mass = a.sum();
  if (std::abs(mass - b.sum()) > 1e-9) throw std::invalid_argument("exact_ot: infeasible, masses differ");

  const std::size_t source = 2 * m;
  const std::size_t sink = 2 * m + 1;
  FlowNetwork net(2 * m + 2);
  std::vector<std::vector<std::size_t>> arc(m, std::vector<std::size_t>(m));
  for (std::size_t i = 0; i < m; ++i) {
    net.add_edge(source, i, a(static_cast<Eigen::Index>(i)), 0.0);
    net.add_edge(m + i, sink, b(static_cast<Eigen::Index>(i)), 0.0);
    for (std::size_t j = 0; j < m; ++j)
      arc[i][j] = net.add_edge(i, m + j, std::numeric_limits<double>::infinity(),
                               c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  net.min_cost_flow(source, sink, std::min(mass, b.sum()), 1e-15 * std::max(mass, 1.0));

  ExactOtResult r;
  r.plan = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      // flow on i -> j equals the capacity accumulated on its reverse arc
      const Edge& e = net.edge(i, arc[i][j]);
      const double flow = net.edge(e.to, e.rev).capacity;
      r.plan(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flow;
    }
  r.distance = (r.plan.array() * c.entries().array()).sum();
  return r;
}

}  // namespace wntf
