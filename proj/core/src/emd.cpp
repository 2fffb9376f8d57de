#include "ptsim/emd.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

#include "ptsim/error.hpp"

namespace ptsim {
namespace {

class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes) : adj_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, std::int64_t cap, double cost) {
    adj_[from].push_back(edges_.size());
    edges_.push_back({to, cap, cost});
    adj_[to].push_back(edges_.size());
    edges_.push_back({from, 0, -cost});
    return edges_.size() - 2;
  }

  std::int64_t flow_on(std::size_t edge) const { return edges_[edge ^ 1].cap; }

  // All initial costs are non-negative, so zero potentials are feasible and
  // Dijkstra on reduced costs stays valid after every augmentation.
  double run(std::size_t s, std::size_t t) {
    const std::size_t n = adj_.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> potential(n, 0.0), dist(n);
    std::vector<std::size_t> via(n);
    std::vector<bool> done(n);
    double total = 0.0;
    for (;;) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(done.begin(), done.end(), false);
      dist[s] = 0.0;
      for (;;) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
          if (!done[v] && dist[v] < inf && (u == n || dist[v] < dist[u])) u = v;
        }
        if (u == n) break;
        done[u] = true;
        for (const std::size_t e : adj_[u]) {
          const Edge& ed = edges_[e];
          if (ed.cap <= 0 || done[ed.to]) continue;
          const double reduced = std::max(0.0, ed.cost + potential[u] - potential[ed.to]);
          if (dist[u] + reduced < dist[ed.to]) {
            dist[ed.to] = dist[u] + reduced;
            via[ed.to] = e;
          }
        }
      }
      if (dist[t] == inf) break;
      for (std::size_t v = 0; v < n; ++v) {
        if (dist[v] < inf) potential[v] += dist[v];
      }
      std::int64_t push = std::numeric_limits<std::int64_t>::max();
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) push = std::min(push, edges_[via[v]].cap);
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
        total += static_cast<double>(push) * edges_[via[v]].cost;
      }
    }
    return total;
  }

 private:
  struct Edge {
    std::size_t to;
    std::int64_t cap;
    double cost;
  };
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

bool less_variants(const std::vector<Variant>& a, const std::vector<Variant>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const Variant& x, const Variant& y) {
    return std::tie(x.sequence, x.count) < std::tie(y.sequence, y.count);
  });
}

}  // namespace

std::size_t levenshtein(const ActivitySequence& a, const ActivitySequence& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double trace_distance(const ActivitySequence& a, const ActivitySequence& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

TransportPlan solve_transport(const std::vector<std::int64_t>& supply, const std::vector<std::int64_t>& demand,
                              const std::vector<std::vector<double>>& cost) {
  const std::size_t m = supply.size(), n = demand.size();
  if (std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) !=
      std::accumulate(demand.begin(), demand.end(), std::int64_t{0})) {
    throw Error(ErrorCode::InvalidArgument, "transportation problem is unbalanced");
  }
  const std::size_t source = m + n, sink = m + n + 1;
  MinCostFlow g(m + n + 2);
  for (std::size_t i = 0; i < m; ++i) g.add_edge(source, i, supply[i], 0.0);
  for (std::size_t j = 0; j < n; ++j) g.add_edge(m + j, sink, demand[j], 0.0);
  std::vector<std::vector<std::size_t>> ids(m, std::vector<std::size_t>(n));
  const std::int64_t unbounded = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) ids[i][j] = g.add_edge(i, m + j, unbounded, cost[i][j]);
  }
  g.run(source, sink);
  TransportPlan plan;
  plan.flow.assign(m, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      plan.flow[i][j] = g.flow_on(ids[i][j]);
      plan.cost += static_cast<double>(plan.flow[i][j]) * cost[i][j];
    }
  }
  return plan;
}

EmdReport emd(const std::vector<Variant>& v1, const std::vector<Variant>& v2) {
  if (v1.empty() || v2.empty()) throw Error(ErrorCode::EmptyLog, "earth mover's distance needs two non-empty logs");
  std::int64_t n1 = 0, n2 = 0;
  for (const auto& v : v1) n1 += static_cast<std::int64_t>(v.count);
  for (const auto& v : v2) n2 += static_cast<std::int64_t>(v.count);

  EmdReport report;
  report.variants1 = v1;
  report.variants2 = v2;
  report.ground_costs.assign(v1.size(), std::vector<double>(v2.size()));
  for (std::size_t i = 0; i < v1.size(); ++i) {
    for (std::size_t j = 0; j < v2.size(); ++j) report.ground_costs[i][j] = trace_distance(v1[i].sequence, v2[j].sequence);
  }
  // Solve in a canonical orientation so emd(a, b) and emd(b, a) perform the
  // same floating-point operations and agree bit for bit.
  const bool swapped = less_variants(v2, v1);
  const auto& a = swapped ? v2 : v1;
  const auto& b = swapped ? v1 : v2;
  const std::int64_t na = swapped ? n2 : n1, nb = swapped ? n1 : n2;
  std::vector<std::int64_t> supply, demand;
  for (const auto& v : a) supply.push_back(static_cast<std::int64_t>(v.count) * nb);
  for (const auto& v : b) demand.push_back(static_cast<std::int64_t>(v.count) * na);
  std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) cost[i][j] = swapped ? report.ground_costs[j][i] : report.ground_costs[i][j];
  }

  const TransportPlan plan = solve_transport(supply, demand, cost);
  const double total = static_cast<double>(n1) * static_cast<double>(n2);
  for (std::size_t i = 0; i < v1.size(); ++i) {
    for (std::size_t j = 0; j < v2.size(); ++j) {
      const std::int64_t f = swapped ? plan.flow[j][i] : plan.flow[i][j];
      if (f == 0) continue;
      report.flow.push_back(EmdFlow{i, j, static_cast<double>(f) / total, report.ground_costs[i][j]});
    }
  }
  report.distance = plan.cost / total;
  return report;
}

EmdReport emd(const EventLog& log1, const EventLog& log2) {
  if (log1.empty() || log2.empty()) {
    throw Error(ErrorCode::EmptyLog, "earth mover's distance needs two non-empty logs");
  }
  return emd(variants(log1), variants(log2));
}

}  // namespace ptsim
