#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

#include "gtvmin/analysis.hpp"

// Strict flow feasibility via a max-flow reduction: source arcs carry the
// per-node demands, graph edges their capacities, the hub is the sink. The
// demands are routable with strict slack on every edge iff the max flow
// saturates all source arcs and no nonempty tight cut remains.

namespace gtvmin {

namespace {

constexpr double kTightTol = 1e-12;

struct Arc {
  int to;
  double cap;
  int rev;  // index of the reverse arc in adj[to]
};

class Dinic {
 public:
  explicit Dinic(int n) : adj_(n) {}

  void add_edge(int from, int to, double cap_fwd, double cap_bwd) {
    adj_[from].push_back({to, cap_fwd, static_cast<int>(adj_[to].size())});
    adj_[to].push_back({from, cap_bwd, static_cast<int>(adj_[from].size()) - 1});
  }

  double max_flow(int s, int t, double eps) {
    double total = 0.0;
    while (bfs(s, t, eps)) {
      iter_.assign(adj_.size(), 0);
      while (true) {
        const double f = dfs(s, t, std::numeric_limits<double>::infinity(), eps);
        if (f <= 0.0) break;
        total += f;
      }
    }
    return total;
  }

  // Nodes reachable from s through residual arcs with capacity > eps.
  std::vector<char> residual_reachable(int s, double eps) const {
    std::vector<char> seen(adj_.size(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const Arc& a : adj_[v]) {
        if (a.cap > eps && !seen[a.to]) {
          seen[a.to] = 1;
          stack.push_back(a.to);
        }
      }
    }
    return seen;
  }

  // Nodes that can reach t through residual arcs with capacity > eps.
  std::vector<char> residual_coreachable(int t, double eps) const {
    std::vector<char> seen(adj_.size(), 0);
    std::vector<int> stack{t};
    seen[t] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      // v is reachable backwards through arc (u -> v) iff that arc has
      // residual capacity; scan reverse arcs stored at v.
      for (const Arc& a : adj_[v]) {
        const Arc& fwd = adj_[a.to][a.rev];
        if (fwd.cap > eps && !seen[a.to]) {
          seen[a.to] = 1;
          stack.push_back(a.to);
        }
      }
    }
    return seen;
  }

  const std::vector<std::vector<Arc>>& adj() const { return adj_; }

 private:
  bool bfs(int s, int t, double eps) {
    level_.assign(adj_.size(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (const Arc& a : adj_[v]) {
        if (a.cap > eps && level_[a.to] < 0) {
          level_[a.to] = level_[v] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int v, int t, double limit, double eps) {
    if (v == t) return limit;
    for (int& i = iter_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
      Arc& a = adj_[v][i];
      if (a.cap > eps && level_[a.to] == level_[v] + 1) {
        const double f = dfs(a.to, t, std::min(limit, a.cap), eps);
        if (f > 0.0) {
          a.cap -= f;
          adj_[a.to][a.rev].cap += f;
          return f;
        }
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Arc>> adj_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace

FlowResult flow_feasible(const EmpiricalGraph& capacities, const std::vector<double>& demands,
                         int hub) {
  const int n = capacities.node_count();
  if (static_cast<int>(demands.size()) != n)
    throw std::invalid_argument("one demand per node required");
  if (hub < 0 || hub >= n) throw std::invalid_argument("hub out of range");
  for (int i = 0; i < n; ++i) {
    if (i != hub && (demands[i] < 0.0 || !std::isfinite(demands[i])))
      throw std::invalid_argument("demands must be finite and nonnegative");
  }

  double cap_scale = 1.0;
  for (int e = 0; e < capacities.edge_count(); ++e)
    cap_scale = std::max(cap_scale, capacities.weight(e));
  double demand_total = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != hub) demand_total += demands[i];
  const double eps = kTightTol * std::max(cap_scale, std::max(1.0, demand_total));

  // Network: 0..n-1 graph nodes, n = source; sink is the hub itself.
  Dinic net(n + 1);
  const int source = n;
  for (int i = 0; i < n; ++i) {
    if (i != hub && demands[i] > 0.0) net.add_edge(source, i, demands[i], 0.0);
  }
  std::vector<int> edge_arc(capacities.edge_count(), -1);
  for (int e = 0; e < capacities.edge_count(); ++e) {
    const Edge& edge = capacities.edge(e);
    edge_arc[e] = static_cast<int>(net.adj()[edge.head].size());
    // Undirected edge: full capacity in both directions.
    net.add_edge(edge.head, edge.tail, edge.weight, edge.weight);
  }

  const double flow = net.max_flow(source, hub, eps);

  FlowResult result;
  if (flow < demand_total - eps) {
    // Unroutable demands: the source-side min cut violates the condition.
    result.feasible = false;
    auto seen = net.residual_reachable(source, eps);
    for (int i = 0; i < n; ++i) {
      if (i != hub && seen[i]) result.cut_witness.push_back(i);
    }
    return result;
  }

  // All demands routed; strictness fails iff some nonempty cut is tight,
  // i.e. the maximal source-side min cut contains a graph node.
  auto to_sink = net.residual_coreachable(hub, eps);
  std::vector<int> tight;
  for (int i = 0; i < n; ++i) {
    if (i != hub && !to_sink[i]) tight.push_back(i);
  }
  if (!tight.empty()) {
    result.feasible = false;
    result.cut_witness = std::move(tight);
    return result;
  }

  result.feasible = true;
  result.flow.resize(capacities.edge_count());
  for (int e = 0; e < capacities.edge_count(); ++e) {
    const Edge& edge = capacities.edge(e);
    // Residual on the head->tail arc: cap - residual = net flow head->tail.
    const Arc& a = net.adj()[edge.head][edge_arc[e]];
    result.flow[e] = edge.weight - a.cap;
  }
  return result;
}

}  // namespace gtvmin
