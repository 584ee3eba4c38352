#include "gtvmin/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

namespace gtvmin {

namespace {

[[noreturn]] void reject(int i, int j, double w, const std::string& why) {
  throw std::invalid_argument("bad edge (" + std::to_string(i) + "," + std::to_string(j) +
                              "," + std::to_string(w) + "): " + why);
}

}  // namespace

EmpiricalGraph::EmpiricalGraph(int n,
                               const std::vector<std::tuple<int, int, double>>& edge_list)
    : n_(n) {
  if (n < 0) throw std::invalid_argument("node count must be nonnegative");
  edges_.reserve(edge_list.size());
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j, w] : edge_list) {
    if (i < 1 || i > n || j < 1 || j > n) reject(i, j, w, "node id out of range 1.." + std::to_string(n));
    if (i == j) reject(i, j, w, "self-loop");
    if (!(w > 0.0)) reject(i, j, w, "weight must be strictly positive");
    const int head = std::min(i, j) - 1;
    const int tail = std::max(i, j) - 1;
    if (!seen.insert({head, tail}).second) reject(i, j, w, "duplicate edge");
    edges_.push_back({head, tail, w});
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.head, a.tail) < std::tie(b.head, b.tail);
  });
  incident_.assign(n_, {});
  for (int e = 0; e < edge_count(); ++e) {
    incident_[edges_[e].head].push_back({e, +1.0});
    incident_[edges_[e].tail].push_back({e, -1.0});
  }
}

EdgeField EmpiricalGraph::apply_incidence(const NodeField& w) const {
  if (w.count() != n_) throw std::invalid_argument("node field size mismatch");
  EdgeField u(w.dim(), edge_count());
  for (int e = 0; e < edge_count(); ++e) {
    u.values.col(e) = w.values.col(edges_[e].head) - w.values.col(edges_[e].tail);
  }
  return u;
}

NodeField EmpiricalGraph::apply_incidence_transpose(const EdgeField& u) const {
  if (u.count() != edge_count()) throw std::invalid_argument("edge field size mismatch");
  NodeField w(u.dim(), n_);
  // Per-node accumulation over the incident list, in storage order, so the
  // result does not depend on any parallel schedule.
  for (int i = 0; i < n_; ++i) {
    for (const auto& [e, sign] : incident_[i]) {
      w.values.col(i) += sign * u.values.col(e);
    }
  }
  return w;
}

double EmpiricalGraph::weighted_boundary(const std::vector<int>& cluster) const {
  std::vector<char> in(n_, 0);
  for (int i : cluster) in.at(i) = 1;
  double total = 0.0;
  for (const auto& e : edges_) {
    if (in[e.head] != in[e.tail]) total += e.weight;
  }
  return total;
}

double EmpiricalGraph::cut_weight(const std::vector<int>& a, const std::vector<int>& b) const {
  std::vector<char> mark(n_, 0);
  for (int i : a) mark.at(i) = 1;
  for (int i : b) mark.at(i) = 2;
  double total = 0.0;
  for (const auto& e : edges_) {
    const char mh = mark[e.head], mt = mark[e.tail];
    if ((mh == 1 && mt == 2) || (mh == 2 && mt == 1)) total += e.weight;
  }
  return total;
}

bool EmpiricalGraph::is_connected() const {
  if (n_ == 0) return true;
  std::vector<char> visited(n_, 0);
  std::vector<int> stack{0};
  visited[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (const auto& [e, sign] : incident_[i]) {
      const int other = (sign > 0) ? edges_[e].tail : edges_[e].head;
      if (!visited[other]) {
        visited[other] = 1;
        ++count;
        stack.push_back(other);
      }
    }
  }
  return count == n_;
}

EmpiricalGraph build_graph(int n, const std::vector<std::tuple<int, int, double>>& edge_list) {
  return EmpiricalGraph(n, edge_list);
}

}  // namespace gtvmin
