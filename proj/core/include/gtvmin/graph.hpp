#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

// Empirical graph over a collection of local datasets: undirected weighted
// edges with canonical orientation (head = min id, tail = max id), plus the
// node/edge vector spaces and the block-incidence map D and its adjoint.
//
// Node ids are 1-based in all I/O (files, error messages, CLI); internal
// storage is 0-based.

namespace gtvmin {

struct Edge {
  int head;       // 0-based, head < tail
  int tail;       // 0-based
  double weight;  // > 0
};

// One vector per node, stored as columns of a d x n matrix.
struct NodeField {
  Eigen::MatrixXd values;

  NodeField() = default;
  NodeField(int dim, int count) : values(Eigen::MatrixXd::Zero(dim, count)) {}
  explicit NodeField(Eigen::MatrixXd v) : values(std::move(v)) {}

  int dim() const { return static_cast<int>(values.rows()); }
  int count() const { return static_cast<int>(values.cols()); }
  bool all_finite() const { return values.allFinite(); }
};

// One vector per edge, columns indexed in edge storage order.
struct EdgeField {
  Eigen::MatrixXd values;

  EdgeField() = default;
  EdgeField(int dim, int count) : values(Eigen::MatrixXd::Zero(dim, count)) {}
  explicit EdgeField(Eigen::MatrixXd v) : values(std::move(v)) {}

  int dim() const { return static_cast<int>(values.rows()); }
  int count() const { return static_cast<int>(values.cols()); }
  bool all_finite() const { return values.allFinite(); }
};

class EmpiricalGraph {
 public:
  // Incident edge of a node, with the node's sign in the incidence matrix
  // (+1 head, -1 tail).
  struct IncidentEdge {
    int edge;
    double sign;
  };

  EmpiricalGraph() = default;

  // Validates and canonicalizes an edge list. Node ids are 1-based here.
  // Rejects self-loops, duplicate edges (in either orientation), nonpositive
  // weights and out-of-range ids; the offending record is named in the
  // exception message. Edges are stored sorted by (head, tail).
  EmpiricalGraph(int n, const std::vector<std::tuple<int, int, double>>& edge_list);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }
  double weight(int e) const { return edges_[e].weight; }

  int degree(int i) const { return static_cast<int>(incident_[i].size()); }
  const std::vector<IncidentEdge>& incident(int i) const { return incident_[i]; }

  // u^(e) = w^(e+) - w^(e-)
  EdgeField apply_incidence(const NodeField& w) const;

  // (D^T u)^(i) = sum_{e: i = e+} u^(e) - sum_{e: i = e-} u^(e)
  NodeField apply_incidence_transpose(const EdgeField& u) const;

  // Sum of weights of edges with exactly one endpoint in `cluster`
  // (0-based node indices). Empty cluster has boundary 0.
  double weighted_boundary(const std::vector<int>& cluster) const;

  // Total weight between two disjoint node sets (0-based).
  double cut_weight(const std::vector<int>& a, const std::vector<int>& b) const;

  bool is_connected() const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<IncidentEdge>> incident_;
};

EmpiricalGraph build_graph(int n, const std::vector<std::tuple<int, int, double>>& edge_list);

}  // namespace gtvmin
