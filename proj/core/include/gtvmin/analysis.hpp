#pragma once

#include <optional>
#include <vector>

#include "gtvmin/graph.hpp"
#include "gtvmin/losses.hpp"
#include "gtvmin/penalties.hpp"
#include "gtvmin/solver.hpp"

// Cluster-structure toolkit: cluster graph construction, cluster-wise
// pooled-training oracle, well-connectedness certification and the
// intra-cluster constancy / deviation bound check.

namespace gtvmin {

// Disjoint covering partition of the nodes into clusters 1..F
// (0-based internally).
class Partition {
 public:
  Partition() = default;
  // assignment[i] = cluster index in 0..F-1 for node i (0-based).
  Partition(std::vector<int> assignment, int cluster_count);
  // From explicit member lists (must be disjoint and covering).
  static Partition from_clusters(int n, const std::vector<std::vector<int>>& clusters);

  int cluster_count() const { return f_; }
  int node_count() const { return static_cast<int>(assignment_.size()); }
  int cluster_of(int node) const { return assignment_[node]; }
  const std::vector<int>& members(int cluster) const { return members_[cluster]; }

 private:
  std::vector<int> assignment_;
  std::vector<std::vector<int>> members_;
  int f_ = 0;
};

// Sum of member losses of one cluster; evaluation and gradient distribute
// over members, the minimizer is the cluster-wise oracle.
class AggregateLoss {
 public:
  explicit AggregateLoss(std::vector<const LocalLoss*> members);

  int dim() const { return dim_; }
  double evaluate(const Eigen::VectorXd& v) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& v) const;
  const std::vector<const LocalLoss*>& members() const { return members_; }

 private:
  std::vector<const LocalLoss*> members_;
  int dim_ = 0;
};

struct ClusterGraph {
  EmpiricalGraph graph;                 // one node per cluster
  std::vector<AggregateLoss> losses;    // aggregated per cluster
};

ClusterGraph build_cluster_graph(const EmpiricalGraph& g, const Partition& p,
                                 const std::vector<LocalLoss>& losses);

struct ClusterOracleResult {
  Eigen::VectorXd w;
  bool unique;      // false when the aggregated quadratic is singular
  double min_eig;   // smallest eigenvalue of the aggregated quadratic (when quadratic)
};

// Minimizer of the summed losses: closed form for quadratic-structured
// members (squared/ridge/trivial), Newton to 1e-10 when logistic members are
// present. Lasso members are unsupported.
ClusterOracleResult cluster_oracle(const AggregateLoss& loss);

// Per-node constants of one cluster; computed analytically for
// quadratic-structured losses, otherwise supplied by the caller.
struct ClusterConstants {
  double sigma_c;              // strong convexity of the aggregated loss
  std::vector<double> lipschitz;  // L_i per member, cluster order
  std::vector<double> eps;        // ||grad l_i(wbar_C)|| per member
  Eigen::VectorXd oracle;         // wbar_C
};

struct ClusterCertificate {
  int cluster;                     // 0-based cluster index
  std::optional<int> hub;          // certified hub (0-based node id), when well-connected
  bool well_connected = false;
  double sigma_c = 0.0;
  double boundary = 0.0;           // |dC|
  std::vector<double> lipschitz;   // per member, cluster order
  std::vector<double> eps;         // per member, cluster order
  Eigen::VectorXd oracle;          // wbar_C
  std::vector<int> witness;        // violating subset (0-based node ids) when not certified
};

enum class WellConnectedMode { max_flow, exhaustive };

// Checks whether a cluster is well-connected: there is a hub
// i0 such that for every nonempty subset A of the cluster minus the hub,
//   sum_{i in A} [ boundary_i + L_i |dC| / sigma_c + eps_i / lambda ]
//     < (weight of the cut between A and the rest of the cluster),
// decided either by strict flow feasibility (max-flow) or by exhaustive
// subset enumeration (clusters of at most 25 nodes). Ties within 1e-12 count
// as violations. If no hub is given, all candidates are tried and the first
// passing hub is reported.
ClusterCertificate check_well_connected(const EmpiricalGraph& g, const Partition& p,
                                        int cluster, const std::vector<LocalLoss>& losses,
                                        double lambda, std::optional<int> hub = std::nullopt,
                                        WellConnectedMode mode = WellConnectedMode::max_flow,
                                        const ClusterConstants* supplied = nullptr);

// Analytic constants for a cluster of quadratic-structured losses.
ClusterConstants compute_cluster_constants(const Partition& p, int cluster,
                                           const std::vector<LocalLoss>& losses);

struct ClusterReport {
  int cluster;
  bool certified;          // all clusters hold a well-connectedness certificate
  double spread;           // max intra-cluster ||w_i - w_j||
  double deviation;        // max_i ||w_i - wbar_C||
  double bound;            // 2 |dC| lambda / sigma_c
  bool bound_holds;
};

// Per-cluster intra-cluster constancy and deviation-vs-bound report for a
// solved instance. Clusters whose certificate fails are marked uncertified
// (their spread/deviation are still reported, the bound check is void).
std::vector<ClusterReport> verify_constancy_bound(const EmpiricalGraph& g, const Partition& p,
                                                const std::vector<LocalLoss>& losses,
                                                double lambda, const GtvPenalty& penalty,
                                                const NodeField& w_hat);

struct FlowResult {
  bool feasible;
  // Signed flow per edge (canonical head-to-tail positive) when feasible.
  std::vector<double> flow;
  // Violating subset (0-based node ids, hub excluded) when infeasible.
  std::vector<int> cut_witness;
};

// Decides existence of a scalar flow with |f_e| strictly below the edge
// capacities whose divergence matches the given nonnegative demands, all
// absorbed at the hub. Demands are indexed by node (hub entry ignored).
FlowResult flow_feasible(const EmpiricalGraph& capacities, const std::vector<double>& demands,
                         int hub);

}  // namespace gtvmin
