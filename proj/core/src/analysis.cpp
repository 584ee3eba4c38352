#include "gtvmin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace gtvmin {

namespace {
constexpr double kStrictMargin = 1e-12;
constexpr double kNewtonTol = 1e-10;
constexpr int kNewtonMaxIters = 200;

bool quadratic_structured(const LocalLoss& loss) {
  return loss.kind() == LossKind::trivial || loss.kind() == LossKind::squared ||
         loss.kind() == LossKind::ridge;
}
}  // namespace

Partition::Partition(std::vector<int> assignment, int cluster_count)
    : assignment_(std::move(assignment)), f_(cluster_count) {
  members_.assign(f_, {});
  for (size_t i = 0; i < assignment_.size(); ++i) {
    const int c = assignment_[i];
    if (c < 0 || c >= f_) throw std::invalid_argument("cluster index out of range");
    members_[c].push_back(static_cast<int>(i));
  }
}

Partition Partition::from_clusters(int n, const std::vector<std::vector<int>>& clusters) {
  std::vector<int> assignment(n, -1);
  for (size_t c = 0; c < clusters.size(); ++c) {
    for (int i : clusters[c]) {
      if (i < 0 || i >= n) throw std::invalid_argument("node id out of range");
      if (assignment[i] != -1) throw std::invalid_argument("clusters must be disjoint");
      assignment[i] = static_cast<int>(c);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (assignment[i] == -1) throw std::invalid_argument("clusters must cover all nodes");
  }
  return Partition(std::move(assignment), static_cast<int>(clusters.size()));
}

AggregateLoss::AggregateLoss(std::vector<const LocalLoss*> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("aggregate of zero losses");
  dim_ = members_.front()->dim();
  for (const auto* m : members_) {
    if (m->dim() != dim_) throw std::invalid_argument("member dimension mismatch");
  }
}

double AggregateLoss::evaluate(const Eigen::VectorXd& v) const {
  double total = 0.0;
  for (const auto* m : members_) total += m->evaluate(v);
  return total;
}

Eigen::VectorXd AggregateLoss::gradient(const Eigen::VectorXd& v) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (const auto* m : members_) g += m->gradient(v);
  return g;
}

ClusterGraph build_cluster_graph(const EmpiricalGraph& g, const Partition& p,
                                 const std::vector<LocalLoss>& losses) {
  if (p.node_count() != g.node_count()) throw std::invalid_argument("partition size mismatch");
  if (static_cast<int>(losses.size()) != g.node_count())
    throw std::invalid_argument("one loss per node required");

  // Aggregated inter-cluster weights Abar_{c,c'} = sum of crossing weights.
  std::map<std::pair<int, int>, double> agg;
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    const int ch = p.cluster_of(edge.head);
    const int ct = p.cluster_of(edge.tail);
    if (ch == ct) continue;
    agg[{std::min(ch, ct), std::max(ch, ct)}] += edge.weight;
  }
  std::vector<std::tuple<int, int, double>> edge_list;
  edge_list.reserve(agg.size());
  for (const auto& [key, w] : agg) edge_list.emplace_back(key.first + 1, key.second + 1, w);

  ClusterGraph out{EmpiricalGraph(p.cluster_count(), edge_list), {}};
  out.losses.reserve(p.cluster_count());
  for (int c = 0; c < p.cluster_count(); ++c) {
    std::vector<const LocalLoss*> members;
    members.reserve(p.members(c).size());
    for (int i : p.members(c)) members.push_back(&losses[i]);
    out.losses.emplace_back(std::move(members));
  }
  return out;
}

ClusterOracleResult cluster_oracle(const AggregateLoss& loss) {
  const int d = loss.dim();
  bool all_quadratic = true;
  bool has_lasso = false;
  for (const auto* m : loss.members()) {
    if (!quadratic_structured(*m)) all_quadratic = false;
    if (m->kind() == LossKind::lasso) has_lasso = true;
  }
  if (has_lasso)
    throw UnsupportedOperation("cluster oracle does not support lasso members");

  if (all_quadratic) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (const auto* m : loss.members()) {
      Q += m->quadratic_term();
      b += m->linear_term();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double max_eig = eig.eigenvalues().maxCoeff();
    if (min_eig <= 1e-10 * std::max(1.0, max_eig)) {
      // Singular aggregated quadratic: minimum-norm minimizer, flagged.
      Eigen::VectorXd w = Q.completeOrthogonalDecomposition().solve(b);
      return {w, false, min_eig};
    }
    return {Q.llt().solve(b), true, min_eig};
  }

  // Newton with backtracking on the aggregated objective.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < kNewtonMaxIters; ++it) {
    Eigen::VectorXd grad = loss.gradient(w);
    if (grad.norm() <= kNewtonTol) break;
    // Numerical Hessian by central differences of the gradient.
    Eigen::MatrixXd H(d, d);
    const double h = 1e-6;
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      H.col(j) = (loss.gradient(wp) - loss.gradient(wm)) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()) + 1e-12 * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd step = H.ldlt().solve(-grad);
    double alpha = 1.0;
    const double f0 = loss.evaluate(w);
    while (alpha > 1e-12 && loss.evaluate(w + alpha * step) > f0 + 1e-4 * alpha * grad.dot(step))
      alpha *= 0.5;
    w += alpha * step;
  }
  return {w, true, 0.0};
}

ClusterConstants compute_cluster_constants(const Partition& p, int cluster,
                                           const std::vector<LocalLoss>& losses) {
  const auto& members = p.members(cluster);
  std::vector<const LocalLoss*> ptrs;
  for (int i : members) {
    if (!quadratic_structured(losses[i]))
      throw UnsupportedOperation(
          "cluster constants are analytic for squared-loss nodes only; supply them for other kinds");
    ptrs.push_back(&losses[i]);
  }
  AggregateLoss agg(ptrs);
  ClusterOracleResult oracle = cluster_oracle(agg);

  ClusterConstants c;
  c.oracle = oracle.w;
  c.sigma_c = 2.0 * oracle.min_eig;
  c.lipschitz.reserve(members.size());
  c.eps.reserve(members.size());
  for (int i : members) {
    c.lipschitz.push_back(2.0 * losses[i].max_eigenvalue());
    c.eps.push_back(losses[i].gradient(oracle.w).norm());
  }
  return c;
}

namespace {

// Per-node demand bounds of the well-connectedness condition.
std::vector<double> demand_bounds(const EmpiricalGraph& g, const Partition& p, int cluster,
                                  double lambda, const ClusterConstants& c) {
  const auto& members = p.members(cluster);
  std::vector<char> in_cluster(g.node_count(), 0);
  for (int i : members) in_cluster[i] = 1;
  double boundary = 0.0;
  std::vector<double> node_boundary(members.size(), 0.0);
  for (size_t idx = 0; idx < members.size(); ++idx) {
    for (const auto& [e, sign] : g.incident(members[idx])) {
      const Edge& edge = g.edge(e);
      const int other = (sign > 0) ? edge.tail : edge.head;
      if (!in_cluster[other]) node_boundary[idx] += edge.weight;
    }
  }
  for (double b : node_boundary) boundary += b;

  std::vector<double> beta(members.size());
  for (size_t idx = 0; idx < members.size(); ++idx) {
    double eps_over_lambda;
    if (c.eps[idx] == 0.0) {
      eps_over_lambda = 0.0;
    } else if (lambda > 0.0) {
      eps_over_lambda = c.eps[idx] / lambda;
    } else {
      eps_over_lambda = std::numeric_limits<double>::infinity();
    }
    const double lips_term =
        (c.sigma_c > 0.0) ? c.lipschitz[idx] * boundary / c.sigma_c
                          : (boundary > 0.0 && c.lipschitz[idx] > 0.0
                                 ? std::numeric_limits<double>::infinity()
                                 : 0.0);
    beta[idx] = node_boundary[idx] + lips_term + eps_over_lambda;
  }
  return beta;
}

EmpiricalGraph induced_subgraph(const EmpiricalGraph& g, const std::vector<int>& members,
                                std::vector<int>& local_of) {
  local_of.assign(g.node_count(), -1);
  for (size_t idx = 0; idx < members.size(); ++idx) local_of[members[idx]] = static_cast<int>(idx);
  std::vector<std::tuple<int, int, double>> edge_list;
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    const int a = local_of[edge.head], b = local_of[edge.tail];
    if (a >= 0 && b >= 0) edge_list.emplace_back(a + 1, b + 1, edge.weight);
  }
  return EmpiricalGraph(static_cast<int>(members.size()), edge_list);
}

// Exhaustive check of the subset condition for one hub. Returns the worst
// subset (smallest cut-minus-demand margin) through `witness` when violated.
bool exhaustive_hub_check(const EmpiricalGraph& sub, const std::vector<double>& beta, int hub,
                          std::vector<int>& witness) {
  const int n = sub.node_count();
  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (i != hub) others.push_back(i);
  const int m = static_cast<int>(others.size());
  if (m > 24) throw std::invalid_argument("exhaustive mode supports clusters of at most 25 nodes");

  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<int> worst_set;
  for (unsigned long mask = 1; mask < (1ul << m); ++mask) {
    std::vector<char> in_a(n, 0);
    double demand = 0.0;
    for (int b = 0; b < m; ++b) {
      if (mask & (1ul << b)) {
        in_a[others[b]] = 1;
        demand += beta[others[b]];
      }
    }
    double cut = 0.0;
    for (int e = 0; e < sub.edge_count(); ++e) {
      const Edge& edge = sub.edge(e);
      if (in_a[edge.head] != in_a[edge.tail]) cut += edge.weight;
    }
    const double margin = cut - demand;
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_set.clear();
      for (int i = 0; i < n; ++i)
        if (in_a[i]) worst_set.push_back(i);
    }
  }
  if (worst_margin <= kStrictMargin) {
    witness = worst_set;
    return false;
  }
  return true;
}

}  // namespace

ClusterCertificate check_well_connected(const EmpiricalGraph& g, const Partition& p,
                                        int cluster, const std::vector<LocalLoss>& losses,
                                        double lambda, std::optional<int> hub,
                                        WellConnectedMode mode,
                                        const ClusterConstants* supplied) {
  if (cluster < 0 || cluster >= p.cluster_count())
    throw std::invalid_argument("cluster index out of range");
  if (!(lambda > 0.0))
    throw std::invalid_argument("well-connectedness requires lambda > 0");
  const auto& members = p.members(cluster);
  ClusterConstants constants =
      supplied ? *supplied : compute_cluster_constants(p, cluster, losses);

  ClusterCertificate cert;
  cert.cluster = cluster;
  cert.sigma_c = constants.sigma_c;
  cert.lipschitz = constants.lipschitz;
  cert.eps = constants.eps;
  cert.oracle = constants.oracle;
  cert.boundary = g.weighted_boundary(members);

  // A cluster whose aggregated loss is not strongly convex cannot be
  // certified at all.
  if (!(constants.sigma_c > 0.0)) {
    cert.well_connected = false;
    return cert;
  }

  std::vector<double> beta = demand_bounds(g, p, cluster, lambda, constants);
  // Unbounded demand terms (a near-singular aggregated quadratic) can never
  // satisfy the strict cut condition; report the offending nodes.
  for (size_t idx = 0; idx < beta.size(); ++idx) {
    if (!std::isfinite(beta[idx])) {
      cert.well_connected = false;
      cert.witness.push_back(members[idx]);
    }
  }
  if (!cert.witness.empty()) return cert;

  std::vector<int> local_of;
  EmpiricalGraph sub = induced_subgraph(g, members, local_of);

  std::vector<int> candidates;
  if (hub) {
    if (*hub < 0 || *hub >= g.node_count())
      throw std::invalid_argument("hub node id out of range");
    const int local = local_of[*hub];
    if (local < 0) throw std::invalid_argument("hub is not a member of the cluster");
    candidates.push_back(local);
  } else {
    for (size_t idx = 0; idx < members.size(); ++idx) candidates.push_back(static_cast<int>(idx));
  }

  std::vector<int> first_witness;
  for (int candidate : candidates) {
    std::vector<int> witness_local;
    bool ok;
    if (mode == WellConnectedMode::exhaustive) {
      ok = exhaustive_hub_check(sub, beta, candidate, witness_local);
    } else {
      std::vector<double> demands = beta;
      demands[candidate] = 0.0;
      FlowResult flow = flow_feasible(sub, demands, candidate);
      ok = flow.feasible;
      witness_local = flow.cut_witness;
    }
    if (ok) {
      cert.well_connected = true;
      cert.hub = members[candidate];
      return cert;
    }
    if (first_witness.empty() && !witness_local.empty()) {
      for (int local : witness_local) first_witness.push_back(members[local]);
    }
  }
  cert.well_connected = false;
  cert.witness = std::move(first_witness);
  return cert;
}

std::vector<ClusterReport> verify_constancy_bound(const EmpiricalGraph& g, const Partition& p,
                                                const std::vector<LocalLoss>& losses,
                                                double lambda, const GtvPenalty& penalty,
                                                const NodeField& w_hat) {
  if (!penalty.is_norm())
    throw UnsupportedOperation("the constancy bound applies to norm penalties only");
  if (w_hat.count() != g.node_count()) throw std::invalid_argument("node field size mismatch");

  std::vector<ClusterReport> reports;
  reports.reserve(p.cluster_count());
  for (int c = 0; c < p.cluster_count(); ++c) {
    ClusterCertificate cert = check_well_connected(g, p, c, losses, lambda);
    const auto& members = p.members(c);

    ClusterReport rep;
    rep.cluster = c;
    rep.certified = cert.well_connected;

    double spread = 0.0;
    for (size_t a = 0; a < members.size(); ++a) {
      for (size_t b = a + 1; b < members.size(); ++b) {
        spread = std::max(spread, (w_hat.values.col(members[a]) -
                                   w_hat.values.col(members[b]))
                                      .norm());
      }
    }
    rep.spread = spread;

    double deviation = 0.0;
    for (int i : members)
      deviation = std::max(deviation, (w_hat.values.col(i) - cert.oracle).norm());
    rep.deviation = deviation;

    rep.bound = (cert.sigma_c > 0.0)
                    ? 2.0 * cert.boundary * lambda / cert.sigma_c
                    : std::numeric_limits<double>::infinity();
    rep.bound_holds = rep.certified && deviation <= rep.bound + 1e-9;
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace gtvmin
