#pragma once

#include <optional>
#include <vector>

#include "gtvmin/graph.hpp"
#include "gtvmin/losses.hpp"
#include "gtvmin/penalties.hpp"

// Preconditioned primal-dual iterations over the empirical graph: node-wise
// primal updates (loss proximity operators, step 1/|N(i)|) alternating with
// edge-wise dual updates (penalty conjugate proximity operators, step 1/2),
// plus objective/GTV evaluation, primal-dual gap and KKT residuals.
//
// Within one iteration all node updates are mutually independent, as are all
// edge updates; a barrier separates the two phases (the dual phase reads
// both the old and the new node fields). This implementation runs them
// serially in storage order, so traces are bitwise reproducible.

namespace gtvmin {

struct SolverConfig {
  double lambda = 1.0;  // lambda = 0 runs decoupled local training
  GtvPenalty penalty = GtvPenalty::norm2();
  int max_iters = 1000;
  std::optional<double> gap_tol;  // checked every trace_every iterations
  int trace_every = 10;
};

struct TraceRecord {
  int iter;
  double objective;
  double gtv;
  std::optional<double> gap;  // absent when any conjugate is unsupported
};

enum class StopReason { max_iters, gap_tol, non_finite };

struct SolverState {
  NodeField w;
  EdgeField u;
  std::vector<double> tau;    // 1/|N(i)|, 1 for isolated nodes
  std::vector<double> sigma;  // 1/2
  int k = 0;
  std::vector<TraceRecord> trace;
};

struct SolveResult {
  NodeField w;
  EdgeField u;
  int iterations = 0;
  StopReason stop_reason = StopReason::max_iters;
  std::vector<TraceRecord> trace;
};

struct KktResiduals {
  double conservation;     // max_i || (D^T u)^(i) + grad l_i(w^(i)) ||
  double feasibility;      // max_e ( ||u^(e)||_* - lambda A_e )_+
  double complementarity;  // max over strictly interior edges of ||w^(e+) - w^(e-)||
};

SolverState init_state(const EmpiricalGraph& g, int dim);

// One primal-dual iteration; advances state.k by one. With lambda = 0 the
// dual phase is bypassed and the iteration is a pure prox step per node.
// Returns false if an iterate became non-finite.
bool run_iteration(SolverState& state, const EmpiricalGraph& g,
                   const std::vector<LocalLoss>& losses, const SolverConfig& config);

SolveResult solve(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                  const SolverConfig& config);

// Total GTV sum_e A_e phi(w^(e+) - w^(e-)) and per-edge contributions,
// both unscaled by lambda (subset sums are derivable from per_edge).
struct GtvValue {
  double total;
  Eigen::VectorXd per_edge;
};
GtvValue gtv_eval(const EmpiricalGraph& g, const NodeField& w, const GtvPenalty& penalty);

double primal_objective(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                        const GtvPenalty& penalty, double lambda, const NodeField& w);

// Primal minus dual objective. nullopt when a conjugate is unsupported;
// +inf when the dual point is infeasible (norm-kind conjugate indicator).
std::optional<double> pd_gap(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                             const GtvPenalty& penalty, double lambda, const NodeField& w,
                             const EdgeField& u);

// Requires a norm-kind penalty and differentiable losses.
KktResiduals kkt_residuals(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                           const GtvPenalty& penalty, double lambda, const NodeField& w,
                           const EdgeField& u);

}  // namespace gtvmin
