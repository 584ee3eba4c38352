#include "gtvmin/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gtvmin {

namespace {

constexpr double kComplementaritySlack = 1e-9;

void check_inputs(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                  const SolverConfig& config) {
  if (static_cast<int>(losses.size()) != g.node_count())
    throw std::invalid_argument("one loss per node required");
  if (config.lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (config.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (config.trace_every < 1) throw std::invalid_argument("trace_every must be at least 1");
  for (size_t i = 1; i < losses.size(); ++i) {
    if (losses[i].dim() != losses[0].dim())
      throw std::invalid_argument("all losses must share the parameter dimension");
  }
}

}  // namespace

SolverState init_state(const EmpiricalGraph& g, int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  SolverState state;
  state.w = NodeField(dim, g.node_count());
  state.u = EdgeField(dim, g.edge_count());
  state.tau.resize(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) {
    const int deg = g.degree(i);
    state.tau[i] = (deg > 0) ? 1.0 / deg : 1.0;
  }
  state.sigma.assign(g.edge_count(), 0.5);
  state.k = 0;
  return state;
}

bool run_iteration(SolverState& state, const EmpiricalGraph& g,
                   const std::vector<LocalLoss>& losses, const SolverConfig& config) {
  const int n = g.node_count();

  NodeField w_prev = state.w;

  // Primal phase: w~ = w_k - tau_i (D^T u_k)_i, then the loss prox.
  NodeField div = g.apply_incidence_transpose(state.u);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = state.w.values.col(i) - state.tau[i] * div.values.col(i);
    if (!v.allFinite()) return false;
    state.w.values.col(i) = losses[i].primal_update(v, state.tau[i]);
  }
  if (!state.w.all_finite()) return false;

  // Dual phase: over-relaxed edge difference, then the conjugate prox.
  // Bypassed entirely for lambda = 0 (decoupled local training).
  if (config.lambda > 0.0 && g.edge_count() > 0) {
    for (int e = 0; e < g.edge_count(); ++e) {
      const Edge& edge = g.edge(e);
      Eigen::VectorXd diff_new =
          state.w.values.col(edge.head) - state.w.values.col(edge.tail);
      Eigen::VectorXd diff_old =
          w_prev.values.col(edge.head) - w_prev.values.col(edge.tail);
      Eigen::VectorXd v =
          state.u.values.col(e) + state.sigma[e] * (2.0 * diff_new - diff_old);
      state.u.values.col(e) =
          config.penalty.dual_update(v, state.sigma[e], config.lambda * edge.weight);
    }
    if (!state.u.all_finite()) return false;
  }

  ++state.k;
  return true;
}

GtvValue gtv_eval(const EmpiricalGraph& g, const NodeField& w, const GtvPenalty& penalty) {
  if (w.count() != g.node_count()) throw std::invalid_argument("node field size mismatch");
  GtvValue out;
  out.per_edge = Eigen::VectorXd::Zero(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    out.per_edge[e] =
        edge.weight * penalty.evaluate(w.values.col(edge.head) - w.values.col(edge.tail));
  }
  out.total = out.per_edge.sum();
  return out;
}

double primal_objective(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                        const GtvPenalty& penalty, double lambda, const NodeField& w) {
  double total = 0.0;
  for (int i = 0; i < g.node_count(); ++i) total += losses[i].evaluate(w.values.col(i));
  if (lambda > 0.0) total += lambda * gtv_eval(g, w, penalty).total;
  return total;
}

std::optional<double> pd_gap(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                             const GtvPenalty& penalty, double lambda, const NodeField& w,
                             const EdgeField& u) {
  for (const auto& loss : losses) {
    if (!loss.conjugate_supported()) return std::nullopt;
  }
  const double inf = std::numeric_limits<double>::infinity();

  // Dual objective: -sum_i f_i*(-d_i) - sum_e lamA_e phi*(u_e / lamA_e)
  NodeField demands = g.apply_incidence_transpose(u);
  double dual = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    auto c = losses[i].conjugate(-demands.values.col(i));
    if (!c) return std::nullopt;
    if (std::isinf(*c)) return inf;
    dual -= *c;
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const double lamA = lambda * g.weight(e);
    if (lamA == 0.0) {
      // g == 0 has conjugate indicator of {0}: only the zero flow is feasible.
      if (u.values.col(e).norm() > 0.0) return inf;
      continue;
    }
    auto dom = penalty.conjugate_domain_ok(u.values.col(e), lamA);
    if (!dom.ok) return inf;
    if (dom.value) dual -= *dom.value;
  }

  return primal_objective(g, losses, penalty, lambda, w) - dual;
}

KktResiduals kkt_residuals(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                           const GtvPenalty& penalty, double lambda, const NodeField& w,
                           const EdgeField& u) {
  if (!penalty.is_norm())
    throw UnsupportedOperation("KKT residuals require a norm-kind penalty");
  for (const auto& loss : losses) {
    if (!loss.differentiable())
      throw UnsupportedOperation("KKT residuals require differentiable losses");
  }
  KktResiduals r{0.0, 0.0, 0.0};
  NodeField div = g.apply_incidence_transpose(u);
  for (int i = 0; i < g.node_count(); ++i) {
    const double res =
        (div.values.col(i) + losses[i].gradient(w.values.col(i))).norm();
    r.conservation = std::max(r.conservation, res);
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    const double lamA = lambda * edge.weight;
    const double dn = penalty.dual_norm(u.values.col(e));
    r.feasibility = std::max(r.feasibility, std::max(0.0, dn - lamA));
    if (dn < lamA - kComplementaritySlack) {
      const double spread = (w.values.col(edge.head) - w.values.col(edge.tail)).norm();
      r.complementarity = std::max(r.complementarity, spread);
    }
  }
  return r;
}

SolveResult solve(const EmpiricalGraph& g, const std::vector<LocalLoss>& losses,
                  const SolverConfig& config) {
  check_inputs(g, losses, config);
  const int dim = losses.empty() ? 1 : losses[0].dim();
  SolverState state = init_state(g, dim);

  SolveResult result;
  result.stop_reason = StopReason::max_iters;

  auto record = [&](int k) -> std::optional<double> {
    TraceRecord rec;
    rec.iter = k;
    const GtvValue gtv = gtv_eval(g, state.w, config.penalty);
    rec.gtv = gtv.total;
    double obj = 0.0;
    for (int i = 0; i < g.node_count(); ++i) obj += losses[i].evaluate(state.w.values.col(i));
    rec.objective = obj + config.lambda * gtv.total;
    rec.gap = pd_gap(g, losses, config.penalty, config.lambda, state.w, state.u);
    state.trace.push_back(rec);
    return rec.gap;
  };

  for (int k = 1; k <= config.max_iters; ++k) {
    if (!run_iteration(state, g, losses, config)) {
      result.stop_reason = StopReason::non_finite;
      break;
    }
    if (k % config.trace_every == 0 || k == config.max_iters) {
      auto gap = record(k);
      if (config.gap_tol && gap && *gap <= *config.gap_tol) {
        result.stop_reason = StopReason::gap_tol;
        break;
      }
    }
  }

  result.w = std::move(state.w);
  result.u = std::move(state.u);
  result.iterations = state.k;
  result.trace = std::move(state.trace);
  return result;
}

}  // namespace gtvmin
