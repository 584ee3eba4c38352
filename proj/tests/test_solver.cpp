#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gtvmin/datagen.hpp"
#include "gtvmin/io.hpp"
#include "gtvmin/solver.hpp"
#include "oracles.hpp"

using namespace gtvmin;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// loss(w) = (w - a)^2 as a one-sample dataset with unit feature.
LocalLoss scalar_quadratic(double a) {
  return LocalLoss::squared({MatrixXd::Constant(1, 1, 1.0), VectorXd::Constant(1, a)});
}

struct TwoNodeInstance {
  EmpiricalGraph graph = build_graph(2, {{1, 2, 1.0}});
  std::vector<LocalLoss> losses;
  double a1, a2;

  TwoNodeInstance(double a, double b) : a1(a), a2(b) {
    losses = {scalar_quadratic(a), scalar_quadratic(b)};
  }
};

// Random small instance with quadratic losses; connected by construction.
struct SmallInstance {
  EmpiricalGraph graph;
  std::vector<LocalLoss> losses;
};

SmallInstance random_small_instance(Rng& rng, int max_nodes, int dim) {
  const int n = 2 + static_cast<int>(rng.below(max_nodes - 1));
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 2; i <= n; ++i) edges.emplace_back(1 + static_cast<int>(rng.below(i - 1)), i, 0.3 + rng.uniform());
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (rng.bernoulli(0.25)) {
        bool exists = false;
        for (auto& [a, b, w] : edges) {
          if ((a == i && b == j) || (a == j && b == i)) exists = true;
        }
        if (!exists) edges.emplace_back(i, j, 0.3 + rng.uniform());
      }
    }
  }
  SmallInstance inst{build_graph(n, edges), {}};
  for (int i = 0; i < n; ++i) {
    const int m = dim + 2;
    inst.losses.push_back(LocalLoss::squared(
        {oracles::random_matrix(rng, m, dim), oracles::random_vector(rng, m, 2.0)}));
  }
  return inst;
}

}  // namespace

TEST_CASE("init_state step sizes") {
  auto chain = build_graph(3, {{1, 2, 1.0}, {2, 3, 1.0}});
  auto state = init_state(chain, 2);
  CHECK(state.tau == std::vector<double>{1.0, 0.5, 1.0});
  CHECK(state.sigma == std::vector<double>{0.5, 0.5});
  CHECK(state.w.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.u.values.cwiseAbs().maxCoeff() == 0.0);

  std::vector<std::tuple<int, int, double>> star_edges;
  for (int leaf = 2; leaf <= 50; ++leaf) star_edges.emplace_back(1, leaf, 1.0);
  auto star = build_graph(50, star_edges);
  CHECK(init_state(star, 1).tau[0] == doctest::Approx(1.0 / 49.0));

  auto singleton = build_graph(1, {});
  auto s = init_state(singleton, 1);
  CHECK(s.tau[0] == 1.0);
  CHECK(s.u.count() == 0);
}

TEST_CASE("single node fixed point") {
  auto g = build_graph(1, {});
  std::vector<LocalLoss> losses{scalar_quadratic(3.5)};
  SolverConfig config;
  config.lambda = 1.0;
  config.max_iters = 200;
  auto result = solve(g, losses, config);
  CHECK(result.w.values(0, 0) == doctest::Approx(3.5));
}

TEST_CASE("lambda zero decouples into local training") {
  auto g = build_graph(3, {{1, 2, 1.0}, {2, 3, 1.0}});
  std::vector<LocalLoss> losses{scalar_quadratic(1.0), scalar_quadratic(-2.0),
                                scalar_quadratic(0.5)};
  SolverConfig config;
  config.lambda = 0.0;
  config.max_iters = 2000;
  config.gap_tol = 1e-14;
  auto result = solve(g, losses, config);
  CHECK(result.stop_reason == StopReason::gap_tol);
  CHECK(result.w.values(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(result.w.values(0, 1) == doctest::Approx(-2.0).epsilon(1e-7));
  CHECK(result.w.values(0, 2) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(result.u.values.cwiseAbs().maxCoeff() == 0.0);
  // Stopping by gap implies the final recorded gap meets the tolerance.
  REQUIRE(!result.trace.empty());
  REQUIRE(result.trace.back().gap.has_value());
  CHECK(*result.trace.back().gap <= *config.gap_tol);
}

TEST_CASE("two-node quadratic instance has a closed form") {
  // min (w1-a1)^2 + (w2-a2)^2 + lambda*phi(w1-w2); with the quadratic
  // penalty the solution is mean +- (a1-a2)/(2(1+lambda)).
  TwoNodeInstance inst(3.0, 1.0);
  SolverConfig config;
  config.penalty = GtvPenalty::quadratic();
  config.lambda = 2.0;
  config.max_iters = 5000;
  config.gap_tol = 1e-12;
  auto result = solve(inst.graph, inst.losses, config);
  const double mean = 2.0;
  const double half_gap = (inst.a1 - inst.a2) / (2.0 * (1.0 + config.lambda));
  CHECK(result.stop_reason == StopReason::gap_tol);
  CHECK(result.w.values(0, 0) == doctest::Approx(mean + half_gap).epsilon(1e-4));
  CHECK(result.w.values(0, 1) == doctest::Approx(mean - half_gap).epsilon(1e-4));

  // Large lambda pulls both nodes to the pooled mean.
  config.lambda = 1e4;
  config.max_iters = 20000;
  auto pooled = solve(inst.graph, inst.losses, config);
  CHECK(pooled.w.values(0, 0) == doctest::Approx(mean).epsilon(1e-3));
  CHECK(pooled.w.values(0, 1) == doctest::Approx(mean).epsilon(1e-3));
}

TEST_CASE("two-node norm2 instance: fuse below threshold, saturate above") {
  TwoNodeInstance inst(3.0, 1.0);
  SolverConfig config;
  config.penalty = GtvPenalty::norm2();
  config.max_iters = 20000;
  config.gap_tol = 1e-13;

  // lambda above |a1-a2| forces consensus at the mean.
  config.lambda = 3.0;
  auto fused = solve(inst.graph, inst.losses, config);
  CHECK(fused.w.values(0, 0) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(fused.w.values(0, 1) == doctest::Approx(2.0).epsilon(1e-5));

  // Below the threshold the nodes move toward each other by lambda/2.
  config.lambda = 0.5;
  auto split = solve(inst.graph, inst.losses, config);
  CHECK(split.w.values(0, 0) == doctest::Approx(3.0 - 0.25).epsilon(1e-5));
  CHECK(split.w.values(0, 1) == doctest::Approx(1.0 + 0.25).epsilon(1e-5));
}

TEST_CASE("solve validates its configuration") {
  TwoNodeInstance inst(1.0, 2.0);
  SolverConfig config;
  config.max_iters = 0;
  CHECK_THROWS_AS(solve(inst.graph, inst.losses, config), std::invalid_argument);
  config.max_iters = 10;
  config.lambda = -1.0;
  CHECK_THROWS_AS(solve(inst.graph, inst.losses, config), std::invalid_argument);
  config.lambda = 1.0;
  std::vector<LocalLoss> short_losses{scalar_quadratic(1.0)};
  CHECK_THROWS_AS(solve(inst.graph, short_losses, config), std::invalid_argument);
}

TEST_CASE("trivial losses keep the zero initialization") {
  auto g = build_graph(4, {{1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
  std::vector<LocalLoss> losses(4, LocalLoss::trivial(2));
  SolverConfig config;
  config.lambda = 2.5;
  config.max_iters = 50;
  auto result = solve(g, losses, config);
  CHECK(result.w.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(result.u.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gtv_eval examples") {
  auto g = build_graph(3, {{1, 2, 1.0}, {2, 3, 1.0}});
  NodeField w(1, 3);
  w.values << 1.0, 3.0, 0.0;
  auto norm2 = gtv_eval(g, w, GtvPenalty::norm2());
  CHECK(norm2.total == doctest::Approx(5.0));
  CHECK(norm2.per_edge[0] == doctest::Approx(2.0));
  CHECK(norm2.per_edge[1] == doctest::Approx(3.0));

  auto quad = gtv_eval(g, w, GtvPenalty::quadratic());
  CHECK(quad.total == doctest::Approx(6.5));

  NodeField constant(1, 3);
  constant.values.setConstant(2.0);
  CHECK(gtv_eval(g, constant, GtvPenalty::norm2()).total == 0.0);
}

TEST_CASE("pd_gap examples") {
  // Trivial losses at w = 0, u = 0: both objectives vanish.
  auto g = build_graph(2, {{1, 2, 1.0}});
  std::vector<LocalLoss> trivial(2, LocalLoss::trivial(1));
  auto gap0 = pd_gap(g, trivial, GtvPenalty::norm2(), 1.0, NodeField(1, 2), EdgeField(1, 1));
  REQUIRE(gap0.has_value());
  CHECK(*gap0 == 0.0);

  // Dual-infeasible flow gives an infinite gap.
  TwoNodeInstance inst(3.0, 1.0);
  EdgeField u(1, 1);
  u.values(0, 0) = 5.0;
  auto inf_gap = pd_gap(inst.graph, inst.losses, GtvPenalty::norm2(), 1.0, NodeField(1, 2), u);
  REQUIRE(inf_gap.has_value());
  CHECK(std::isinf(*inf_gap));

  // At a converged point the gap is tiny.
  SolverConfig config;
  config.penalty = GtvPenalty::quadratic();
  config.lambda = 2.0;
  config.max_iters = 100000;
  config.gap_tol = 1e-10;
  auto result = solve(inst.graph, inst.losses, config);
  auto gap = pd_gap(inst.graph, inst.losses, config.penalty, config.lambda, result.w, result.u);
  REQUIRE(gap.has_value());
  CHECK(*gap <= 1e-10);
  CHECK(*gap >= -1e-12);
}

TEST_CASE("pd_gap unavailable when a conjugate is unsupported") {
  Rng rng(31);
  auto g = build_graph(2, {{1, 2, 1.0}});
  // One-sample dataset in d=2 has a singular quadratic part.
  std::vector<LocalLoss> losses{
      LocalLoss::squared({oracles::random_matrix(rng, 1, 2), oracles::random_vector(rng, 1)}),
      LocalLoss::trivial(2)};
  CHECK_FALSE(pd_gap(g, losses, GtvPenalty::norm2(), 1.0, NodeField(2, 2), EdgeField(2, 1))
                  .has_value());
}

TEST_CASE("kkt residuals at the closed-form optimum") {
  // lambda=0.5 < a1-a2: w = (2.75, 1.25), u = -2(w1-a1) = 0.5 saturates.
  TwoNodeInstance inst(3.0, 1.0);
  NodeField w(1, 2);
  w.values << 2.75, 1.25;
  EdgeField u(1, 1);
  u.values(0, 0) = 0.5;
  auto r = kkt_residuals(inst.graph, inst.losses, GtvPenalty::norm2(), 0.5, w, u);
  CHECK(r.conservation <= 1e-12);
  CHECK(r.feasibility <= 1e-12);
  CHECK(r.complementarity <= 1e-12);

  // Zero everything with trivial losses: all residuals vanish.
  std::vector<LocalLoss> trivial(2, LocalLoss::trivial(1));
  auto rz = kkt_residuals(inst.graph, trivial, GtvPenalty::norm2(), 1.0, NodeField(1, 2),
                          EdgeField(1, 1));
  CHECK(rz.conservation == 0.0);
  CHECK(rz.feasibility == 0.0);
  CHECK(rz.complementarity == 0.0);
}

TEST_CASE("kkt residuals on random points are finite and nonnegative") {
  Rng rng(77);
  auto inst = random_small_instance(rng, 6, 2);
  NodeField w(2, inst.graph.node_count());
  w.values = oracles::random_matrix(rng, 2, inst.graph.node_count());
  EdgeField u(2, inst.graph.edge_count());
  u.values = oracles::random_matrix(rng, 2, inst.graph.edge_count());
  auto r = kkt_residuals(inst.graph, inst.losses, GtvPenalty::norm2(), 0.7, w, u);
  CHECK(std::isfinite(r.conservation));
  CHECK(r.conservation >= 0.0);
  CHECK(std::isfinite(r.feasibility));
  CHECK(std::isfinite(r.complementarity));
}

TEST_CASE("kkt residuals reject unsupported inputs") {
  TwoNodeInstance inst(1.0, 2.0);
  CHECK_THROWS_AS(kkt_residuals(inst.graph, inst.losses, GtvPenalty::quadratic(), 1.0,
                                NodeField(1, 2), EdgeField(1, 1)),
                  UnsupportedOperation);
}

TEST_CASE("fixed point of the iteration satisfies the KKT conditions") {
  Rng rng(88);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = random_small_instance(rng, 5, 1);
    SolverConfig config;
    config.lambda = 0.4;
    config.max_iters = 300000;
    config.gap_tol = 1e-13;
    auto result = solve(inst.graph, inst.losses, config);

    SolverState state = init_state(inst.graph, 1);
    state.w = result.w;
    state.u = result.u;
    NodeField w_before = state.w;
    EdgeField u_before = state.u;
    REQUIRE(run_iteration(state, inst.graph, inst.losses, config));
    const double move = (state.w.values - w_before.values).cwiseAbs().maxCoeff() +
                        (state.u.values - u_before.values).cwiseAbs().maxCoeff();
    if (move <= 1e-12) {
      auto r = kkt_residuals(inst.graph, inst.losses, config.penalty, config.lambda, state.w,
                             state.u);
      CHECK(r.conservation <= 1e-8);
      CHECK(r.feasibility <= 1e-8);
      CHECK(r.complementarity <= 1e-8);
    }
  }
}

TEST_CASE("finite gap upper-bounds suboptimality against the smoothed optimum") {
  Rng rng(5150);
  for (int trial = 0; trial < 8; ++trial) {
    auto inst = random_small_instance(rng, 5, 2);
    const double lambda = 0.2 + rng.uniform();
    SolverConfig config;
    config.lambda = lambda;
    config.max_iters = 400;  // deliberately unconverged
    config.trace_every = 400;
    auto result = solve(inst.graph, inst.losses, config);
    auto gap = pd_gap(inst.graph, inst.losses, config.penalty, lambda, result.w, result.u);
    REQUIRE(gap.has_value());
    if (std::isinf(*gap)) continue;

    std::vector<oracles::QuadraticNode> nodes;
    for (int i = 0; i < inst.graph.node_count(); ++i)
      nodes.push_back(oracles::quadratic_from_loss(inst.losses[i], VectorXd::Zero(2)));
    auto opt = oracles::smoothed_gtv_optimum(inst.graph, nodes, lambda);
    const double primal =
        primal_objective(inst.graph, inst.losses, config.penalty, lambda, result.w);
    // optimum lies in [opt.value, opt.value + opt.bias_bound]
    CHECK(primal - opt.value <= *gap + 1e-8);
    CHECK(*gap >= -1e-12);
  }
}

TEST_CASE("objective does not increase end to end") {
  Rng rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = random_small_instance(rng, 6, 2);
    SolverConfig config;
    config.lambda = 0.5;
    config.max_iters = 500;
    const double at_init = primal_objective(inst.graph, inst.losses, config.penalty,
                                            config.lambda, NodeField(2, inst.graph.node_count()));
    auto result = solve(inst.graph, inst.losses, config);
    REQUIRE(!result.trace.empty());
    CHECK(result.trace.back().objective <= at_init + 1e-9);
  }
}

TEST_CASE("identical runs produce identical traces") {
  Rng rng(62);
  auto inst = random_small_instance(rng, 6, 2);
  SolverConfig config;
  config.lambda = 0.3;
  config.max_iters = 200;
  config.trace_every = 10;
  auto a = solve(inst.graph, inst.losses, config);
  auto b = solve(inst.graph, inst.losses, config);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].objective == b.trace[k].objective);
    CHECK(a.trace[k].gtv == b.trace[k].gtv);
  }
  CHECK((a.w.values - b.w.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.u.values - b.u.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("large lambda forces consensus on connected graphs") {
  Rng rng(63);
  auto inst = random_small_instance(rng, 6, 2);
  SolverConfig config;
  config.lambda = 1e6;
  config.max_iters = 30000;
  config.gap_tol = 1e-12;
  auto result = solve(inst.graph, inst.losses, config);
  double spread = 0.0;
  for (int i = 0; i < inst.graph.node_count(); ++i) {
    for (int j = i + 1; j < inst.graph.node_count(); ++j) {
      spread = std::max(spread, (result.w.values.col(i) - result.w.values.col(j)).norm());
    }
  }
  CHECK(spread <= 1e-4);
}

TEST_CASE("non-finite iterates abort with the right stop reason") {
  LocalDataset bomb{MatrixXd::Constant(1, 1, 1e200), VectorXd::Constant(1, 1e200)};
  auto g = build_graph(2, {{1, 2, 1.0}});
  std::vector<LocalLoss> losses{LocalLoss::squared(bomb), scalar_quadratic(0.0)};
  SolverConfig config;
  config.lambda = 1.0;
  config.max_iters = 50;
  auto result = solve(g, losses, config);
  CHECK(result.stop_reason == StopReason::non_finite);
}

TEST_CASE("trace csv layout") {
  TwoNodeInstance inst(2.0, -1.0);
  SolverConfig config;
  config.penalty = GtvPenalty::norm2();
  config.lambda = 0.7;
  config.max_iters = 25;
  config.trace_every = 10;
  auto result = solve(inst.graph, inst.losses, config);
  auto csv = csv_to_string(trace_to_csv(result.trace));
  CHECK(csv.rfind("iter,objective,gtv,gap\n", 0) == 0);
  // 25 iterations with stride 10 trace at 10, 20 and the final iteration.
  CHECK(result.trace.size() == 3);
  CHECK(result.trace.back().iter == 25);

  auto parsed = csv_from_string(csv);
  CHECK(parsed.rows.size() == result.trace.size());
}
