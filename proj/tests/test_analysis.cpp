#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gtvmin/analysis.hpp"
#include "gtvmin/datagen.hpp"
#include "gtvmin/io.hpp"
#include "gtvmin/solver.hpp"
#include "oracles.hpp"

using namespace gtvmin;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LocalLoss scalar_quadratic(double a) {
  return LocalLoss::squared({MatrixXd::Constant(1, 1, 1.0), VectorXd::Constant(1, a)});
}

// Two dense clusters with one weak bridge; squared losses from a
// cluster-constant noisy linear model.
struct ClusteredInstance {
  EmpiricalGraph graph;
  Partition partition;
  std::vector<LocalLoss> losses;
  NodeField truth;
};

ClusteredInstance make_clustered(Rng& rng, int size1, int size2, double bridge_weight,
                                 int dim, double noise) {
  const int n = size1 + size2;
  std::vector<std::tuple<int, int, double>> edges;
  auto add_clique = [&](int lo, int hi) {
    for (int i = lo; i <= hi; ++i)
      for (int j = i + 1; j <= hi; ++j) edges.emplace_back(i, j, 1.0);
  };
  add_clique(1, size1);
  add_clique(size1 + 1, n);
  if (bridge_weight > 0.0) edges.emplace_back(size1, size1 + 1, bridge_weight);

  std::vector<int> assignment(n, 0);
  for (int i = size1; i < n; ++i) assignment[i] = 1;

  ClusteredInstance inst{EmpiricalGraph(n, edges), Partition(assignment, 2), {}, NodeField(dim, n)};
  VectorXd w1 = oracles::random_vector(rng, dim, 2.0);
  VectorXd w2 = oracles::random_vector(rng, dim, 2.0);
  for (int i = 0; i < n; ++i) {
    const VectorXd& w = (i < size1) ? w1 : w2;
    inst.truth.values.col(i) = w;
    const int m = dim + 3;
    MatrixXd X = oracles::random_matrix(rng, m, dim);
    VectorXd y(m);
    for (int r = 0; r < m; ++r) y[r] = X.row(r).dot(w) + noise * rng.normal();
    inst.losses.push_back(LocalLoss::squared({std::move(X), std::move(y)}));
  }
  return inst;
}

}  // namespace

TEST_CASE("partition validation") {
  CHECK_THROWS_AS(Partition::from_clusters(3, {{0, 1}, {1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(Partition::from_clusters(3, {{0, 1}}), std::invalid_argument);
  auto p = Partition::from_clusters(3, {{0, 2}, {1}});
  CHECK(p.cluster_count() == 2);
  CHECK(p.cluster_of(2) == 0);
}

TEST_CASE("cluster graph aggregates weights and losses") {
  // Two singleton clusters joined by one edge of weight 0.5.
  auto g = build_graph(2, {{1, 2, 0.5}});
  std::vector<LocalLoss> losses{scalar_quadratic(1.0), scalar_quadratic(3.0)};
  auto cg = build_cluster_graph(g, Partition::from_clusters(2, {{0}, {1}}), losses);
  REQUIRE(cg.graph.edge_count() == 1);
  CHECK(cg.graph.edge(0).weight == doctest::Approx(0.5));

  // One cluster swallowing everything leaves a single bare node.
  auto cg1 = build_cluster_graph(g, Partition::from_clusters(2, {{0, 1}}), losses);
  CHECK(cg1.graph.node_count() == 1);
  CHECK(cg1.graph.edge_count() == 0);
  VectorXd v = VectorXd::Constant(1, 2.0);
  CHECK(cg1.losses[0].evaluate(v) ==
        doctest::Approx(losses[0].evaluate(v) + losses[1].evaluate(v)));

  // Three clusters, parallel inter-cluster edges merged by summing weights.
  auto g3 = build_graph(6, {{1, 2, 1.0},
                            {3, 4, 1.0},
                            {5, 6, 1.0},
                            {1, 3, 0.2},
                            {2, 4, 0.3},
                            {4, 5, 0.7}});
  std::vector<LocalLoss> l6(6, LocalLoss::trivial(1));
  auto cg3 = build_cluster_graph(g3, Partition::from_clusters(6, {{0, 1}, {2, 3}, {4, 5}}), l6);
  REQUIRE(cg3.graph.node_count() == 3);
  REQUIRE(cg3.graph.edge_count() == 2);
  CHECK(cg3.graph.edge(0).weight == doctest::Approx(0.5));  // clusters 1-2
  CHECK(cg3.graph.edge(1).weight == doctest::Approx(0.7));  // clusters 2-3
}

TEST_CASE("identity partition reproduces the original problem") {
  Rng rng(11);
  auto inst = make_clustered(rng, 3, 3, 0.4, 2, 0.01);
  std::vector<std::vector<int>> singletons;
  for (int i = 0; i < inst.graph.node_count(); ++i) singletons.push_back({i});
  auto cg = build_cluster_graph(
      inst.graph, Partition::from_clusters(inst.graph.node_count(), singletons), inst.losses);

  REQUIRE(cg.graph.node_count() == inst.graph.node_count());
  REQUIRE(cg.graph.edge_count() == inst.graph.edge_count());
  for (int e = 0; e < cg.graph.edge_count(); ++e) {
    CHECK(cg.graph.edge(e).head == inst.graph.edge(e).head);
    CHECK(cg.graph.edge(e).tail == inst.graph.edge(e).tail);
    CHECK(cg.graph.edge(e).weight == inst.graph.edge(e).weight);
  }

  SolverConfig config;
  config.lambda = 0.2;
  config.max_iters = 500;
  auto original = solve(inst.graph, inst.losses, config);
  auto clustered = solve(cg.graph, inst.losses, config);
  CHECK((original.w.values - clustered.w.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("aggregate gradient is the sum of member gradients") {
  Rng rng(12);
  auto inst = make_clustered(rng, 4, 3, 0.5, 2, 0.1);
  auto cg = build_cluster_graph(inst.graph, inst.partition, inst.losses);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd v = oracles::random_vector(rng, 2);
    VectorXd expected = VectorXd::Zero(2);
    for (int i : inst.partition.members(0)) expected += inst.losses[i].gradient(v);
    CHECK((cg.losses[0].gradient(v) - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));
  }
}

TEST_CASE("cluster oracle closed forms") {
  // Two scalar quadratics (w-1)^2, (w-3)^2 -> mean 2.
  std::vector<LocalLoss> two{scalar_quadratic(1.0), scalar_quadratic(3.0)};
  AggregateLoss agg({&two[0], &two[1]});
  auto res = cluster_oracle(agg);
  CHECK(res.unique);
  CHECK(res.w[0] == doctest::Approx(2.0));

  // A trivial member contributes nothing.
  std::vector<LocalLoss> mixed{LocalLoss::trivial(1), scalar_quadratic(4.0)};
  AggregateLoss agg2({&mixed[0], &mixed[1]});
  CHECK(cluster_oracle(agg2).w[0] == doctest::Approx(4.0));
}

TEST_CASE("cluster oracle with rank-one members but full-rank sum") {
  Rng rng(13);
  // Each node has one sample in d=2 (rank one), the pool has full rank.
  std::vector<LocalLoss> losses;
  MatrixXd all_X(2, 2);
  VectorXd all_y(2);
  for (int i = 0; i < 2; ++i) {
    MatrixXd X = oracles::random_matrix(rng, 1, 2);
    VectorXd y = oracles::random_vector(rng, 1);
    all_X.row(i) = X.row(0);
    all_y[i] = y[0];
    losses.push_back(LocalLoss::squared({X, y}));
  }
  AggregateLoss agg({&losses[0], &losses[1]});
  auto res = cluster_oracle(agg);
  REQUIRE(res.unique);
  // Normal equations on the pooled system.
  VectorXd expected = (all_X.transpose() * all_X).llt().solve(all_X.transpose() * all_y);
  CHECK((res.w - expected).norm() <= 1e-9);
}

TEST_CASE("singular aggregated quadratic is flagged") {
  Rng rng(14);
  MatrixXd X = oracles::random_matrix(rng, 1, 2);
  std::vector<LocalLoss> losses{LocalLoss::squared({X, VectorXd::Ones(1)}),
                                LocalLoss::trivial(2)};
  AggregateLoss agg({&losses[0], &losses[1]});
  CHECK_FALSE(cluster_oracle(agg).unique);
}

TEST_CASE("well-connectedness of a clean two-node cluster") {
  // Isolated 2-node cluster with a unit internal edge and exact data:
  // every term on the left vanishes and the cut is 1.
  auto g = build_graph(2, {{1, 2, 1.0}});
  LocalDataset d1{MatrixXd::Identity(2, 2), (VectorXd(2) << 1.0, 2.0).finished()};
  LocalDataset d2{MatrixXd::Identity(2, 2), (VectorXd(2) << 1.0, 2.0).finished()};
  std::vector<LocalLoss> losses{LocalLoss::squared(d1), LocalLoss::squared(d2)};
  auto p = Partition::from_clusters(2, {{0, 1}});
  auto cert = check_well_connected(g, p, 0, losses, 0.5);
  CHECK(cert.well_connected);
  CHECK(cert.boundary == 0.0);
  CHECK(cert.hub.has_value());
  for (double eps : cert.eps) CHECK(eps <= 1e-12);
}

TEST_CASE("disconnected cluster is violated with a witness") {
  // Two components inside one claimed cluster: no internal cut.
  auto g = build_graph(2, {});
  std::vector<LocalLoss> losses{scalar_quadratic(1.0), scalar_quadratic(1.0)};
  auto p = Partition::from_clusters(2, {{0, 1}});
  auto cert = check_well_connected(g, p, 0, losses, 1.0);
  CHECK_FALSE(cert.well_connected);
  CHECK_FALSE(cert.witness.empty());
}

TEST_CASE("oversized boundary defeats the cluster") {
  Rng rng(15);
  // Strong boundary, weak internal edge: the Lipschitz term dominates.
  auto g = build_graph(3, {{1, 2, 0.05}, {2, 3, 10.0}});
  std::vector<LocalLoss> losses{scalar_quadratic(1.0), scalar_quadratic(1.0),
                                scalar_quadratic(-5.0)};
  auto p = Partition::from_clusters(3, {{0, 1}, {2}});
  auto flow_cert = check_well_connected(g, p, 0, losses, 0.5);
  auto exhaustive_cert = check_well_connected(g, p, 0, losses, 0.5, std::nullopt,
                                              WellConnectedMode::exhaustive);
  CHECK_FALSE(flow_cert.well_connected);
  CHECK_FALSE(exhaustive_cert.well_connected);
  CHECK_FALSE(exhaustive_cert.witness.empty());
}

TEST_CASE("specified hub is honored") {
  auto g = build_graph(2, {{1, 2, 1.0}});
  std::vector<LocalLoss> losses{scalar_quadratic(0.0), scalar_quadratic(0.0)};
  auto p = Partition::from_clusters(2, {{0, 1}});
  auto cert = check_well_connected(g, p, 0, losses, 1.0, 1);
  CHECK(cert.well_connected);
  CHECK(*cert.hub == 1);
  CHECK_THROWS_AS(check_well_connected(g, p, 0, losses, 1.0, 5), std::invalid_argument);
}

TEST_CASE("flow feasibility basics") {
  auto g = build_graph(2, {{1, 2, 1.0}});
  auto ok = flow_feasible(g, {0.5, 0.0}, 1);
  CHECK(ok.feasible);
  REQUIRE(ok.flow.size() == 1);
  CHECK(ok.flow[0] == doctest::Approx(0.5));

  auto bad = flow_feasible(g, {1.5, 0.0}, 1);
  CHECK_FALSE(bad.feasible);
  REQUIRE(bad.cut_witness.size() == 1);
  CHECK(bad.cut_witness[0] == 0);

  // Exactly saturating demand fails the strict condition.
  auto tight = flow_feasible(g, {1.0, 0.0}, 1);
  CHECK_FALSE(tight.feasible);
}

TEST_CASE("flow feasibility agrees with exhaustive cut enumeration") {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(4));
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 1; i <= n; ++i) {
      for (int j = i + 1; j <= n; ++j) {
        if (rng.bernoulli(0.7)) edges.emplace_back(i, j, 0.2 + rng.uniform());
      }
    }
    EmpiricalGraph g(n, edges);
    const int hub = static_cast<int>(rng.below(n));
    std::vector<double> demands(n, 0.0);
    for (int i = 0; i < n; ++i) {
      if (i != hub) demands[i] = rng.uniform() * 1.2;
    }

    const bool flow_verdict = flow_feasible(g, demands, hub).feasible;

    bool exhaustive_verdict = true;
    std::vector<int> others;
    for (int i = 0; i < n; ++i)
      if (i != hub) others.push_back(i);
    for (unsigned mask = 1; mask < (1u << others.size()); ++mask) {
      std::vector<int> a;
      double demand = 0.0;
      for (size_t b = 0; b < others.size(); ++b) {
        if (mask & (1u << b)) {
          a.push_back(others[b]);
          demand += demands[others[b]];
        }
      }
      std::vector<int> rest;
      std::vector<char> in_a(n, 0);
      for (int i : a) in_a[i] = 1;
      for (int i = 0; i < n; ++i)
        if (!in_a[i]) rest.push_back(i);
      if (demand >= g.cut_weight(a, rest) - 1e-12) exhaustive_verdict = false;
    }
    CHECK(flow_verdict == exhaustive_verdict);
  }
}

TEST_CASE("exhaustive and max-flow certification agree on clusters up to 12 nodes") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int size1 = 2 + static_cast<int>(rng.below(11));
    const int size2 = 2 + static_cast<int>(rng.below(4));
    auto inst = make_clustered(rng, size1, size2, 0.02 + 0.3 * rng.uniform(), 2,
                               0.01 + 0.2 * rng.uniform());
    // Thin the first clique so violations actually occur.
    const double lambda = 0.01 + rng.uniform();
    auto flow_cert = check_well_connected(inst.graph, inst.partition, 0, inst.losses, lambda);
    auto exhaustive_cert = check_well_connected(inst.graph, inst.partition, 0, inst.losses,
                                                lambda, std::nullopt,
                                                WellConnectedMode::exhaustive);
    CHECK(flow_cert.well_connected == exhaustive_cert.well_connected);
  }
}

TEST_CASE("zero-boundary certified cluster matches its oracle exactly") {
  Rng rng(18);
  auto inst = make_clustered(rng, 4, 4, 0.0, 2, 0.05);
  SolverConfig config;
  config.lambda = 0.3;
  config.max_iters = 200000;
  config.gap_tol = 1e-13;
  auto result = solve(inst.graph, inst.losses, config);
  auto reports = verify_constancy_bound(inst.graph, inst.partition, inst.losses, config.lambda,
                                      config.penalty, result.w);
  REQUIRE(reports.size() == 2);
  for (const auto& rep : reports) {
    CHECK(rep.certified);
    CHECK(rep.bound == doctest::Approx(0.0));
    CHECK(rep.spread <= 1e-7);
    CHECK(rep.deviation <= 1e-6);
    CHECK(rep.bound_holds);
  }
}

TEST_CASE("weak bridge stays within the deviation bound") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = make_clustered(rng, 3 + static_cast<int>(rng.below(5)),
                               3 + static_cast<int>(rng.below(5)), 0.01, 1 + trial % 3, 1e-3);
    const double lambda = 0.05;
    SolverConfig config;
    config.lambda = lambda;
    config.max_iters = 200000;
    config.gap_tol = 1e-13;
    auto result = solve(inst.graph, inst.losses, config);
    auto reports = verify_constancy_bound(inst.graph, inst.partition, inst.losses, lambda,
                                        config.penalty, result.w);
    for (const auto& rep : reports) {
      if (!rep.certified) continue;
      CHECK(rep.spread <= 1e-6);
      CHECK(rep.deviation <= rep.bound + 1e-6);
    }
  }
}

TEST_CASE("uncertified clusters are reported as such") {
  auto g = build_graph(2, {});
  std::vector<LocalLoss> losses{scalar_quadratic(1.0), scalar_quadratic(-1.0)};
  auto p = Partition::from_clusters(2, {{0, 1}});
  auto reports = verify_constancy_bound(g, p, losses, 1.0, GtvPenalty::norm2(), NodeField(1, 2));
  REQUIRE(reports.size() == 1);
  CHECK_FALSE(reports[0].certified);
  CHECK_FALSE(reports[0].bound_holds);
}

TEST_CASE("certificate report json") {
  auto g = build_graph(2, {{1, 2, 1.0}});
  std::vector<LocalLoss> losses{scalar_quadratic(0.0), scalar_quadratic(0.0)};
  auto p = Partition::from_clusters(2, {{0, 1}});
  auto cert = check_well_connected(g, p, 0, losses, 1.0);
  const std::string json = certificates_to_json({cert});
  CHECK(json.find("\"well_connected\": true") != std::string::npos);
  CHECK(json.find("\"cluster\": 1") != std::string::npos);
}

TEST_CASE("degenerate certification inputs") {
  Rng rng(27);
  auto inst = make_clustered(rng, 3, 3, 0.1, 2, 0.5);
  // The subset condition divides the clustering error by lambda.
  CHECK_THROWS_AS(check_well_connected(inst.graph, inst.partition, 0, inst.losses, 0.0),
                  std::invalid_argument);

  // A cluster of trivial losses has no strong convexity and is never
  // certified, in either mode.
  auto g = build_graph(3, {{1, 2, 1.0}, {2, 3, 0.3}});
  std::vector<LocalLoss> trivial(3, LocalLoss::trivial(1));
  auto p = Partition::from_clusters(3, {{0, 1}, {2}});
  for (auto mode : {WellConnectedMode::max_flow, WellConnectedMode::exhaustive}) {
    auto cert = check_well_connected(g, p, 0, trivial, 0.5, std::nullopt, mode);
    CHECK_FALSE(cert.well_connected);
    CHECK(cert.sigma_c == 0.0);
  }
}
