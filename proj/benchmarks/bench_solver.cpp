#include <benchmark/benchmark.h>

#include "gtvmin/datagen.hpp"
#include "gtvmin/solver.hpp"

using namespace gtvmin;

namespace {

struct Instance {
  EmpiricalGraph graph;
  std::vector<LocalLoss> losses;
};

Instance sbm_instance(int cluster_size, int d, int m) {
  TopologySpec topo;
  topo.kind = TopologyKind::sbm;
  topo.cluster_sizes = {cluster_size, cluster_size};
  topo.p_in = 0.5;
  topo.p_out = 0.01;
  auto gen = gen_graph(topo, 1);
  LabelModelSpec labels;
  labels.dim = d;
  labels.sigma = 1e-3;
  labels.samples_per_node = m;
  labels.scheme = GroundTruthScheme::cluster_bernoulli;
  auto data = gen_labels(gen.partition, labels, 2);
  return {std::move(gen.graph), squared_losses(data.datasets)};
}

}  // namespace

static void BM_IncidenceApply(benchmark::State& state) {
  auto inst = sbm_instance(static_cast<int>(state.range(0)), 1, 2);
  NodeField w(100, inst.graph.node_count());
  w.values.setRandom();
  for (auto _ : state) {
    benchmark::DoNotOptimize(inst.graph.apply_incidence(w));
  }
  state.SetComplexityN(inst.graph.edge_count());
}
BENCHMARK(BM_IncidenceApply)->Arg(25)->Arg(50)->Arg(100)->Complexity(benchmark::oN);

static void BM_IncidenceAdjoint(benchmark::State& state) {
  auto inst = sbm_instance(static_cast<int>(state.range(0)), 1, 2);
  EdgeField u(100, inst.graph.edge_count());
  u.values.setRandom();
  for (auto _ : state) {
    benchmark::DoNotOptimize(inst.graph.apply_incidence_transpose(u));
  }
  state.SetComplexityN(inst.graph.edge_count());
}
BENCHMARK(BM_IncidenceAdjoint)->Arg(25)->Arg(50)->Arg(100)->Complexity(benchmark::oN);

static void BM_SolverIteration(benchmark::State& state) {
  auto inst = sbm_instance(static_cast<int>(state.range(0)), 100, 10);
  SolverConfig config;
  config.lambda = 0.01;
  config.max_iters = 1;
  SolverState solver_state = init_state(inst.graph, 100);
  // Warm the per-node factorization caches.
  run_iteration(solver_state, inst.graph, inst.losses, config);
  for (auto _ : state) {
    run_iteration(solver_state, inst.graph, inst.losses, config);
    benchmark::DoNotOptimize(solver_state.w.values.data());
  }
}
BENCHMARK(BM_SolverIteration)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_PdGap(benchmark::State& state) {
  auto inst = sbm_instance(25, 2, 6);
  SolverConfig config;
  config.lambda = 0.01;
  config.max_iters = 20;
  auto result = solve(inst.graph, inst.losses, config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pd_gap(inst.graph, inst.losses, config.penalty, config.lambda, result.w, result.u));
  }
}
BENCHMARK(BM_PdGap);

BENCHMARK_MAIN();
