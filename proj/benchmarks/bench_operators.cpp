#include <benchmark/benchmark.h>

#include "gtvmin/datagen.hpp"
#include "gtvmin/losses.hpp"
#include "gtvmin/penalties.hpp"
#include "gtvmin/rng.hpp"

using namespace gtvmin;

namespace {

LocalLoss make_squared(int m, int d, Rng& rng) {
  Eigen::MatrixXd X(m, d);
  Eigen::VectorXd y(m);
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < d; ++j) X(r, j) = rng.normal();
    y[r] = rng.normal();
  }
  return LocalLoss::squared({std::move(X), std::move(y)});
}

}  // namespace

static void BM_PrimalUpdateSquared(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(1);
  auto loss = make_squared(10, d, rng);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
  loss.primal_update(v, 0.02);  // warm the factorization cache
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss.primal_update(v, 0.02));
  }
}
BENCHMARK(BM_PrimalUpdateSquared)->Arg(10)->Arg(100);

static void BM_PrimalUpdateLogistic(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(2);
  Eigen::MatrixXd X(20, d);
  Eigen::VectorXd y(20);
  for (int r = 0; r < 20; ++r) {
    for (int j = 0; j < d; ++j) X(r, j) = rng.normal();
    y[r] = rng.bernoulli(0.5) ? 1.0 : -1.0;
  }
  auto loss = LocalLoss::logistic({std::move(X), std::move(y)});
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss.primal_update(v, 0.5));
  }
}
BENCHMARK(BM_PrimalUpdateLogistic)->Arg(5)->Arg(20);

static void BM_DualUpdateClip(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  auto penalty = GtvPenalty::norm2();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(penalty.dual_update(v, 0.5, 0.01));
  }
}
BENCHMARK(BM_DualUpdateClip)->Arg(10)->Arg(100);

static void BM_GaussianWasserstein(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(3);
  Eigen::MatrixXd a(3 * d, d), b(3 * d, d);
  for (int r = 0; r < 3 * d; ++r) {
    for (int j = 0; j < d; ++j) {
      a(r, j) = rng.normal();
      b(r, j) = rng.normal() + 1.0;
    }
  }
  auto sa = sample_stats(a), sb = sample_stats(b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaussian_wasserstein(sa.mu, sa.sigma, sb.mu, sb.sigma));
  }
}
BENCHMARK(BM_GaussianWasserstein)->Arg(2)->Arg(10);

BENCHMARK_MAIN();
