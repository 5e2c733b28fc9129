// Serial reference kernels against their OpenMP counterparts.

#include "grep/kernels.hpp"
#include "grep/random.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace grep;

struct Problem {
  Environment env;
  Policy policy;
  Vector z;
  Vector q;
  Matrix kernel;

  explicit Problem(int n, int k = 4, Rng rng = Rng(7))
      : env(random_environment(n, k, rng)), policy(random_policy(k, n, rng)) {
    kernel = kernels::serial::projection(env.transitions(), policy.probs());
    z = random_distribution(n, rng).values();
    q = random_rewards(n, rng).values();
  }
};

template <auto Kernel>
void BM_Projection(benchmark::State& state) {
  Problem p(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(p.env.transitions(), p.policy.probs()));
  }
}

template <auto Kernel>
void BM_PolicyGradient(benchmark::State& state) {
  Problem p(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(p.env.transitions(), p.z, p.q, 0.95));
  }
}

template <auto Kernel>
void BM_ForwardVisits(benchmark::State& state) {
  Problem p(64);
  const Vector start = Vector::Unit(64, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(p.kernel, start, 0.95, state.range(0), 300, 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_BackwardVisits(benchmark::State& state) {
  Problem p(64);
  const Vector w = p.q / p.q.sum();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(p.kernel, w, 0.95, state.range(0), 300, 1,
                                    grep::kernels::AdjointWalk::CollapseSelfLoops));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_CentralDifference(benchmark::State& state) {
  Problem p(static_cast<int>(state.range(0)));
  const Vector s0 = Vector::Unit(p.kernel.rows(), 0);
  const kernels::MatrixObjective f = [&](const Matrix& m) {
    const Matrix a = Matrix::Identity(m.rows(), m.cols()) - 0.9 * m;
    return p.q.dot(a.partialPivLu().solve(s0));
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(p.kernel, 1e-5, f));
  }
}

BENCHMARK(BM_Projection<kernels::serial::projection>)->Name("projection/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Projection<kernels::omp::projection>)->Name("projection/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_PolicyGradient<kernels::serial::policy_gradient>)->Name("policy_gradient/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_PolicyGradient<kernels::omp::policy_gradient>)->Name("policy_gradient/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_ForwardVisits<kernels::serial::forward_visits>)->Name("forward_visits/serial")->Arg(10000);
BENCHMARK(BM_ForwardVisits<kernels::omp::forward_visits>)->Name("forward_visits/omp")->Arg(10000);
BENCHMARK(BM_BackwardVisits<kernels::serial::backward_visits>)->Name("backward_visits/serial")->Arg(10000);
BENCHMARK(BM_BackwardVisits<kernels::omp::backward_visits>)->Name("backward_visits/omp")->Arg(10000);
BENCHMARK(BM_CentralDifference<kernels::serial::central_difference>)->Name("central_difference/serial")->Arg(16);
BENCHMARK(BM_CentralDifference<kernels::omp::central_difference>)->Name("central_difference/omp")->Arg(16);

}  // namespace

BENCHMARK_MAIN();
