#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "splitac/experiments.hpp"
#include "splitac/flows.hpp"
#include "splitac/grid.hpp"
#include "splitac/noise.hpp"
#include "splitac/schemes.hpp"

using namespace splitac;

static void BM_ResolventSolve(benchmark::State& state) {
  const Mesh mesh(static_cast<std::size_t>(state.range(0)));
  const ResolventSolver solver(mesh, 1.0 / 512);
  GridFunction x = discrete_eigenvector(mesh, 3);
  for (auto _ : state) {
    solver.solve_in_place(x.values());
    benchmark::DoNotOptimize(x.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResolventSolve)->Arg(127)->Arg(255)->Arg(3999);

static void BM_Semigroup(benchmark::State& state) {
  const Mesh mesh(static_cast<std::size_t>(state.range(0)));
  const DiscreteOperator op(mesh);
  const SemigroupFactors factors(op, 1.0 / 512);
  GridFunction x = discrete_eigenvector(mesh, 3);
  std::vector<double> scratch(mesh.n_interior());
  for (auto _ : state) {
    factors.apply_in_place(op, x.values(), scratch);
    benchmark::DoNotOptimize(x.values().data());
  }
}
BENCHMARK(BM_Semigroup)->Arg(127)->Arg(255)->Arg(3999);

static void BM_PhiGrid(benchmark::State& state) {
  const Mesh mesh(127);
  const FlowParams p(1.0 / 512);
  GridFunction x = 2.0 * discrete_eigenvector(mesh, 1);
  for (auto _ : state) {
    phi_in_place(p, x.values());
    benchmark::DoNotOptimize(x.values().data());
  }
}
BENCHMARK(BM_PhiGrid);

static void BM_FineIncrement(benchmark::State& state) {
  const Mesh mesh(static_cast<std::size_t>(state.range(0)));
  const NoisePlan plan(7, 0, mesh, 1.0 / 1024, 1);
  std::vector<double> out(mesh.n_interior());
  std::uint64_t n = 0;
  for (auto _ : state) {
    plan.fill_fine(n++, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FineIncrement)->Arg(127)->Arg(3999);

static void BM_Step(benchmark::State& state) {
  const Mesh mesh(127);
  const DiscreteOperator op(mesh);
  const auto method = static_cast<Method>(state.range(0));
  const Stepper stepper(op, SchemeSpec{method, LinearIntegrator::imp, 1.0 / 512});
  const NoisePlan plan(7, 0, mesh, 1.0 / 512, 1);
  StepState s{GridFunction(mesh), 0, false};
  const IncrementBlock dw = plan.fine_increment(0);
  for (auto _ : state) {
    stepper.advance(s, dw);
    s.x *= 0.5;
  }
}
BENCHMARK(BM_Step)->DenseRange(0, 3);

static void BM_CoupledLevel(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.n_replicas = 16;
  cfg.scheme = SchemeSpec{Method::m1, LinearIntegrator::imp, 0.0};
  for (auto _ : state) {
    auto samples = simulate_coupled(cfg, 1.0 / 256);
    benchmark::DoNotOptimize(samples.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_replicas);
}
BENCHMARK(BM_CoupledLevel)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
