#include <benchmark/benchmark.h>

#include "optitomo/fem.hpp"
#include "optitomo/inversion.hpp"
#include "optitomo/locpot.hpp"
#include "optitomo/ntd.hpp"
#include "optitomo/synth.hpp"

using namespace optitomo;

namespace {

void BM_AssembleFactorise(benchmark::State& state) {
  const auto mesh = generate_disk_mesh(static_cast<int>(state.range(0)));
  const auto sigma = sample_coefficient(mesh, parse_coefficient("example2_sigma"));
  const auto q = sample_coefficient(mesh, parse_coefficient("example2_q"));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh, sigma, q));
  state.counters["elements"] = static_cast<double>(mesh->num_elements());
}
BENCHMARK(BM_AssembleFactorise)->Arg(1016)->Arg(4064)->Unit(benchmark::kMillisecond);

void BM_NeumannSolve(benchmark::State& state) {
  const auto mesh = generate_disk_mesh(static_cast<int>(state.range(0)));
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  const auto sys = assemble(mesh, one, one);
  const auto g = sample_boundary(mesh, parse_boundary("cos:2"));
  for (auto _ : state) benchmark::DoNotOptimize(solve_neumann(sys, g));
}
BENCHMARK(BM_NeumannSolve)->Arg(1016)->Arg(4064)->Unit(benchmark::kMicrosecond);

void BM_BuildNtD(benchmark::State& state) {
  const auto mesh = generate_disk_mesh(static_cast<int>(state.range(0)));
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(build_ntd(mesh, one, one, 1));
  state.counters["boundary_nodes"] = static_cast<double>(mesh->num_boundary_nodes());
}
BENCHMARK(BM_BuildNtD)->Arg(1016)->Arg(4064)->Unit(benchmark::kMillisecond);

void BM_KvGradient(benchmark::State& state) {
  ExperimentSpec spec = example2_spec();
  spec.noise_level = 0.05;
  const Experiment ex = build_experiment(spec);
  const auto sigma = sample_coefficient(ex.coarse, parse_coefficient(spec.sigma_init));
  const auto q = sample_coefficient(ex.coarse, parse_coefficient(spec.q_init));
  for (auto _ : state) benchmark::DoNotOptimize(kv_gradient(ex.measurements, sigma, q, 1e-3, InversionMode::joint, 1));
}
BENCHMARK(BM_KvGradient)->Unit(benchmark::kMillisecond);

void BM_LocalizedCurrent(benchmark::State& state) {
  const auto mesh = generate_disk_mesh(1016);
  const auto setup = make_probing_setup(mesh, subdomain_partition(*mesh, 0.5, 8), 1.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(find_localized_current(setup, 1, static_cast<int>(state.range(0)), 200));
}
BENCHMARK(BM_LocalizedCurrent)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
