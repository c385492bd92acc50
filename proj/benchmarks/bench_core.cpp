#include <benchmark/benchmark.h>

#include "fkdv/evolution.hpp"
#include "fkdv/ground_state.hpp"
#include "fkdv/spectral.hpp"

using namespace fkdv;

namespace {

Profile demo_state(const Grid& grid, double sigma) {
  return petviashvili(grid, sigma, 2, 1.0);
}

void bench_fractional_derivative(benchmark::State& state) {
  const Grid grid(30.0, static_cast<int>(state.range(0)));
  const Profile u = demo_state(grid, 2.0);
  for (auto _ : state) {
    Profile d = fractional_derivative(u, 1.5);
    benchmark::DoNotOptimize(d.values.data());
  }
}

void bench_petviashvili(benchmark::State& state) {
  const Grid grid(30.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Profile psi = petviashvili(grid, 2.0, 2, 1.0);
    benchmark::DoNotOptimize(psi.values.data());
  }
}

void bench_integrator_step(benchmark::State& state) {
  const Grid grid(30.0, static_cast<int>(state.range(0)));
  const double sigma = 2.0;
  Integrator ti(grid, sigma, Nonlinearity::double_power(1, 2, 3));
  EvolutionState ev = ti.make_state(demo_state(grid, sigma));
  const double dt = ti.default_dt();
  for (auto _ : state) {
    ti.step(ev, dt);
    benchmark::DoNotOptimize(ev.modes.data());
  }
}

void bench_orbital_distance(benchmark::State& state) {
  const Grid grid(30.0, static_cast<int>(state.range(0)));
  const Profile phi = demo_state(grid, 2.0);
  const Profile u = shift(phi, 7.25);
  for (auto _ : state) {
    OrbitalDistanceResult r = orbital_distance(u, phi, 2.0);
    benchmark::DoNotOptimize(r.distance);
  }
}

BENCHMARK(bench_fractional_derivative)->Arg(512)->Arg(4096);
BENCHMARK(bench_petviashvili)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_integrator_step)->Arg(512)->Arg(2048);
BENCHMARK(bench_orbital_distance)->Arg(512)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
