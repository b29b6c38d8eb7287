#include <benchmark/benchmark.h>

#include "slipfsi/config.hpp"
#include "slipfsi/drivers.hpp"
#include "slipfsi/galerkin.hpp"

#include <random>

using namespace slipfsi;

namespace {

// resolution, N
std::unique_ptr<Scenario> make(int resolution, int N) {
  Config c;
  c.domain_resolution = resolution;
  c.basis_N = N;
  return build_scenario(c);
}

void BM_AssembleMass(benchmark::State& state) {
  const auto sc = make(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const VecX rho = VecX::Constant(sc->disc.volume_size(), 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_mass(sc->basis, sc->disc, sc->geo, rho));
}
BENCHMARK(BM_AssembleMass)->Args({8, 20})->Args({10, 20})->Args({10, 40})->Unit(benchmark::kMillisecond);

void BM_AssembleDissipation(benchmark::State& state) {
  const auto sc = make(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const VecX nv = VecX::Constant(sc->disc.volume_size(), 1.0);
  const VecX ns = VecX::Constant(sc->disc.surface_S0.size(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_dissipation(sc->basis, sc->disc, nv, ns, 1.0));
}
BENCHMARK(BM_AssembleDissipation)->Args({8, 20})->Args({10, 20})->Unit(benchmark::kMillisecond);

void BM_TransportPropose(benchmark::State& state) {
  const auto sc = make(static_cast<int>(state.range(0)), 20);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  VecX a(sc->basis.N);
  for (auto& x : a) x = 0.3 * nd(gen);
  GalerkinRelativeVelocity rel(sc->basis);
  rel.push(0.0, a);
  rel.push(0.005, a);
  DensityTransport tr(sc->disc, sc->rho0, sc->shift);
  for (auto _ : state) benchmark::DoNotOptimize(tr.propose(rel, 0.0, 0.005));
}
BENCHMARK(BM_TransportPropose)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Step(benchmark::State& state) {
  const auto sc = make(static_cast<int>(state.range(0)), 20);
  for (auto _ : state) {
    state.PauseTiming();
    GalerkinStepper st(sc->disc, sc->geo, sc->basis, sc->params, sc->flux, sc->rho0, sc->shift,
                       sc->cfg.transport_dt_sub_factor, sc->step_opts);
    st.set_initial(sc->alpha0);
    state.ResumeTiming();
    benchmark::DoNotOptimize(st.step(sc->cfg.time_dt));
  }
}
BENCHMARK(BM_Step)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
