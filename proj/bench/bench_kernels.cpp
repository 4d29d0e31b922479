// Serial reference vs OpenMP kernels over grid size.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "cda/kernels.hpp"

namespace {

struct Setup {
  explicit Setup(std::size_t n)
      : rho(n), mom(n), g(n), d_rho(n), d_mom(n) {
    p.dx = 1.0 / static_cast<double>(n);
    p.nu = 4.0 * 0.05 / 3.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = (static_cast<double>(j) + 0.5) * p.dx;
      rho[j] = 1.0 + 0.3 * std::cos(6.283185307179586 * x);
      mom[j] = 0.1 * std::sin(3.141592653589793 * x);
      g[j] = 0.5 * std::sin(6.283185307179586 * x);
    }
  }
  cda::kernels::StencilParams p;
  std::vector<double> rho, mom, g, d_rho, d_mom;
};

void BM_TendencySerial(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    cda::kernels::tendency_serial(s.p, {s.rho, s.mom, s.g}, {s.d_rho, s.d_mom});
    benchmark::DoNotOptimize(s.d_mom.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TendencyParallel(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    cda::kernels::tendency_parallel(s.p, {s.rho, s.mom, s.g}, {s.d_rho, s.d_mom});
    benchmark::DoNotOptimize(s.d_mom.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StableDtSerial(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cda::kernels::stable_dt_serial(s.p, s.rho, s.mom));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StableDtParallel(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cda::kernels::stable_dt_parallel(s.p, s.rho, s.mom));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_TendencySerial)->RangeMultiplier(8)->Range(256, 1 << 21);
BENCHMARK(BM_TendencyParallel)->RangeMultiplier(8)->Range(256, 1 << 21);
BENCHMARK(BM_StableDtSerial)->RangeMultiplier(8)->Range(256, 1 << 21);
BENCHMARK(BM_StableDtParallel)->RangeMultiplier(8)->Range(256, 1 << 21);

BENCHMARK_MAIN();
