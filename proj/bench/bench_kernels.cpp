#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "lifebelt/filters.hpp"
#include "lifebelt/kernels.hpp"

using namespace lifebelt;

namespace {

// One LBPF-shaped step: N - 1 resampled particles and a lifebelt at the end.
struct Step {
  Theta theta{0.3, 0.5, 0.2};
  ThetaLogs logs{theta};
  LogFactorial lf{4096};
  std::vector<Count> prev_x, x;
  std::vector<double> prev_lw, lw;
  std::vector<std::size_t> anc;
  std::vector<Dynamics> dyn;
  MixtureLayout layout;

  Step(std::size_t N, WeightRule rule) : x(N), lw(N) {
    std::mt19937_64 g(3);
    std::poisson_distribution<Count> px(20.0);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    for (std::size_t n = 0; n < N; ++n) {
      prev_x.push_back(px(g));
      prev_lw.push_back(-std::log(double(N)));
      anc.push_back(n + 1 < N ? pick(g) : n);
      dyn.push_back(n + 1 < N ? Dynamics::q1 : Dynamics::point_mass);
    }
    layout = {rule, N, N - 1, N - 1, 1};
  }

  StepModel model() const { return {&logs, &lf, 10, 8, 5, 42}; }
  StepBuffers buffers() { return {prev_x, prev_lw, anc, dyn, x, lw}; }
};

void BM_PropagateSerial(benchmark::State& state) {
  Step s(std::size_t(state.range(0)), WeightRule(state.range(1)));
  for (auto _ : state) {
    propagate_weight_serial(s.model(), s.layout, s.buffers());
    benchmark::DoNotOptimize(s.lw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PropagateParallel(benchmark::State& state) {
  Step s(std::size_t(state.range(0)), WeightRule(state.range(1)));
  for (auto _ : state) {
    propagate_weight_parallel(s.model(), s.layout, s.buffers(), 0);
    benchmark::DoNotOptimize(s.lw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Filter(benchmark::State& state) {
  const auto sim = simulate(Theta{0.3, 0.5, 0.2}, pulse_admissions(25, 30, 12, 4, 1), 25,
                            X0Prior::poisson(1.5), 1);
  FilterConfig c;
  c.variant = Variant(state.range(0));
  c.N = 500;
  c.threads = int(state.range(1));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    c.seed = seed++;
    benchmark::DoNotOptimize(run_filter(sim.data, Theta{0.3, 0.5, 0.2}, c).loglik);
  }
  state.SetLabel(std::string(to_string(c.variant)) + (c.threads == 1 ? " serial" : " parallel"));
}

// Second argument: 0 ancestor rule, 1 own-history rule.
const std::vector<std::vector<std::int64_t>> kStepArgs{{100, 1000, 10000}, {0, 1}};

}  // namespace

BENCHMARK(BM_PropagateSerial)->ArgsProduct(kStepArgs);
BENCHMARK(BM_PropagateParallel)->ArgsProduct(kStepArgs);
BENCHMARK(BM_Filter)
    ->ArgsProduct({{int(Variant::bpf), int(Variant::lbpf), int(Variant::lbpf_fleet), int(Variant::apf)},
                   {1, 0}})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
