#include <benchmark/benchmark.h>

#include <vector>

#include "eenas/quant.hpp"
#include "eenas/rng.hpp"

namespace {

std::vector<double> normal_sample(std::size_t n) {
    eenas::Rng rng(1);
    std::vector<double> v(n);
    for (double& x : v) x = eenas::standard_normal(rng);
    return v;
}

void BM_FakeQuant(benchmark::State& state) {
    auto x = normal_sample(static_cast<std::size_t>(state.range(0)));
    const auto p = eenas::QuantParams::make(2.5, 4);
    for (auto _ : state) {
        auto y = eenas::fake_quant_forward(x, p);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FakeQuant)->Arg(1 << 10)->Arg(1 << 16);

void BM_CalibrateClip(benchmark::State& state) {
    const auto x = normal_sample(static_cast<std::size_t>(state.range(0)));
    const auto candidates = eenas::default_clip_candidates(x);
    for (auto _ : state) {
        auto c = eenas::calibrate_clip(x, 8, candidates);
        benchmark::DoNotOptimize(c.clip);
    }
}
BENCHMARK(BM_CalibrateClip)->Arg(256)->Arg(4096);

}  // namespace
