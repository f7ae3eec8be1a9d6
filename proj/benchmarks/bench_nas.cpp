#include <benchmark/benchmark.h>

#include <memory>

#include "eenas/backbone_io.hpp"
#include "eenas/nas.hpp"

namespace {

eenas::SearchSpace mobilenet_space() {
    eenas::SearchSpace s;
    s.backbone = std::make_shared<eenas::BackboneSpec>(eenas::mobilenetv2_cifar10());
    s.head_options = {{4, 1, 128, eenas::Activation::ReLU6}, {4, 2, 128, eenas::Activation::ReLU6}};
    s.quant_bits = {8, 4};
    return s;
}

// One search iteration on the synthetic oracle, hardware costs memoized.
void BM_NasIteration(benchmark::State& state) {
    eenas::NasConfig cfg;
    cfg.init_population = 50;
    cfg.N = 20;
    cfg.iterations = 1;
    eenas::OracleEvaluator ev(eenas::OracleConfig{}, 0);
    eenas::NasEngine engine(mobilenet_space(), eenas::default_accelerator(), cfg, ev);
    for (auto _ : state) {
        auto st = engine.initialize();
        engine.iterate(st);
        benchmark::DoNotOptimize(st.population.size());
    }
}
BENCHMARK(BM_NasIteration)->Unit(benchmark::kMillisecond);

void BM_SampleArchitecture(benchmark::State& state) {
    const auto space = mobilenet_space();
    eenas::Rng rng(3);
    for (auto _ : state) {
        auto c = eenas::sample_architecture(space, rng);
        benchmark::DoNotOptimize(c.hash());
    }
}
BENCHMARK(BM_SampleArchitecture);

}  // namespace
