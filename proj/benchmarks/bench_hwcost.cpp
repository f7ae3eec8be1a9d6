#include <benchmark/benchmark.h>

#include <memory>

#include "eenas/backbone_io.hpp"
#include "eenas/hwcost.hpp"

namespace {

eenas::EennArchitecture mobilenet_arch(int exits) {
    static const char* kMounts[] = {"B", "D", "F", "I", "K"};
    eenas::EennArchitecture a;
    a.backbone = std::make_shared<eenas::BackboneSpec>(eenas::mobilenetv2_cifar10());
    for (int i = 5 - exits; i < 5; ++i) {
        a.exits.push_back({kMounts[i], {4, 1, 128, eenas::Activation::ReLU6}});
    }
    a.quant = {8, std::vector<int>(a.exits.size(), 8), {}};
    return a;
}

void BM_ExpandLayers(benchmark::State& state) {
    const auto arch = mobilenet_arch(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto g = eenas::expand_layers(arch);
        benchmark::DoNotOptimize(g.nodes.data());
    }
}
BENCHMARK(BM_ExpandLayers)->Arg(1)->Arg(5);

void BM_GreedyAllocate(benchmark::State& state) {
    const auto g = eenas::expand_layers(mobilenet_arch(static_cast<int>(state.range(0))));
    const auto spec = eenas::default_accelerator();
    for (auto _ : state) {
        auto s = eenas::allocate(g, spec);
        benchmark::DoNotOptimize(s.plan.makespan);
    }
    state.counters["layers"] = static_cast<double>(g.nodes.size());
}
BENCHMARK(BM_GreedyAllocate)->Arg(1)->Arg(5);

void BM_GeneticAllocate(benchmark::State& state) {
    const auto g = eenas::expand_layers(mobilenet_arch(3));
    const auto spec = eenas::default_accelerator();
    eenas::GeneticAllocConfig gc;
    gc.generations = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto s = eenas::allocate(g, spec, eenas::AllocationMode::Genetic, gc);
        benchmark::DoNotOptimize(s.plan.makespan);
    }
}
BENCHMARK(BM_GeneticAllocate)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_CostReport(benchmark::State& state) {
    const auto arch = mobilenet_arch(4);
    const auto spec = eenas::default_accelerator();
    for (auto _ : state) {
        auto r = eenas::cost_report(arch, spec);
        benchmark::DoNotOptimize(r.et_avg);
    }
}
BENCHMARK(BM_CostReport);

}  // namespace
