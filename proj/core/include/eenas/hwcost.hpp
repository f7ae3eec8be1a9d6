#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eenas/arch.hpp"

namespace eenas {

enum class CoreKind { Compute, Pool, Simd };

const char* to_string(CoreKind kind);

/// Multi-core edge accelerator. Cores are numbered compute cores first, then
/// the pooling core and the SIMD core when present; `hops` is the NoC hop
/// matrix over that numbering.
///
/// Energy constants are scaled-from-literature placeholders (pJ).
struct AcceleratorSpec {
    std::string name = "edge-4core";
    int compute_cores = 4;
    int macs_per_cycle = 512;
    int array_rows = 16;  // output channels
    int array_cols = 32;  // input channels
    bool pool_core = true;
    bool simd_core = true;
    std::uint64_t sram_bytes = 2ull * 1024 * 1024;
    std::uint64_t offchip_bits_per_cycle = 64;
    std::uint64_t noc_bits_per_cycle = 128;
    double e_mac8 = 0.2;
    double e_sram = 0.05;
    double e_dram = 3.0;
    double e_noc = 0.1;
    std::vector<std::vector<int>> hops;

    std::size_t core_count() const;
    CoreKind core_kind(std::size_t core) const;
    int hop_count(std::size_t from, std::size_t to) const;

    void validate() const;
};

/// Manhattan hop matrix of a rows x cols mesh, cores placed row-major.
std::vector<std::vector<int>> mesh_hops(int rows, int cols);

/// 4 compute cores, pooling and SIMD cores on a 2x3 mesh.
AcceleratorSpec default_accelerator();

/// Compatible cores for a layer: matrix layers on compute cores, pooling on
/// the pooling core, elementwise and softmax on the SIMD core. Vector layers
/// fall back to the SIMD core and then to compute cores when a dedicated core
/// is missing.
std::vector<std::size_t> compatible_cores(const LayerNode& layer, const AcceleratorSpec& spec);

/// Where a layer's tensors live. Weights always stream from off-chip.
struct Residency {
    bool input_offchip = false;
    bool output_offchip = false;
    struct Incoming {
        std::uint64_t bits = 0;
        int hops = 0;
    };
    std::vector<Incoming> incoming;  // NoC transfers feeding this layer
};

struct LayerCost {
    double energy = 0.0;  // pJ
    std::uint64_t latency = 0;  // cycles

    double compute_energy = 0.0;
    double memory_energy = 0.0;
    double noc_energy = 0.0;
    std::uint64_t compute_cycles = 0;
    std::uint64_t stall_cycles = 0;
    std::uint64_t transfer_cycles = 0;
    double utilization = 1.0;

    std::uint64_t sram_bits = 0;
    std::uint64_t offchip_bits = 0;
    std::uint64_t noc_bits = 0;
    bool spilled = false;  // activations did not fit the local scratchpad
};

/// Array utilization of a matrix layer (1 for vector layers).
double utilization(const LayerNode& layer, const AcceleratorSpec& spec);

/// Activation bits of a layer's input and output tensors.
std::uint64_t input_bits(const LayerNode& layer);
std::uint64_t output_bits(const LayerNode& layer);
std::uint64_t weight_bits(const LayerNode& layer);

/// True when the layer's input and output activations fit one scratchpad.
bool fits_scratchpad(const LayerNode& layer, const AcceleratorSpec& spec);

LayerCost layer_cost(const LayerNode& layer, std::size_t core, const AcceleratorSpec& spec,
                     const Residency& residency);

struct Transfer {
    std::size_t producer = 0;
    std::size_t consumer = 0;
    std::uint64_t bits = 0;
    int hops = 0;
};

struct AllocationPlan {
    std::vector<std::size_t> core;  // per layer
    std::vector<std::uint64_t> start;
    std::vector<std::uint64_t> end;
    std::vector<Transfer> transfers;
    std::uint64_t makespan = 0;
};

struct Schedule {
    AllocationPlan plan;
    std::vector<LayerCost> costs;
};

/// List schedule of `graph` in node order under a fixed assignment: each
/// layer starts once its core is free and all producers have finished.
Schedule evaluate_assignment(const LayerGraph& graph, const AcceleratorSpec& spec,
                             std::span<const std::size_t> assignment);

enum class AllocationMode { Greedy, Genetic };

struct GeneticAllocConfig {
    std::size_t population = 24;
    std::size_t generations = 40;
    double mutation_rate = 0.1;
    std::uint64_t seed = 1;
};

Schedule allocate(const LayerGraph& graph, const AcceleratorSpec& spec,
                  AllocationMode mode = AllocationMode::Greedy,
                  const GeneticAllocConfig& genetic = {});

/// Empty when the plan is consistent with the graph (one layer per core at a
/// time, dependencies respected, transfers recorded for every cross-core
/// edge); otherwise a description of the first violation.
std::string check_plan(const LayerGraph& graph, const AllocationPlan& plan,
                       std::span<const LayerCost> costs);

/// (sum E) * (sum T) over a node set.
double et_of(std::span<const LayerCost> costs, std::span<const std::size_t> nodes);

double et_subnetwork(std::span<const LayerCost> costs, const LayerGraph& graph,
                     std::size_t exit_index);

double et_avg(std::span<const double> et, std::span<const double> er);

struct HwCostReport {
    std::vector<LayerCost> layers;
    AllocationPlan plan;
    std::vector<double> et;        // ET_i per exit
    std::vector<double> er;        // exit ratios used for et_avg
    double et_avg = 0.0;
    std::vector<double> overhead;  // OH_i for i in [1, m-1]

    double max_overhead() const;
};

/// OH_i = ET(head i) / ET(backbone after mount i up to mount i+1). A zero-cost
/// segment under a nonzero head yields +infinity.
double overhead_ratio(const HwCostReport& report, const LayerGraph& graph, std::size_t exit_index);

/// Full pipeline. Without `er` every sample is taken to exit last.
HwCostReport cost_report(const LayerGraph& graph, const AcceleratorSpec& spec,
                         std::optional<std::vector<double>> er = std::nullopt,
                         AllocationMode mode = AllocationMode::Greedy);
HwCostReport cost_report(const EennArchitecture& arch, const AcceleratorSpec& spec,
                         std::optional<std::vector<double>> er = std::nullopt,
                         AllocationMode mode = AllocationMode::Greedy);

/// ET of the static counterpart: backbone plus final head, all samples last.
double static_et(const EennArchitecture& arch, const AcceleratorSpec& spec);

/// 1 - ET_avg / ET_static.
double et_reduction(double et_avg, double static_et);

}  // namespace eenas
