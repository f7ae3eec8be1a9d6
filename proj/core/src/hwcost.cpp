#include "eenas/hwcost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "eenas/error.hpp"

namespace eenas {

const char* to_string(CoreKind kind) {
    switch (kind) {
        case CoreKind::Compute: return "compute";
        case CoreKind::Pool: return "pool";
        case CoreKind::Simd: return "simd";
    }
    return "?";
}

std::size_t AcceleratorSpec::core_count() const {
    return static_cast<std::size_t>(compute_cores) + (pool_core ? 1 : 0) + (simd_core ? 1 : 0);
}

CoreKind AcceleratorSpec::core_kind(std::size_t core) const {
    require(core < core_count(), ErrorCode::InvalidArgument,
            "core " + std::to_string(core) + " does not exist");
    const auto n = static_cast<std::size_t>(compute_cores);
    if (core < n) return CoreKind::Compute;
    if (pool_core && core == n) return CoreKind::Pool;
    return CoreKind::Simd;
}

int AcceleratorSpec::hop_count(std::size_t from, std::size_t to) const {
    if (from == to) return 0;
    return hops.at(from).at(to);
}

void AcceleratorSpec::validate() const {
    auto check = [](bool ok, const std::string& what) {
        require(ok, ErrorCode::Config, "accelerator: " + what);
    };
    check(compute_cores >= 1, "at least one compute core required");
    check(macs_per_cycle > 0 && array_rows > 0 && array_cols > 0, "array sizes must be positive");
    check(array_rows * array_cols == macs_per_cycle, "array rows * cols must equal MACs/cycle");
    check(sram_bytes > 0 && offchip_bits_per_cycle > 0 && noc_bits_per_cycle > 0,
          "memory sizes and bandwidths must be positive");
    check(e_mac8 > 0 && e_sram > 0 && e_dram > 0 && e_noc > 0, "energy constants must be positive");
    const std::size_t n = core_count();
    check(hops.size() == n, "hop matrix must have one row per core (" + std::to_string(n) + ")");
    for (std::size_t i = 0; i < n; ++i) {
        check(hops[i].size() == n, "hop matrix must be square");
        for (std::size_t j = 0; j < n; ++j) {
            check(i == j ? hops[i][j] == 0 : hops[i][j] > 0,
                  "hop counts must be zero on the diagonal and positive elsewhere");
        }
    }
}

std::vector<std::vector<int>> mesh_hops(int rows, int cols) {
    const int n = rows * cols;
    std::vector<std::vector<int>> h(static_cast<std::size_t>(n), std::vector<int>(n, 0));
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            h[a][b] = std::abs(a / cols - b / cols) + std::abs(a % cols - b % cols);
        }
    }
    return h;
}

AcceleratorSpec default_accelerator() {
    AcceleratorSpec s;
    s.hops = mesh_hops(2, 3);
    return s;
}

namespace {

bool is_matrix(LayerKind k) {
    return k == LayerKind::Conv || k == LayerKind::DepthwiseConv || k == LayerKind::Linear;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0); }

// (rows, cols) dimensions a layer presents to the array.
std::pair<std::uint64_t, std::uint64_t> array_dims(const LayerNode& layer) {
    const auto c = [](int v) { return static_cast<std::uint64_t>(v); };
    switch (layer.kind) {
        case LayerKind::Conv: return {c(layer.output.channels), c(layer.input.channels)};
        case LayerKind::DepthwiseConv:
            return {c(layer.output.channels), c(layer.kernel) * c(layer.kernel)};
        case LayerKind::Linear: return {c(layer.output.channels), layer.input.elements()};
        default: return {1, 1};
    }
}

}  // namespace

std::vector<std::size_t> compatible_cores(const LayerNode& layer, const AcceleratorSpec& spec) {
    std::vector<std::size_t> out;
    const auto n = static_cast<std::size_t>(spec.compute_cores);
    auto compute = [&] {
        for (std::size_t c = 0; c < n; ++c) out.push_back(c);
    };
    const std::size_t pool = n;
    const std::size_t simd = n + (spec.pool_core ? 1 : 0);
    if (is_matrix(layer.kind)) {
        compute();
    } else if (layer.kind == LayerKind::Pool && spec.pool_core) {
        out.push_back(pool);
    } else if (spec.simd_core) {
        out.push_back(simd);
    } else {
        compute();
    }
    return out;
}

double utilization(const LayerNode& layer, const AcceleratorSpec& spec) {
    if (!is_matrix(layer.kind)) return 1.0;
    const auto [co, ci] = array_dims(layer);
    const auto rows = static_cast<std::uint64_t>(spec.array_rows);
    const auto cols = static_cast<std::uint64_t>(spec.array_cols);
    return (double(co) / double(rows * ceil_div(co, rows))) *
           (double(ci) / double(cols * ceil_div(ci, cols)));
}

std::uint64_t input_bits(const LayerNode& layer) {
    return layer.input.elements() * static_cast<std::uint64_t>(layer.bits);
}
std::uint64_t output_bits(const LayerNode& layer) {
    return layer.output.elements() * static_cast<std::uint64_t>(layer.bits);
}
std::uint64_t weight_bits(const LayerNode& layer) {
    return layer.params * static_cast<std::uint64_t>(layer.bits);
}

bool fits_scratchpad(const LayerNode& layer, const AcceleratorSpec& spec) {
    return input_bits(layer) + output_bits(layer) <= spec.sram_bytes * 8;
}

LayerCost layer_cost(const LayerNode& layer, std::size_t core, const AcceleratorSpec& spec,
                     const Residency& residency) {
    const auto allowed = compatible_cores(layer, spec);
    require(std::find(allowed.begin(), allowed.end(), core) != allowed.end(),
            ErrorCode::InvalidArgument,
            "layer " + layer.name + " (" + to_string(layer.kind) + ") cannot run on " +
                to_string(spec.core_kind(core)) + " core " + std::to_string(core));

    LayerCost c;
    const bool matrix = is_matrix(layer.kind);
    c.utilization = utilization(layer, spec);
    if (matrix && layer.macs > 0) {
        // MACs / (MACs-per-cycle * U) in exact integer arithmetic.
        const auto [co, ci] = array_dims(layer);
        const auto ko = ceil_div(co, static_cast<std::uint64_t>(spec.array_rows));
        const auto ki = ceil_div(ci, static_cast<std::uint64_t>(spec.array_cols));
        std::uint64_t num = 0;
        require(!__builtin_mul_overflow(layer.macs, ko * ki, &num), ErrorCode::Overflow,
                "compute cycles overflow for layer " + layer.name);
        c.compute_cycles = ceil_div(num, co * ci);
    }

    c.spilled = !fits_scratchpad(layer, spec);
    const bool in_off = residency.input_offchip || c.spilled;
    const bool out_off = residency.output_offchip || c.spilled;
    const std::uint64_t in = input_bits(layer), out = output_bits(layer), w = weight_bits(layer);
    c.offchip_bits = w + (in_off ? in : 0) + (out_off ? out : 0);
    c.sram_bits = matrix ? in + w + out : 0;
    c.stall_cycles = ceil_div(c.offchip_bits, spec.offchip_bits_per_cycle);

    double noc_bit_hops = 0.0;
    for (const auto& t : residency.incoming) {
        c.noc_bits += t.bits;
        noc_bit_hops += double(t.bits) * double(t.hops);
    }
    c.transfer_cycles = ceil_div(c.noc_bits, spec.noc_bits_per_cycle);

    const double scale = double(layer.bits) / 8.0;
    c.compute_energy = double(layer.macs) * spec.e_mac8 * scale * scale;
    c.memory_energy = double(c.sram_bits) * spec.e_sram + double(c.offchip_bits) * spec.e_dram;
    c.noc_energy = noc_bit_hops * spec.e_noc;
    c.energy = c.compute_energy + c.memory_energy + c.noc_energy;
    c.latency = std::max(c.compute_cycles, c.stall_cycles) + c.transfer_cycles;
    return c;
}

double et_of(std::span<const LayerCost> costs, std::span<const std::size_t> nodes) {
    double e = 0.0, t = 0.0;
    for (std::size_t k : nodes) {
        require(k < costs.size(), ErrorCode::InvalidArgument,
                "missing cost for layer " + std::to_string(k));
        e += costs[k].energy;
        t += double(costs[k].latency);
    }
    return e * t;
}

double et_subnetwork(std::span<const LayerCost> costs, const LayerGraph& graph,
                     std::size_t exit_index) {
    require(costs.size() == graph.nodes.size(), ErrorCode::InvalidArgument,
            "layer costs do not cover the graph (" + std::to_string(costs.size()) + " of " +
                std::to_string(graph.nodes.size()) + ")");
    const auto nodes = subnetwork_nodes(graph, exit_index);
    return et_of(costs, nodes);
}

double et_avg(std::span<const double> et, std::span<const double> er) {
    require(et.size() == er.size() && !et.empty(), ErrorCode::InvalidArgument,
            "et_avg: length mismatch");
    double sum = 0.0, avg = 0.0;
    for (std::size_t i = 0; i < et.size(); ++i) {
        sum += er[i];
        avg += er[i] * et[i];
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
            "et_avg: exit ratios do not sum to 1");
    return avg;
}

double HwCostReport::max_overhead() const {
    double mx = 0.0;
    for (double o : overhead) mx = std::max(mx, o);
    return mx;
}

double overhead_ratio(const HwCostReport& report, const LayerGraph& graph,
                      std::size_t exit_index) {
    require(exit_index >= 1 && exit_index < graph.m(), ErrorCode::InvalidArgument,
            "overhead is defined for exits 1..m-1");
    const double head = et_of(report.layers, graph.exits[exit_index - 1].nodes);
    if (head == 0.0) return 0.0;
    const double seg = et_of(report.layers, inter_exit_segment(graph, exit_index));
    if (seg == 0.0) return std::numeric_limits<double>::infinity();
    return head / seg;
}

HwCostReport cost_report(const LayerGraph& graph, const AcceleratorSpec& spec,
                         std::optional<std::vector<double>> er, AllocationMode mode) {
    spec.validate();
    require(graph.m() >= 1, ErrorCode::InvalidArgument, "graph has no exits");
    Schedule s = allocate(graph, spec, mode);
    HwCostReport r;
    r.layers = std::move(s.costs);
    r.plan = std::move(s.plan);
    for (std::size_t i = 1; i <= graph.m(); ++i) r.et.push_back(et_subnetwork(r.layers, graph, i));
    if (er) {
        require(er->size() == graph.m(), ErrorCode::InvalidArgument,
                "exit ratio count does not match the exit count");
        r.er = std::move(*er);
    } else {
        r.er.assign(graph.m(), 0.0);
        r.er.back() = 1.0;
    }
    r.et_avg = et_avg(r.et, r.er);
    for (std::size_t i = 1; i < graph.m(); ++i) r.overhead.push_back(overhead_ratio(r, graph, i));
    return r;
}

HwCostReport cost_report(const EennArchitecture& arch, const AcceleratorSpec& spec,
                         std::optional<std::vector<double>> er, AllocationMode mode) {
    return cost_report(expand_layers(arch), spec, std::move(er), mode);
}

double static_et(const EennArchitecture& arch, const AcceleratorSpec& spec) {
    return cost_report(static_counterpart(arch), spec).et.back();
}

double et_reduction(double et_avg_value, double static_et_value) {
    require(static_et_value > 0.0, ErrorCode::InvalidArgument, "static ET must be positive");
    return 1.0 - et_avg_value / static_et_value;
}

}  // namespace eenas
