#pragma once

#include <iosfwd>
#include <string>

#include "eenas/hwcost.hpp"

namespace eenas {

// Plain-text accelerator description, one `key value...` per line, `#`
// comments. Keys: name, compute_cores, macs_per_cycle, array (rows cols),
// pool_core, simd_core (0/1), sram_bytes, offchip_bits_per_cycle,
// noc_bits_per_cycle, e_mac8, e_sram, e_dram, e_noc, and one `hops` line per
// core giving that core's hop-count row. Omitted keys keep their defaults;
// omitted hops on the default 6-core layout keep the 2x3 mesh.
AcceleratorSpec parse_accelerator(std::istream& in, const std::string& source = "<stream>");
AcceleratorSpec load_accelerator(const std::string& path);
void write_accelerator(std::ostream& out, const AcceleratorSpec& spec);

/// Full per-layer breakdown plus per-exit ET and overheads.
std::string cost_report_json(const HwCostReport& report, const LayerGraph& graph,
                             const AcceleratorSpec& spec);

/// One cumulative row per exit (exit, mount, ET_i, ER_i)
/// followed by one `avg` row carrying ET_avg.
std::string cost_report_csv(const HwCostReport& report, const LayerGraph& graph);

/// One row per layer with the full cost breakdown.
std::string layer_costs_csv(const HwCostReport& report, const LayerGraph& graph);

}  // namespace eenas
