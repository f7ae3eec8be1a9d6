#include "eenas/accel_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "eenas/error.hpp"
#include "json.hpp"

namespace eenas {

AcceleratorSpec parse_accelerator(std::istream& in, const std::string& source) {
    AcceleratorSpec spec;
    std::vector<std::vector<int>> hops;
    std::string line;
    int line_no = 0;
    auto bad = [&](const std::string& what) {
        fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        auto read = [&](auto& v) {
            if (!(ls >> v)) bad("expected a value for '" + key + "'");
        };
        if (key == "name") {
            read(spec.name);
        } else if (key == "compute_cores") {
            read(spec.compute_cores);
        } else if (key == "macs_per_cycle") {
            read(spec.macs_per_cycle);
        } else if (key == "array") {
            read(spec.array_rows);
            read(spec.array_cols);
        } else if (key == "pool_core") {
            int v = 0;
            read(v);
            spec.pool_core = v != 0;
        } else if (key == "simd_core") {
            int v = 0;
            read(v);
            spec.simd_core = v != 0;
        } else if (key == "sram_bytes") {
            read(spec.sram_bytes);
        } else if (key == "offchip_bits_per_cycle") {
            read(spec.offchip_bits_per_cycle);
        } else if (key == "noc_bits_per_cycle") {
            read(spec.noc_bits_per_cycle);
        } else if (key == "e_mac8") {
            read(spec.e_mac8);
        } else if (key == "e_sram") {
            read(spec.e_sram);
        } else if (key == "e_dram") {
            read(spec.e_dram);
        } else if (key == "e_noc") {
            read(spec.e_noc);
        } else if (key == "hops") {
            std::vector<int> row;
            int v = 0;
            while (ls >> v) row.push_back(v);
            if (row.empty()) bad("hops row is empty");
            hops.push_back(std::move(row));
        } else {
            bad("unknown key '" + key + "'");
        }
        std::string extra;
        if (key != "hops" && (ls >> extra)) bad("trailing text '" + extra + "'");
    }
    if (!hops.empty()) {
        spec.hops = std::move(hops);
    } else if (spec.core_count() == 6) {
        spec.hops = mesh_hops(2, 3);
    } else {
        spec.hops = mesh_hops(1, static_cast<int>(spec.core_count()));
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Config, source + ": " + e.what());
    }
    return spec;
}

AcceleratorSpec load_accelerator(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open accelerator file " + path);
    return parse_accelerator(in, path);
}

void write_accelerator(std::ostream& out, const AcceleratorSpec& s) {
    out << std::setprecision(17);
    out << "name " << s.name << "\n"
        << "compute_cores " << s.compute_cores << "\n"
        << "macs_per_cycle " << s.macs_per_cycle << "\n"
        << "array " << s.array_rows << " " << s.array_cols << "\n"
        << "pool_core " << (s.pool_core ? 1 : 0) << "\n"
        << "simd_core " << (s.simd_core ? 1 : 0) << "\n"
        << "sram_bytes " << s.sram_bytes << "\n"
        << "offchip_bits_per_cycle " << s.offchip_bits_per_cycle << "\n"
        << "noc_bits_per_cycle " << s.noc_bits_per_cycle << "\n"
        << "e_mac8 " << s.e_mac8 << "\n"
        << "e_sram " << s.e_sram << "\n"
        << "e_dram " << s.e_dram << "\n"
        << "e_noc " << s.e_noc << "\n";
    for (const auto& row : s.hops) {
        out << "hops";
        for (int h : row) out << " " << h;
        out << "\n";
    }
}

std::string cost_report_json(const HwCostReport& r, const LayerGraph& g,
                             const AcceleratorSpec& spec) {
    using nlohmann::json;
    json layers = json::array();
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& n = g.nodes[k];
        const auto& c = r.layers[k];
        layers.push_back({{"name", n.name},
                          {"kind", to_string(n.kind)},
                          {"core", r.plan.core[k]},
                          {"start", r.plan.start[k]},
                          {"end", r.plan.end[k]},
                          {"macs", n.macs},
                          {"bits", n.bits},
                          {"energy_pj", c.energy},
                          {"latency_cycles", c.latency},
                          {"compute_energy", c.compute_energy},
                          {"memory_energy", c.memory_energy},
                          {"noc_energy", c.noc_energy},
                          {"compute_cycles", c.compute_cycles},
                          {"stall_cycles", c.stall_cycles},
                          {"transfer_cycles", c.transfer_cycles},
                          {"utilization", c.utilization},
                          {"sram_bits", c.sram_bits},
                          {"offchip_bits", c.offchip_bits},
                          {"noc_bits", c.noc_bits},
                          {"spilled", c.spilled}});
    }
    json exits = json::array();
    for (std::size_t i = 0; i < g.m(); ++i) {
        json e = {{"exit", i + 1},
                  {"mount", g.exits[i].mount},
                  {"et", r.et[i]},
                  {"er", r.er[i]},
                  {"cumulative_macs", cumulative_macs(g, i + 1)}};
        if (i < r.overhead.size()) e["overhead"] = r.overhead[i];
        exits.push_back(e);
    }
    json transfers = json::array();
    for (const auto& t : r.plan.transfers) {
        transfers.push_back(
            {{"producer", t.producer}, {"consumer", t.consumer}, {"bits", t.bits}, {"hops", t.hops}});
    }
    json j = {{"accelerator", spec.name},
              {"et_avg", r.et_avg},
              {"makespan", r.plan.makespan},
              {"exits", exits},
              {"layers", layers},
              {"transfers", transfers}};
    return j.dump(2) + "\n";
}

std::string cost_report_csv(const HwCostReport& r, const LayerGraph& g) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "row,exit,mount,et,er\n";
    for (std::size_t i = 0; i < g.m(); ++i) {
        os << "cumulative," << i + 1 << "," << g.exits[i].mount << "," << r.et[i] << ","
           << r.er[i] << "\n";
    }
    os << "avg,,," << r.et_avg << ",1\n";
    return os.str();
}

std::string layer_costs_csv(const HwCostReport& r, const LayerGraph& g) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "layer,kind,core,start,end,macs,bits,energy,latency,compute_energy,memory_energy,"
          "noc_energy,compute_cycles,stall_cycles,transfer_cycles,utilization,spilled\n";
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& n = g.nodes[k];
        const auto& c = r.layers[k];
        os << n.name << "," << to_string(n.kind) << "," << r.plan.core[k] << "," << r.plan.start[k]
           << "," << r.plan.end[k] << "," << n.macs << "," << n.bits << "," << c.energy << ","
           << c.latency << "," << c.compute_energy << "," << c.memory_energy << ","
           << c.noc_energy << "," << c.compute_cycles << "," << c.stall_cycles << ","
           << c.transfer_cycles << "," << c.utilization << "," << (c.spilled ? 1 : 0) << "\n";
    }
    return os.str();
}

}  // namespace eenas
