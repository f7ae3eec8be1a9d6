#include <algorithm>
#include <limits>
#include <string>
#include <tuple>

#include "eenas/error.hpp"
#include "eenas/hwcost.hpp"
#include "eenas/rng.hpp"

namespace eenas {

namespace {

struct Adjacency {
    std::vector<std::vector<std::size_t>> preds;

    explicit Adjacency(const LayerGraph& g) : preds(g.nodes.size()) {
        for (const auto& [p, c] : g.edges) {
            require(p < c && c < g.nodes.size(), ErrorCode::InvalidArgument,
                    "layer graph is not in topological node order");
            preds[c].push_back(p);
        }
    }
};

// Incremental list scheduler; layers must be placed in node order.
class ListScheduler {
public:
    ListScheduler(const LayerGraph& g, const AcceleratorSpec& spec, const Adjacency& adj)
        : g_(g), spec_(spec), adj_(adj), core_free_(spec.core_count(), 0) {
        const std::size_t n = g.nodes.size();
        plan_.core.resize(n);
        plan_.start.resize(n);
        plan_.end.resize(n);
        out_off_.resize(n);
        costs_.resize(n);
    }

    struct Trial {
        LayerCost cost;
        Residency residency;
        std::uint64_t start = 0;
        std::uint64_t end = 0;
    };

    Trial trial(std::size_t k, std::size_t core) const {
        const LayerNode& node = g_.nodes[k];
        const auto& preds = adj_.preds[k];
        Trial t;
        const bool fits = fits_scratchpad(node, spec_);
        t.residency.output_offchip = !fits;
        t.residency.input_offchip = preds.empty() || !fits;
        for (std::size_t p : preds) t.residency.input_offchip |= bool(out_off_[p]);
        std::uint64_t ready = core_free_[core];
        for (std::size_t p : preds) {
            ready = std::max(ready, plan_.end[p]);
            if (!t.residency.input_offchip && plan_.core[p] != core) {
                t.residency.incoming.push_back(
                    {output_bits(g_.nodes[p]), spec_.hop_count(plan_.core[p], core)});
            }
        }
        t.cost = layer_cost(node, core, spec_, t.residency);
        t.start = ready;
        t.end = ready + t.cost.latency;
        return t;
    }

    void commit(std::size_t k, std::size_t core, Trial t) {
        for (std::size_t p : adj_.preds[k]) {
            if (plan_.core[p] == core) continue;
            const bool via_noc = !t.residency.input_offchip;
            plan_.transfers.push_back({p, k, via_noc ? output_bits(g_.nodes[p]) : 0,
                                       spec_.hop_count(plan_.core[p], core)});
        }
        plan_.core[k] = core;
        plan_.start[k] = t.start;
        plan_.end[k] = t.end;
        out_off_[k] = t.residency.output_offchip || t.cost.spilled;
        core_free_[core] = t.end;
        plan_.makespan = std::max(plan_.makespan, t.end);
        costs_[k] = t.cost;
    }

    Schedule finish() && { return {std::move(plan_), std::move(costs_)}; }
    std::uint64_t makespan() const { return plan_.makespan; }

private:
    const LayerGraph& g_;
    const AcceleratorSpec& spec_;
    const Adjacency& adj_;
    std::vector<std::uint64_t> core_free_;
    std::vector<char> out_off_;
    AllocationPlan plan_;
    std::vector<LayerCost> costs_;
};

Schedule run_assignment(const LayerGraph& g, const AcceleratorSpec& spec, const Adjacency& adj,
                        std::span<const std::size_t> assignment) {
    require(assignment.size() == g.nodes.size(), ErrorCode::InvalidArgument,
            "assignment must name one core per layer");
    ListScheduler s(g, spec, adj);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        s.commit(k, assignment[k], s.trial(k, assignment[k]));
    }
    return std::move(s).finish();
}

std::vector<std::vector<std::size_t>> options_per_layer(const LayerGraph& g,
                                                        const AcceleratorSpec& spec) {
    std::vector<std::vector<std::size_t>> opts;
    opts.reserve(g.nodes.size());
    for (const auto& node : g.nodes) {
        opts.push_back(compatible_cores(node, spec));
        require(!opts.back().empty(), ErrorCode::InvalidArgument,
                "no compatible core for layer " + node.name);
    }
    return opts;
}

Schedule greedy(const LayerGraph& g, const AcceleratorSpec& spec, const Adjacency& adj,
                const std::vector<std::vector<std::size_t>>& opts) {
    ListScheduler s(g, spec, adj);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        std::size_t best_core = opts[k].front();
        auto best = s.trial(k, best_core);
        for (std::size_t i = 1; i < opts[k].size(); ++i) {
            auto t = s.trial(k, opts[k][i]);
            if (t.end < best.end) {
                best = std::move(t);
                best_core = opts[k][i];
            }
        }
        s.commit(k, best_core, std::move(best));
    }
    return std::move(s).finish();
}

Schedule genetic(const LayerGraph& g, const AcceleratorSpec& spec, const Adjacency& adj,
                 const std::vector<std::vector<std::size_t>>& opts, const GeneticAllocConfig& cfg,
                 Schedule seed_plan) {
    const std::size_t n = g.nodes.size();
    const std::size_t pop_size = std::max<std::size_t>(cfg.population, 2);
    Rng rng(cfg.seed);

    struct Member {
        std::vector<std::size_t> genes;
        std::uint64_t makespan;
    };
    auto score = [&](std::vector<std::size_t> genes) {
        const auto ms = run_assignment(g, spec, adj, genes).plan.makespan;
        return Member{std::move(genes), ms};
    };
    auto better = [](const Member& a, const Member& b) {
        return a.makespan != b.makespan ? a.makespan < b.makespan : a.genes < b.genes;
    };

    std::vector<Member> pop;
    pop.push_back({seed_plan.plan.core, seed_plan.plan.makespan});
    while (pop.size() < pop_size) {
        std::vector<std::size_t> genes(n);
        for (std::size_t k = 0; k < n; ++k) genes[k] = opts[k][uniform_index(rng, opts[k].size())];
        pop.push_back(score(std::move(genes)));
    }
    std::sort(pop.begin(), pop.end(), better);

    auto tournament = [&]() -> const Member& {
        const Member& a = pop[uniform_index(rng, pop.size())];
        const Member& b = pop[uniform_index(rng, pop.size())];
        return better(a, b) ? a : b;
    };
    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        std::vector<Member> next(pop.begin(), pop.begin() + 2);  // elites
        while (next.size() < pop_size) {
            const Member& pa = tournament();
            const Member& pb = tournament();
            std::vector<std::size_t> genes(n);
            for (std::size_t k = 0; k < n; ++k) {
                genes[k] = bernoulli(rng, 0.5) ? pa.genes[k] : pb.genes[k];
                if (bernoulli(rng, cfg.mutation_rate)) {
                    genes[k] = opts[k][uniform_index(rng, opts[k].size())];
                }
            }
            next.push_back(score(std::move(genes)));
        }
        std::sort(next.begin(), next.end(), better);
        pop = std::move(next);
    }
    if (pop.front().makespan >= seed_plan.plan.makespan) return seed_plan;
    return run_assignment(g, spec, adj, pop.front().genes);
}

}  // namespace

Schedule evaluate_assignment(const LayerGraph& graph, const AcceleratorSpec& spec,
                             std::span<const std::size_t> assignment) {
    const Adjacency adj(graph);
    return run_assignment(graph, spec, adj, assignment);
}

Schedule allocate(const LayerGraph& graph, const AcceleratorSpec& spec, AllocationMode mode,
                  const GeneticAllocConfig& genetic_cfg) {
    const Adjacency adj(graph);
    const auto opts = options_per_layer(graph, spec);
    Schedule s = greedy(graph, spec, adj, opts);
    if (mode == AllocationMode::Genetic && !graph.nodes.empty()) {
        s = genetic(graph, spec, adj, opts, genetic_cfg, std::move(s));
    }
    return s;
}

std::string check_plan(const LayerGraph& graph, const AllocationPlan& plan,
                       std::span<const LayerCost> costs) {
    const std::size_t n = graph.nodes.size();
    if (plan.core.size() != n || plan.start.size() != n || plan.end.size() != n ||
        costs.size() != n) {
        return "plan does not cover every layer";
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (plan.end[k] != plan.start[k] + costs[k].latency) {
            return "layer " + std::to_string(k) + " duration differs from its latency";
        }
    }
    for (const auto& [p, c] : graph.edges) {
        if (plan.start[c] < plan.end[p]) {
            return "layer " + std::to_string(c) + " starts before producer " + std::to_string(p) +
                   " ends";
        }
        if (plan.core[p] != plan.core[c]) {
            const bool recorded =
                std::any_of(plan.transfers.begin(), plan.transfers.end(),
                            [&](const Transfer& t) { return t.producer == p && t.consumer == c; });
            if (!recorded) {
                return "cross-core edge " + std::to_string(p) + "->" + std::to_string(c) +
                       " has no transfer record";
            }
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(plan.core[a], plan.start[a], plan.end[a], a) <
               std::tie(plan.core[b], plan.start[b], plan.end[b], b);
    });
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t a = order[i - 1], b = order[i];
        if (plan.core[a] == plan.core[b] && plan.start[b] < plan.end[a]) {
            return "layers " + std::to_string(a) + " and " + std::to_string(b) +
                   " overlap on core " + std::to_string(plan.core[a]);
        }
    }
    std::uint64_t ms = 0;
    for (std::size_t k = 0; k < n; ++k) ms = std::max(ms, plan.end[k]);
    if (ms != plan.makespan) return "makespan differs from the latest layer end";
    return {};
}

}  // namespace eenas
