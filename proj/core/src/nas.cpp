#include "eenas/nas.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "eenas/error.hpp"
#include "eenas/report_io.hpp"
#include "nas_json.hpp"

namespace eenas {

using detail::json;

const char* to_string(EvaluatorKind kind) {
    switch (kind) {
        case EvaluatorKind::Toy: return "toy";
        case EvaluatorKind::Oracle: return "oracle";
        case EvaluatorKind::External: return "external";
    }
    return "?";
}

const char* to_string(RankingMode mode) {
    return mode == RankingMode::Lexicographic ? "lexicographic" : "weighted";
}

EvaluatorKind parse_evaluator_kind(const std::string& name) {
    if (name == "toy") return EvaluatorKind::Toy;
    if (name == "oracle") return EvaluatorKind::Oracle;
    if (name == "external") return EvaluatorKind::External;
    fail(ErrorCode::Config, "unknown evaluator '" + name + "' (toy, oracle, external)");
}

RankingMode parse_ranking_mode(const std::string& name) {
    if (name == "lexicographic") return RankingMode::Lexicographic;
    if (name == "weighted") return RankingMode::WeightedSum;
    fail(ErrorCode::Config, "unknown ranking mode '" + name + "' (lexicographic, weighted)");
}

void NasConfig::validate() const {
    auto check = [](bool ok, const std::string& what) {
        require(ok, ErrorCode::Config, "nas config: " + what);
    };
    check(theta > 0.0, "theta must be positive");
    check(mu > 0.0 && mu <= 1.0, "mu must lie in (0, 1]");
    check(mutation_rate >= 0.0 && mutation_rate <= 1.0, "mutation rate must lie in [0, 1]");
    check(crossover_rate >= 0.0 && crossover_rate <= 1.0, "crossover rate must lie in [0, 1]");
    check(N >= 1, "N must be at least 1");
    check(init_population >= 1, "initial population must be at least 1");
    check(weight_acc >= 0.0 && weight_et >= 0.0, "ranking weights must be non-negative");
    check(ridge >= 0.0, "ridge strength must be non-negative");
    check(attempt_factor >= 1, "attempt factor must be at least 1");
}

// ---------------------------------------------------------------------------
// Evaluators
// ---------------------------------------------------------------------------

EvaluationReport OracleEvaluator::evaluate(const EennArchitecture& arch, const Chromosome&) {
    return synthetic_oracle(arch, config_, seed_);
}

EvaluationReport ToyEvaluator::evaluate(const EennArchitecture& arch, const Chromosome& chrom) {
    TrainingConfig cfg = config_;
    cfg.seed = mix_seed(config_.seed ^ chrom.hash());
    return train_toy(arch, data_, cfg);
}

std::string ExternalEvaluator::path_for(const Chromosome& chrom) const {
    return (std::filesystem::path(dir_) / (chrom.hash_hex() + ".json")).string();
}

EvaluationReport ExternalEvaluator::evaluate(const EennArchitecture& arch,
                                             const Chromosome& chrom) {
    require(std::filesystem::exists(path_for(chrom)), ErrorCode::Evaluation,
            "no external evaluation for " + chrom.hash_hex() + " (expected " + path_for(chrom) + ")");
    EvaluationReport r = load_external_report(path_for(chrom), chrom.hash_hex()).report;
    require(r.m() == arch.m(), ErrorCode::Evaluation,
            path_for(chrom) + ": report has " + std::to_string(r.m()) + " exits, architecture has " +
                std::to_string(arch.m()));
    return r;
}

// ---------------------------------------------------------------------------
// Selection, variation, filtering
// ---------------------------------------------------------------------------

Selection select_parents(std::vector<Candidate> population, std::size_t N,
                         const NasConfig& config) {
    Selection sel;
    sel.undersized = population.size() < 2 * N;
    auto hash = [](const Candidate& c) { return c.chromosome.hash(); };

    if (config.ranking == RankingMode::WeightedSum) {
        if (population.empty()) return sel;
        double amin = population.front().acc, amax = amin;
        double emin = std::log(population.front().et), emax = emin;
        for (const auto& c : population) {
            amin = std::min(amin, c.acc);
            amax = std::max(amax, c.acc);
            emin = std::min(emin, std::log(c.et));
            emax = std::max(emax, std::log(c.et));
        }
        auto score = [&](const Candidate& c) {
            const double a = amax > amin ? (c.acc - amin) / (amax - amin) : 0.0;
            const double e = emax > emin ? (std::log(c.et) - emin) / (emax - emin) : 0.0;
            return config.weight_acc * a - config.weight_et * e;
        };
        std::sort(population.begin(), population.end(), [&](const Candidate& x, const Candidate& y) {
            const double sx = score(x), sy = score(y);
            return sx != sy ? sx > sy : hash(x) < hash(y);
        });
        population.resize(std::min(N, population.size()));
        sel.chosen = std::move(population);
        return sel;
    }

    std::sort(population.begin(), population.end(), [&](const Candidate& x, const Candidate& y) {
        return x.acc != y.acc ? x.acc > y.acc : hash(x) < hash(y);
    });
    population.resize(std::min(2 * N, population.size()));
    std::sort(population.begin(), population.end(), [&](const Candidate& x, const Candidate& y) {
        return x.et != y.et ? x.et < y.et : hash(x) < hash(y);
    });
    population.resize(std::min(N, population.size()));
    sel.chosen = std::move(population);
    return sel;
}

Selection select_parents(const std::vector<Chromosome>& population,
                         const std::optional<Predictors>& predictors, const FeatureMap& features,
                         std::size_t N, const NasConfig& config) {
    require(predictors.has_value(), ErrorCode::InvalidArgument,
            "parent selection needs trained predictors");
    std::vector<Candidate> cands;
    for (const auto& c : population) {
        const auto f = features(c);
        cands.push_back({c, predictors->acc.predict(f), predictors->et.predict(f)});
    }
    return select_parents(std::move(cands), N, config);
}

namespace {

// Draw a value of `options` categories different from `current` when possible.
int resample(Rng& rng, int current, std::size_t options) {
    if (options <= 1) return 0;
    const auto v = static_cast<int>(uniform_index(rng, options - 1));
    return v >= current ? v + 1 : v;
}

}  // namespace

GaOutcome ga_generation(const std::vector<Chromosome>& parents, const SearchSpace& space,
                        const NasConfig& config, Rng& rng, const Admissible& admissible) {
    GaOutcome out;
    if (parents.empty()) return out;
    const std::size_t H = space.H();
    const auto p = space.p(), q = space.q();

    std::unordered_set<std::uint64_t> seen;
    for (const auto& c : parents) seen.insert(c.hash());
    std::unordered_set<std::uint64_t> rejected;

    const std::size_t children = 2 * parents.size();
    for (std::size_t n = 0; n < children; ++n) {
        const std::size_t ia = uniform_index(rng, parents.size());
        std::size_t ib = ia;
        if (parents.size() >= 2) {
            ib = uniform_index(rng, parents.size() - 1);
            if (ib >= ia) ++ib;
        }
        const Chromosome& a = parents[ia];
        const Chromosome& b = parents[ib];
        Chromosome child = a;
        if (parents.size() >= 2 && bernoulli(rng, config.crossover_rate)) {
            for (std::size_t h = 0; h < H; ++h) {
                if (bernoulli(rng, 0.5)) {
                    child.set_present(h, b.present(h));
                    child.set_head(h, b.head(h));
                    child.set_quant(h, b.quant(h));
                }
            }
            if (bernoulli(rng, 0.5)) {
                child.set_final_head(b.final_head());
                child.set_final_quant(b.final_quant());
            }
        }
        const double r = config.mutation_rate;
        for (std::size_t h = 0; h < H; ++h) {
            if (bernoulli(rng, r)) child.set_present(h, !child.present(h));
            if (bernoulli(rng, r)) child.set_head(h, resample(rng, child.head(h), p));
            if (bernoulli(rng, r)) child.set_quant(h, resample(rng, child.quant(h), q));
        }
        if (bernoulli(rng, r)) child.set_final_head(resample(rng, child.final_head(), p));
        if (bernoulli(rng, r)) child.set_final_quant(resample(rng, child.final_quant(), q));

        child = child.canonical();
        const std::uint64_t hsh = child.hash();
        if (seen.count(hsh) || rejected.count(hsh)) continue;
        if (!admissible(child)) {
            rejected.insert(hsh);
            out.rejected_theta.push_back(std::move(child));
            continue;
        }
        seen.insert(hsh);
        out.offspring.push_back(std::move(child));
    }
    return out;
}

std::vector<Chromosome> init_population(const NasConfig& config, const SearchSpace& space,
                                        Rng& rng, const Admissible& admissible, std::size_t count,
                                        const std::unordered_set<std::uint64_t>& exclude) {
    std::vector<Chromosome> out;
    std::unordered_set<std::uint64_t> seen(exclude.begin(), exclude.end());
    const std::size_t budget = config.attempt_factor * std::max<std::size_t>(count, 1);
    for (std::size_t attempt = 0; attempt < budget && out.size() < count; ++attempt) {
        Chromosome c = sample_architecture(space, rng);
        if (seen.count(c.hash())) continue;
        seen.insert(c.hash());
        if (!admissible(c)) continue;
        out.push_back(std::move(c));
    }
    require(out.size() == count, ErrorCode::Constraint,
            "found only " + std::to_string(out.size()) + " of " + std::to_string(count) +
                " distinct architectures within the overhead cap after " + std::to_string(budget) +
                " attempts");
    return out;
}

std::vector<EvaluatedArch> filter_exit_ratio(const std::vector<EvaluatedArch>& population,
                                             double mu) {
    std::vector<EvaluatedArch> out;
    for (const auto& e : population) {
        if (e.report.last_exit_ratio() <= mu) out.push_back(e);
    }
    return out;
}

std::vector<LabeledRecord> pareto_front(const std::vector<LabeledRecord>& records) {
    std::vector<const LabeledRecord*> order;
    for (const auto& r : records) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const LabeledRecord* a, const LabeledRecord* b) {
        if (a->acc_avg != b->acc_avg) return a->acc_avg > b->acc_avg;
        if (a->et_avg != b->et_avg) return a->et_avg < b->et_avg;
        return a->chromosome.hash() < b->chromosome.hash();
    });
    std::vector<LabeledRecord> front;
    double best = std::numeric_limits<double>::infinity();  // min ET at strictly higher accuracy
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && order[j]->acc_avg == order[i]->acc_avg) ++j;
        const double group_min = order[i]->et_avg;
        if (group_min < best) {
            for (std::size_t k = i; k < j && order[k]->et_avg == group_min; ++k) {
                front.push_back(*order[k]);
            }
        }
        best = std::min(best, group_min);
        i = j;
    }
    std::sort(front.begin(), front.end(), [](const LabeledRecord& a, const LabeledRecord& b) {
        if (a.et_avg != b.et_avg) return a.et_avg < b.et_avg;
        return a.chromosome.hash() < b.chromosome.hash();
    });
    return front;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

bool SearchState::in_population(std::uint64_t hash) const {
    return std::any_of(population.begin(), population.end(),
                       [hash](const Chromosome& c) { return c.hash() == hash; });
}

NasEngine::NasEngine(SearchSpace space, AcceleratorSpec accel, NasConfig config,
                     Evaluator& evaluator)
    : space_(std::move(space)),
      accel_(std::move(accel)),
      config_(std::move(config)),
      evaluator_(evaluator),
      features_(space_) {
    space_.validate();
    accel_.validate();
    config_.validate();
}

const ArchCost& NasEngine::cost(const Chromosome& chrom) {
    const std::uint64_t h = chrom.hash();
    if (auto it = costs_.find(h); it != costs_.end()) return it->second;
    const EennArchitecture arch = decode(chrom, space_);
    const LayerGraph g = expand_layers(arch);
    const HwCostReport r = cost_report(g, accel_);
    ArchCost c;
    c.et = r.et;
    c.overhead = r.overhead;
    c.max_overhead = r.max_overhead();
    const LayerGraph sg = expand_layers(static_counterpart(arch));
    c.static_et = cost_report(sg, accel_).et.back();
    c.static_macs = cumulative_macs(sg, 1);
    for (std::size_t i = 1; i <= g.m(); ++i) c.cumulative_macs.push_back(cumulative_macs(g, i));
    return costs_.emplace(h, std::move(c)).first->second;
}

bool NasEngine::admissible(const Chromosome& chrom) {
    if (std::isinf(config_.theta)) return true;
    return cost(chrom).max_overhead <= config_.theta;
}

namespace {

json chrom_event(const char* kind, int iteration, const Chromosome& c) {
    return {{"event", kind}, {"iteration", iteration}, {"hash", c.hash_hex()}, {"genes", c.genes()}};
}

json hash_list(const std::vector<Chromosome>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back(c.hash_hex());
    return a;
}

}  // namespace

std::string NasEngine::header_line() const {
    json quant = space_.quant_bits;
    json heads = json::array();
    for (const auto& h : space_.head_options) {
        heads.push_back({{"pooled", h.pooled_size},
                         {"layers", h.linear_layers},
                         {"hidden", h.hidden_width}});
    }
    json j = {{"event", "run"},
              {"config", detail::config_to_json(config_)},
              {"space",
               {{"backbone", space_.backbone->name},
                {"H", space_.H()},
                {"heads", heads},
                {"quant_bits", quant},
                {"backbone_bits", space_.backbone_bits}}},
              {"accelerator", accel_.name},
              {"evaluator", evaluator_.name()}};
    return j.dump();
}

SearchState NasEngine::initialize() {
    history_ = History{};
    history_.emit(header_line());
    SearchState st;
    st.rng = Rng(config_.seed);
    const Admissible ok = [this](const Chromosome& c) {
        if (admissible(c)) return true;
        json e = chrom_event("filtered_theta", 0, c);
        e["max_overhead"] = cost(c).max_overhead;
        history_.emit(e.dump());
        return false;
    };
    st.population = init_population(config_, space_, st.rng, ok, config_.init_population);
    for (const auto& c : st.population) history_.emit(chrom_event("sampled", 0, c).dump());
    summarize(st, 0, 0);
    return st;
}

void NasEngine::evaluate_population(SearchState& st) {
    std::vector<Chromosome> todo;
    for (const auto& c : st.population) {
        if (!st.evaluated.count(c.hash())) todo.push_back(c);
    }
    std::sort(todo.begin(), todo.end(),
              [](const Chromosome& a, const Chromosome& b) { return a.hash() < b.hash(); });

    std::size_t rejected = 0;
    for (const auto& c : todo) {
        EvalMemo memo;
        memo.iteration = st.k;
        json ev = chrom_event("evaluated", st.k, c);
        try {
            const EennArchitecture arch = decode(c, space_);
            const EvaluationReport rep = evaluator_.evaluate(arch, c);
            require(rep.m() == arch.m(), ErrorCode::Evaluation,
                    "evaluator returned the wrong number of exits");
            memo.ok = true;
            memo.acc_avg = rep.acc_avg;
            memo.er_last = rep.last_exit_ratio();
            memo.et_avg = et_avg(cost(c).et, rep.er);
            json acc = json::array();
            for (const auto& a : rep.acc) acc.push_back(a ? json(*a) : json(nullptr));
            ev["acc"] = acc;
            ev["er"] = rep.er;
            ev["acc_avg"] = memo.acc_avg;
            ev["et_avg"] = memo.et_avg;
            ev["er_last"] = memo.er_last;
            ev["et"] = cost(c).et;
        } catch (const Error& e) {
            memo.ok = false;
            memo.error = e.what();
            ev["error"] = memo.error;
        }
        history_.emit(ev.dump());
        if (memo.ok) {
            if (memo.er_last <= config_.mu) {
                st.labeled.upsert({c, memo.acc_avg, memo.et_avg, memo.er_last, st.k});
            } else {
                ++rejected;
                json f = chrom_event("filtered_mu", st.k, c);
                f["er_last"] = memo.er_last;
                history_.emit(f.dump());
            }
        }
        st.evaluated.emplace(c.hash(), std::move(memo));
    }
    st.stats.push_back({});
    st.stats.back().evaluated = todo.size();
    st.stats.back().rejected_mu = rejected;
}

std::optional<Predictors> NasEngine::fit_predictors(const LabeledSet& data) const {
    if (data.size() < 2) return std::nullopt;
    return Predictors{fit(data, features_, TargetKind::Accuracy, config_.ridge),
                      fit(data, features_, TargetKind::Et, config_.ridge)};
}

void NasEngine::iterate(SearchState& st) {
    require(!st.finished, ErrorCode::InvalidArgument, "search already finished");
    const int k = st.k;
    evaluate_population(st);
    const std::size_t new_evals = st.stats.back().evaluated;
    const std::size_t rejected = st.stats.back().rejected_mu;
    st.stats.pop_back();

    std::unordered_set<std::uint64_t> in_s;
    for (const auto& c : st.population) in_s.insert(c.hash());

    const Admissible ok = [&](const Chromosome& c) {
        if (admissible(c)) return true;
        json e = chrom_event("filtered_theta", k, c);
        e["max_overhead"] = cost(c).max_overhead;
        history_.emit(e.dump());
        return false;
    };

    const auto predictors = fit_predictors(st.labeled);
    std::vector<Chromosome> additions;
    if (!predictors) {
        // Too few labels to fit predictors: widen S with fresh random samples.
        const auto space_size = search_space_size(space_.H(), space_.p(), space_.q());
        const std::size_t want =
            std::min<std::uint64_t>(config_.N, space_size > in_s.size() ? space_size - in_s.size() : 0);
        try {
            additions = init_population(config_, space_, st.rng, ok, want, in_s);
        } catch (const Error&) {
            additions.clear();
        }
        for (const auto& c : additions) history_.emit(chrom_event("sampled", k, c).dump());
    } else {
        auto candidate = [&](const Chromosome& c) {
            if (const LabeledRecord* r = st.labeled.find(c.hash())) {
                return Candidate{c, r->acc_avg, r->et_avg};
            }
            const auto f = features_(c);
            return Candidate{c, predictors->acc.predict(f), predictors->et.predict(f)};
        };
        std::vector<Chromosome> pop;
        for (const auto& r : st.labeled.records()) pop.push_back(r.chromosome);

        std::vector<Chromosome> all;
        std::unordered_set<std::uint64_t> all_set;
        for (std::size_t g = 0; g < config_.generations; ++g) {
            std::vector<Candidate> cands;
            for (const auto& c : pop) cands.push_back(candidate(c));
            const Selection sel = select_parents(std::move(cands), config_.N, config_);
            std::vector<Chromosome> parents;
            for (const auto& c : sel.chosen) parents.push_back(c.chromosome);
            json se = {{"event", "selected"},
                       {"iteration", k},
                       {"generation", g},
                       {"stage", "parents"},
                       {"undersized", sel.undersized},
                       {"hashes", hash_list(parents)}};
            history_.emit(se.dump());

            GaOutcome out = ga_generation(parents, space_, config_, st.rng, ok);
            json oe = {{"event", "offspring"},
                       {"iteration", k},
                       {"generation", g},
                       {"hashes", hash_list(out.offspring)},
                       {"rejected_theta", out.rejected_theta.size()}};
            history_.emit(oe.dump());
            for (const auto& c : out.offspring) {
                if (!in_s.count(c.hash()) && all_set.insert(c.hash()).second) all.push_back(c);
            }
            pop = out.offspring.empty() ? parents : out.offspring;
        }
        std::vector<Candidate> cands;
        for (const auto& c : all) cands.push_back(candidate(c));
        const Selection top = select_parents(std::move(cands), config_.N, config_);
        for (const auto& c : top.chosen) additions.push_back(c.chromosome);
        json te = {{"event", "selected"},
                   {"iteration", k},
                   {"stage", "top"},
                   {"undersized", top.undersized},
                   {"hashes", hash_list(additions)}};
        history_.emit(te.dump());
    }
    for (auto& c : additions) st.population.push_back(std::move(c));
    st.k = k + 1;
    summarize(st, new_evals, rejected);
}

void NasEngine::finalize(SearchState& st) {
    require(!st.finished, ErrorCode::InvalidArgument, "search already finished");
    evaluate_population(st);
    const std::size_t new_evals = st.stats.back().evaluated;
    const std::size_t rejected = st.stats.back().rejected_mu;
    st.stats.pop_back();
    st.finished = true;
    summarize(st, new_evals, rejected);
}

void NasEngine::summarize(SearchState& st, std::size_t new_evals, std::size_t rejected) {
    IterationStats s;
    s.iteration = st.k;
    s.population = st.population.size();
    s.labeled = st.labeled.size();
    s.evaluated = new_evals;
    s.rejected_mu = rejected;
    if (!st.labeled.empty()) {
        const auto& recs = st.labeled.records();
        s.acc_min = s.et_min = std::numeric_limits<double>::infinity();
        s.acc_max = s.et_max = -std::numeric_limits<double>::infinity();
        for (const auto& r : recs) {
            s.acc_min = std::min(s.acc_min, r.acc_avg);
            s.acc_max = std::max(s.acc_max, r.acc_avg);
            s.et_min = std::min(s.et_min, r.et_avg);
            s.et_max = std::max(s.et_max, r.et_avg);
            s.acc_mean += r.acc_avg;
            s.et_mean += r.et_avg;
        }
        s.acc_mean /= double(recs.size());
        s.et_mean /= double(recs.size());
        s.front_size = pareto_front(recs).size();
    }
    st.stats.push_back(s);
    json j = {{"event", "iteration_summary"},
              {"iteration", st.k},
              {"final", st.finished},
              {"stats", detail::stats_to_json(s)},
              {"state", detail::state_to_json(st)}};
    history_.emit(j.dump());
}

SearchState NasEngine::run() {
    SearchState st = initialize();
    while (static_cast<std::size_t>(st.k) < config_.iterations) iterate(st);
    finalize(st);
    return st;
}

SearchState NasEngine::resume(const History& previous) {
    const auto& lines = previous.lines();
    require(!lines.empty(), ErrorCode::InvalidArgument, "cannot resume from an empty history");
    require(lines.front() == header_line(), ErrorCode::Config,
            "history was produced with a different configuration");
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        json e;
        try {
            e = json::parse(lines[i]);
        } catch (const json::exception&) {
            break;  // torn final line
        }
        if (e.value("event", "") == "iteration_summary") last = i;
    }
    if (!last) return run();

    history_ = History{};
    for (std::size_t i = 0; i <= *last; ++i) history_.emit(lines[i]);
    SearchState st = detail::state_from_json(json::parse(lines[*last]).at("state"));
    if (st.finished) return st;
    while (static_cast<std::size_t>(st.k) < config_.iterations) iterate(st);
    finalize(st);
    return st;
}

}  // namespace eenas
