#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "eenas/error.hpp"
#include "eenas/nas.hpp"
#include "nas_json.hpp"

namespace eenas {

namespace detail {

std::uint64_t parse_hash(const std::string& hex) {
    require(hex.size() == 16, ErrorCode::Parse, "malformed architecture hash '" + hex + "'");
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(hex, &used, 16);
    require(used == hex.size(), ErrorCode::Parse, "malformed architecture hash '" + hex + "'");
    return v;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return s;
}

json stats_to_json(const IterationStats& s) {
    return {{"iteration", s.iteration}, {"population", s.population}, {"labeled", s.labeled},
            {"evaluated", s.evaluated}, {"rejected_mu", s.rejected_mu},
            {"acc_min", s.acc_min},     {"acc_mean", s.acc_mean},     {"acc_max", s.acc_max},
            {"et_min", s.et_min},       {"et_mean", s.et_mean},       {"et_max", s.et_max},
            {"front_size", s.front_size}};
}

IterationStats stats_from_json(const json& j) {
    IterationStats s;
    s.iteration = j.at("iteration").get<int>();
    s.population = j.at("population").get<std::size_t>();
    s.labeled = j.at("labeled").get<std::size_t>();
    s.evaluated = j.at("evaluated").get<std::size_t>();
    s.rejected_mu = j.at("rejected_mu").get<std::size_t>();
    s.acc_min = j.at("acc_min").get<double>();
    s.acc_mean = j.at("acc_mean").get<double>();
    s.acc_max = j.at("acc_max").get<double>();
    s.et_min = j.at("et_min").get<double>();
    s.et_mean = j.at("et_mean").get<double>();
    s.et_max = j.at("et_max").get<double>();
    s.front_size = j.at("front_size").get<std::size_t>();
    return s;
}

json state_to_json(const SearchState& st) {
    json pop = json::array();
    for (const auto& c : st.population) pop.push_back(c.genes());
    json labeled = json::array();
    for (const auto& r : st.labeled.records()) {
        labeled.push_back({{"genes", r.chromosome.genes()},
                           {"acc_avg", r.acc_avg},
                           {"et_avg", r.et_avg},
                           {"er_last", r.er_last},
                           {"iteration", r.iteration}});
    }
    json evaluated = json::array();
    for (const auto& [h, m] : st.evaluated) {
        json e = {{"hash", hash_hex(h)}, {"ok", m.ok}, {"iteration", m.iteration}};
        if (m.ok) {
            e["acc_avg"] = m.acc_avg;
            e["et_avg"] = m.et_avg;
            e["er_last"] = m.er_last;
        } else {
            e["error"] = m.error;
        }
        evaluated.push_back(e);
    }
    json stats = json::array();
    for (const auto& s : st.stats) stats.push_back(stats_to_json(s));
    return {{"k", st.k},
            {"finished", st.finished},
            {"population", pop},
            {"labeled", labeled},
            {"evaluated", evaluated},
            {"stats", stats},
            {"rng", serialize_rng(st.rng)}};
}

SearchState state_from_json(const json& j) {
    SearchState st;
    st.k = j.at("k").get<int>();
    st.finished = j.at("finished").get<bool>();
    for (const auto& g : j.at("population")) {
        st.population.emplace_back(g.get<std::vector<int>>());
    }
    for (const auto& r : j.at("labeled")) {
        LabeledRecord rec;
        rec.chromosome = Chromosome(r.at("genes").get<std::vector<int>>());
        rec.acc_avg = r.at("acc_avg").get<double>();
        rec.et_avg = r.at("et_avg").get<double>();
        rec.er_last = r.at("er_last").get<double>();
        rec.iteration = r.at("iteration").get<int>();
        st.labeled.upsert(std::move(rec));
    }
    for (const auto& e : j.at("evaluated")) {
        EvalMemo m;
        m.ok = e.at("ok").get<bool>();
        m.iteration = e.at("iteration").get<int>();
        if (m.ok) {
            m.acc_avg = e.at("acc_avg").get<double>();
            m.et_avg = e.at("et_avg").get<double>();
            m.er_last = e.at("er_last").get<double>();
        } else {
            m.error = e.at("error").get<std::string>();
        }
        st.evaluated.emplace(parse_hash(e.at("hash").get<std::string>()), std::move(m));
    }
    for (const auto& s : j.at("stats")) st.stats.push_back(stats_from_json(s));
    st.rng = deserialize_rng(j.at("rng").get<std::string>());
    return st;
}

json config_to_json(const NasConfig& c) {
    return {{"init_population", c.init_population},
            {"N", c.N},
            {"generations", c.generations},
            {"iterations", c.iterations},
            {"theta", std::isinf(c.theta) ? json("inf") : json(c.theta)},
            {"mu", c.mu},
            {"mutation_rate", c.mutation_rate},
            {"crossover_rate", c.crossover_rate},
            {"seed", c.seed},
            {"evaluator", to_string(c.evaluator)},
            {"ranking", to_string(c.ranking)},
            {"weight_acc", c.weight_acc},
            {"weight_et", c.weight_et},
            {"ridge", c.ridge},
            {"attempt_factor", c.attempt_factor}};
}

}  // namespace detail

using detail::json;

std::string History::text() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
}

History History::parse(const std::string& text) {
    History h;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        h.emit(line);
    }
    return h;
}

namespace {

std::vector<json> parse_events(const History& history) {
    std::vector<json> out;
    std::size_t n = 0;
    for (const auto& line : history.lines()) {
        ++n;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            fail(ErrorCode::Parse, "history line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::vector<std::uint64_t> hashes_of(const json& genes_list) {
    std::vector<std::uint64_t> out;
    for (const auto& g : genes_list) out.push_back(Chromosome(g.get<std::vector<int>>()).hash());
    return out;
}

}  // namespace

HistorySnapshots history_snapshots(const History& history) {
    HistorySnapshots s;
    for (const auto& e : parse_events(history)) {
        if (e.value("event", "") != "iteration_summary") continue;
        const json& st = e.at("state");
        s.population.push_back(hashes_of(st.at("population")));
        std::vector<std::uint64_t> lab;
        for (const auto& r : st.at("labeled")) {
            lab.push_back(Chromosome(r.at("genes").get<std::vector<int>>()).hash());
        }
        s.labeled.push_back(std::move(lab));
    }
    return s;
}

LabeledSet labeled_from_history(const History& history) {
    const auto events = parse_events(history);
    for (auto it = events.rbegin(); it != events.rend(); ++it) {
        if (it->value("event", "") == "iteration_summary") {
            return detail::state_from_json(it->at("state")).labeled;
        }
    }
    fail(ErrorCode::InvalidArgument, "history has no iteration summary");
}

AuditResult audit_history(const History& history, const SearchSpace& space,
                          const AcceleratorSpec& accel, double theta, double mu) {
    AuditResult res;
    const auto events = parse_events(history);
    std::map<std::uint64_t, double> er_last;  // successful evaluations
    std::set<std::uint64_t> evaluated;
    std::set<std::uint64_t> admitted;  // evaluated with ER_m <= mu
    std::map<std::uint64_t, bool> theta_ok;
    std::set<std::uint64_t> prev_pop, prev_lab;
    bool have_prev = false;

    auto note = [&](const std::string& msg) {
        if (res.messages.size() < 50) res.messages.push_back(msg);
    };

    for (const auto& e : events) {
        const std::string kind = e.value("event", "");
        if (kind == "evaluated") {
            const std::uint64_t h = detail::parse_hash(e.at("hash").get<std::string>());
            if (!evaluated.insert(h).second) {
                ++res.duplicate_evaluations;
                note("architecture " + e.at("hash").get<std::string>() + " evaluated twice");
            }
            if (e.contains("er_last")) {
                const double er = e.at("er_last").get<double>();
                er_last[h] = er;
                if (er <= mu) admitted.insert(h);
            }
        } else if (kind == "iteration_summary") {
            ++res.iterations;
            const json& st = e.at("state");
            std::set<std::uint64_t> pop, lab;
            for (const auto& g : st.at("population")) {
                const Chromosome c(g.get<std::vector<int>>());
                const std::uint64_t h = c.hash();
                pop.insert(h);
                auto it = theta_ok.find(h);
                if (it == theta_ok.end()) {
                    const auto report = cost_report(decode(c, space), accel);
                    it = theta_ok.emplace(h, report.max_overhead() <= theta).first;
                    if (!it->second) {
                        ++res.theta_violations;
                        note("population member " + c.hash_hex() + " has overhead " +
                             std::to_string(report.max_overhead()));
                    }
                }
            }
            for (const auto& r : st.at("labeled")) {
                const Chromosome c(r.at("genes").get<std::vector<int>>());
                const std::uint64_t h = c.hash();
                lab.insert(h);
                const auto it = er_last.find(h);
                if (it == er_last.end() || !(it->second <= mu)) {
                    ++res.mu_violations;
                    note("labeled member " + c.hash_hex() + " lacks an admissible evaluation");
                }
            }
            if (have_prev) {
                if (!std::includes(pop.begin(), pop.end(), prev_pop.begin(), prev_pop.end())) {
                    ++res.population_shrinks;
                    note("population of summary " + std::to_string(res.iterations) +
                         " does not contain its predecessor");
                }
                if (!std::includes(lab.begin(), lab.end(), prev_lab.begin(), prev_lab.end())) {
                    ++res.labeled_mismatches;
                    note("labeled set shrank at summary " + std::to_string(res.iterations));
                }
            }
            if (lab != admitted) {
                ++res.labeled_mismatches;
                note("labeled set at summary " + std::to_string(res.iterations) +
                     " differs from the union of admitted evaluations");
            }
            prev_pop = std::move(pop);
            prev_lab = std::move(lab);
            have_prev = true;
        }
    }
    return res;
}

}  // namespace eenas
