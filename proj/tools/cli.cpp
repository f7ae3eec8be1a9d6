#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "eenas/backbone_io.hpp"
#include "eenas/error.hpp"
#include "eenas/report_io.hpp"
#include "json.hpp"

namespace eenas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so typos in config files do not pass silently.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), ErrorCode::Config, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return key == a; });
        require(known, ErrorCode::Config, where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& into, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::Config, where + ": field '" + key + "' has the wrong type");
    }
}

std::string resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string full(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_out(const RunConfig& cfg, const std::string& name, const std::string& contents) {
    write_file_atomic((fs::path(cfg.out_dir) / name).string(), contents);
}

}  // namespace

RunConfig default_run_config() {
    RunConfig c;
    c.backbone = std::make_shared<const BackboneSpec>(mobilenetv2_cifar10());
    c.accelerator = default_accelerator();
    c.space = default_search_space(c.backbone);
    return c;
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
    config.seed = seed;
    config.nas.seed = seed;
    config.training.seed = seed;
}

RunConfig load_run_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Config, path + ": " + e.what());
    } catch (const Error& e) {
        fail(ErrorCode::Config, e.what());
    }
    check_keys(j,
               {"backbone", "accelerator", "space", "nas", "evaluator", "oracle", "training",
                "toy_data", "external_dir", "out", "seed"},
               path);
    const fs::path base = fs::path(path).parent_path();
    RunConfig c = default_run_config();

    if (j.contains("backbone")) {
        std::string p;
        read_opt(j, "backbone", p, path);
        try {
            c.backbone = std::make_shared<const BackboneSpec>(load_backbone(resolve(base, p)));
        } catch (const Error& e) {
            fail(ErrorCode::Config, e.what());
        }
    }
    if (j.contains("accelerator")) {
        std::string p;
        read_opt(j, "accelerator", p, path);
        try {
            c.accelerator = load_accelerator(resolve(base, p));
        } catch (const Error& e) {
            fail(ErrorCode::Config, e.what());
        }
    }

    int pooled = 4;
    c.space = default_search_space(c.backbone, pooled);
    if (j.contains("space")) {
        const json& s = j["space"];
        const std::string where = path + ": space";
        check_keys(s, {"pooled", "heads", "quant_bits", "backbone_bits"}, where);
        read_opt(s, "pooled", pooled, where);
        c.space = default_search_space(c.backbone, pooled);
        if (s.contains("heads")) {
            c.space.head_options.clear();
            for (const auto& h : s["heads"]) {
                check_keys(h, {"layers", "hidden"}, where + ".heads");
                ExitHeadSpec head;
                head.pooled_size = pooled;
                read_opt(h, "layers", head.linear_layers, where);
                read_opt(h, "hidden", head.hidden_width, where);
                c.space.head_options.push_back(head);
            }
        }
        read_opt(s, "quant_bits", c.space.quant_bits, where);
        read_opt(s, "backbone_bits", c.space.backbone_bits, where);
    }

    if (j.contains("nas")) {
        const json& n = j["nas"];
        const std::string where = path + ": nas";
        check_keys(n,
                   {"init_population", "N", "generations", "iterations", "theta", "mu",
                    "mutation_rate", "crossover_rate", "ranking", "weight_acc", "weight_et", "ridge",
                    "attempt_factor"},
                   where);
        read_opt(n, "init_population", c.nas.init_population, where);
        read_opt(n, "N", c.nas.N, where);
        read_opt(n, "generations", c.nas.generations, where);
        read_opt(n, "iterations", c.nas.iterations, where);
        if (n.contains("theta") && n["theta"].is_string()) {
            require(n["theta"] == "inf", ErrorCode::Config, where + ": theta must be a number or \"inf\"");
            c.nas.theta = kNoOverheadCap;
        } else {
            read_opt(n, "theta", c.nas.theta, where);
        }
        read_opt(n, "mu", c.nas.mu, where);
        read_opt(n, "mutation_rate", c.nas.mutation_rate, where);
        read_opt(n, "crossover_rate", c.nas.crossover_rate, where);
        if (n.contains("ranking")) {
            std::string r;
            read_opt(n, "ranking", r, where);
            c.nas.ranking = parse_ranking_mode(r);
        }
        read_opt(n, "weight_acc", c.nas.weight_acc, where);
        read_opt(n, "weight_et", c.nas.weight_et, where);
        read_opt(n, "ridge", c.nas.ridge, where);
        read_opt(n, "attempt_factor", c.nas.attempt_factor, where);
    }
    if (j.contains("evaluator")) {
        std::string e;
        read_opt(j, "evaluator", e, path);
        c.nas.evaluator = parse_evaluator_kind(e);
    }
    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        const std::string where = path + ": oracle";
        check_keys(o,
                   {"confidence_efficiency", "capacity_exponent", "depth_bonus", "accuracy_slope",
                    "jitter", "tau", "nominal_samples"},
                   where);
        read_opt(o, "confidence_efficiency", c.oracle.confidence_efficiency, where);
        read_opt(o, "capacity_exponent", c.oracle.capacity_exponent, where);
        read_opt(o, "depth_bonus", c.oracle.depth_bonus, where);
        read_opt(o, "accuracy_slope", c.oracle.accuracy_slope, where);
        read_opt(o, "jitter", c.oracle.jitter, where);
        read_opt(o, "tau", c.oracle.tau, where);
        read_opt(o, "nominal_samples", c.oracle.nominal_samples, where);
    }
    if (j.contains("training")) {
        const json& t = j["training"];
        const std::string where = path + ": training";
        check_keys(t,
                   {"epochs", "learning_rate", "momentum", "weight_decay", "batch_size", "tau",
                    "exit_taus", "lambda", "calibration_epoch", "calibration_samples"},
                   where);
        read_opt(t, "epochs", c.training.epochs, where);
        read_opt(t, "learning_rate", c.training.learning_rate, where);
        read_opt(t, "momentum", c.training.momentum, where);
        read_opt(t, "weight_decay", c.training.weight_decay, where);
        read_opt(t, "batch_size", c.training.batch_size, where);
        read_opt(t, "tau", c.training.tau, where);
        read_opt(t, "exit_taus", c.training.exit_taus, where);
        read_opt(t, "lambda", c.training.lambda, where);
        read_opt(t, "calibration_epoch", c.training.calibration_epoch, where);
        read_opt(t, "calibration_samples", c.training.calibration_samples, where);
    }
    if (j.contains("toy_data")) {
        const json& t = j["toy_data"];
        const std::string where = path + ": toy_data";
        check_keys(t,
                   {"samples", "center_radius", "easy_fraction", "easy_noise", "hard_noise", "seed"},
                   where);
        read_opt(t, "samples", c.toy_data.samples, where);
        read_opt(t, "center_radius", c.toy_data.center_radius, where);
        read_opt(t, "easy_fraction", c.toy_data.easy_fraction, where);
        read_opt(t, "easy_noise", c.toy_data.easy_noise, where);
        read_opt(t, "hard_noise", c.toy_data.hard_noise, where);
        read_opt(t, "seed", c.toy_data.seed, where);
    }
    if (j.contains("external_dir")) {
        std::string d;
        read_opt(j, "external_dir", d, path);
        c.external_dir = resolve(base, d);
    }
    if (j.contains("out")) {
        std::string d;
        read_opt(j, "out", d, path);
        c.out_dir = resolve(base, d);
    }
    std::uint64_t seed = 0;
    read_opt(j, "seed", seed, path);
    apply_seed(c, seed);

    try {
        c.space.validate();
        c.nas.validate();
        c.oracle.validate();
        c.accelerator.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Config, path + ": " + e.what());
    }
    return c;
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& c) {
    switch (c.nas.evaluator) {
        case EvaluatorKind::Oracle: return std::make_unique<OracleEvaluator>(c.oracle, c.seed);
        case EvaluatorKind::External: return std::make_unique<ExternalEvaluator>(c.external_dir);
        case EvaluatorKind::Toy: {
            const bool dense = std::all_of(c.backbone->blocks.begin(), c.backbone->blocks.end(),
                                           [](const BlockSpec& b) { return b.kind == BlockKind::Linear; });
            require(dense, ErrorCode::Config,
                    "the toy evaluator needs a backbone made of linear blocks");
            ToyDataConfig data = c.toy_data;
            data.dim = static_cast<std::size_t>(c.backbone->input.elements());
            data.classes = c.backbone->num_classes;
            return std::make_unique<ToyEvaluator>(make_toy_dataset(data), c.training);
        }
    }
    fail(ErrorCode::Config, "unknown evaluator");
}

Chromosome load_architecture(const std::string& path, const SearchSpace& space) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Config, path + ": " + e.what());
    }
    require(j.is_object(), ErrorCode::Config, path + ": architecture must be an object");
    Chromosome c;
    if (j.contains("genes")) {
        c = Chromosome(j["genes"].get<std::vector<int>>());
    } else {
        require(j.contains("exits") && j["exits"].is_array() && !j["exits"].empty(),
                ErrorCode::Config, path + ": expected 'genes' or a nonempty 'exits' list");
        const std::size_t H = space.H();
        c = Chromosome(std::vector<int>(Chromosome::length_for(H), 0));
        const auto& exits = j["exits"];
        for (std::size_t i = 0; i < exits.size(); ++i) {
            const auto& e = exits[i];
            const std::string mount = e.at("mount").get<std::string>();
            const int head = e.value("head", 0), quant = e.value("quant", 0);
            const auto idx = space.backbone->mount_index(mount);
            require(idx.has_value(), ErrorCode::Config, path + ": unknown mount '" + mount + "'");
            if (i + 1 == exits.size()) {
                require(*idx == H, ErrorCode::Config,
                        path + ": the last exit must sit on the final mount");
                c.set_final_head(head);
                c.set_final_quant(quant);
            } else {
                require(*idx < H, ErrorCode::Config, path + ": only the last exit may use the final mount");
                c.set_present(*idx, true);
                c.set_head(*idx, head);
                c.set_quant(*idx, quant);
            }
        }
    }
    try {
        decode(c, space);
    } catch (const Error& e) {
        fail(ErrorCode::Config, path + ": " + e.what());
    }
    return c.canonical();
}

std::uint64_t binomial_space_size(std::uint64_t H, std::uint64_t p, std::uint64_t q) {
    const std::uint64_t pq = p * q;
    std::uint64_t total = 0, binom = 1, power = 1;
    for (std::uint64_t j = 0; j <= H; ++j) {
        if (j > 0) {
            binom = binom * (H - j + 1) / j;
            power *= pq;
        }
        total += binom * power;
    }
    return total * pq;
}

double mac_reduction(std::span<const double> er, std::span<const std::uint64_t> cumulative_macs,
                     std::uint64_t static_macs) {
    require(er.size() == cumulative_macs.size() && !er.empty(), ErrorCode::InvalidArgument,
            "mac_reduction: length mismatch");
    require(static_macs > 0, ErrorCode::InvalidArgument, "mac_reduction: static MACs must be > 0");
    double expected = 0.0;
    for (std::size_t i = 0; i < er.size(); ++i) expected += er[i] * double(cumulative_macs[i]);
    return 1.0 - expected / double(static_macs);
}

int cmd_space(const RunConfig& c, std::ostream& out) {
    const std::uint64_t H = c.space.H(), p = c.space.p(), q = c.space.q();
    const std::uint64_t closed = search_space_size(H, p, q);
    const std::uint64_t binom = binomial_space_size(H, p, q);
    out << "backbone " << c.backbone->name << "\n"
        << "H " << H << "\np " << p << "\nq " << q << "\n"
        << "size pq(1+pq)^H " << closed << "\n"
        << "binomial sum " << binom << "\n";
    json j = {{"backbone", c.backbone->name}, {"H", H}, {"p", p}, {"q", q},
              {"closed_form", closed}, {"binomial_sum", binom}, {"match", closed == binom}};
    write_out(c, "space.json", j.dump(2) + "\n");
    if (closed != binom) {
        out << "MISMATCH between closed form and binomial sum\n";
        return kSelfCheckMismatch;
    }
    out << "self-check ok\n";
    return kOk;
}

int cmd_cost(const RunConfig& c, const std::string& arch_path, std::ostream& out) {
    const Chromosome chrom = load_architecture(arch_path, c.space);
    const EennArchitecture arch = decode(chrom, c.space);
    auto evaluator = make_evaluator(c);
    const EvaluationReport rep = evaluator->evaluate(arch, chrom);
    const LayerGraph g = expand_layers(arch);
    const HwCostReport r = cost_report(g, c.accelerator, rep.er);
    const double st = static_et(arch, c.accelerator);

    write_out(c, "cost.json", cost_report_json(r, g, c.accelerator));
    write_out(c, "cost.csv", cost_report_csv(r, g));
    write_out(c, "layers.csv", layer_costs_csv(r, g));

    out << "architecture " << chrom.hash_hex() << " (" << arch.m() << " exits)\n";
    out << "exit  mount  cum_macs      ER       ET_i\n";
    for (std::size_t i = 0; i < g.m(); ++i) {
        out << std::setw(4) << i + 1 << "  " << std::setw(5) << g.exits[i].mount << "  "
            << std::setw(12) << cumulative_macs(g, i + 1) << "  " << fixed(r.er[i]) << "  "
            << std::scientific << std::setprecision(4) << r.et[i] << std::defaultfloat << "\n";
    }
    out << "ET_avg " << std::scientific << std::setprecision(4) << r.et_avg << "\n"
        << "ET_static " << st << std::defaultfloat << "\n"
        << "ET reduction " << fixed(et_reduction(r.et_avg, st)) << "\n"
        << "ACC_avg " << fixed(rep.acc_avg) << "\n";
    for (std::size_t i = 0; i < r.overhead.size(); ++i) {
        out << "OH_" << i + 1 << " " << fixed(r.overhead[i]) << "\n";
    }
    return kOk;
}

namespace {

struct EvaluatedEvent {
    int iteration = 0;
    std::string hash;
    std::vector<int> genes;
    bool ok = false;
    double acc_avg = 0, et_avg = 0, er_last = 0;
    std::vector<double> er;
};

std::vector<EvaluatedEvent> evaluated_events(const History& h) {
    std::vector<EvaluatedEvent> out;
    for (const auto& line : h.lines()) {
        const json e = json::parse(line);
        if (e.value("event", "") != "evaluated") continue;
        EvaluatedEvent ev;
        ev.iteration = e.at("iteration").get<int>();
        ev.hash = e.at("hash").get<std::string>();
        ev.genes = e.at("genes").get<std::vector<int>>();
        ev.ok = !e.contains("error");
        if (ev.ok) {
            ev.acc_avg = e.at("acc_avg").get<double>();
            ev.et_avg = e.at("et_avg").get<double>();
            ev.er_last = e.at("er_last").get<double>();
            ev.er = e.at("er").get<std::vector<double>>();
        }
        out.push_back(std::move(ev));
    }
    return out;
}

}  // namespace

PointSummary summarize_history(const History& history, const RunConfig& c,
                               std::optional<std::size_t> point) {
    const LabeledSet labeled = labeled_from_history(history);
    require(!labeled.empty(), ErrorCode::Evaluation, "history has no labeled architectures");
    const auto front = pareto_front(labeled.records());
    std::size_t idx = 0;
    if (point) {
        require(*point < front.size(), ErrorCode::Config,
                "front point " + std::to_string(*point) + " out of range (front has " +
                    std::to_string(front.size()) + " points)");
        idx = *point;
    } else {
        for (std::size_t i = 1; i < front.size(); ++i) {
            if (front[i].acc_avg > front[idx].acc_avg) idx = i;
        }
    }
    const LabeledRecord& rec = front[idx];
    PointSummary s;
    s.hash = rec.chromosome.hash_hex();
    s.genes = rec.chromosome.genes();
    s.exits = rec.chromosome.exit_count();
    s.acc_avg = rec.acc_avg;
    s.et_avg = rec.et_avg;
    for (const auto& ev : evaluated_events(history)) {
        if (ev.hash == s.hash && ev.ok) s.er = ev.er;
    }
    require(s.er.size() == s.exits, ErrorCode::Evaluation,
            "history lacks the evaluation of front point " + s.hash);
    const EennArchitecture arch = decode(rec.chromosome, c.space);
    const LayerGraph g = expand_layers(arch);
    std::vector<std::uint64_t> cum;
    for (std::size_t i = 1; i <= g.m(); ++i) cum.push_back(cumulative_macs(g, i));
    const LayerGraph sg = expand_layers(static_counterpart(arch));
    s.mac_reduction = mac_reduction(s.er, cum, cumulative_macs(sg, 1));
    s.et_reduction = et_reduction(s.et_avg, static_et(arch, c.accelerator));
    return s;
}

int cmd_search(const RunConfig& c, bool resume, std::ostream& out) {
    auto evaluator = make_evaluator(c);
    NasEngine engine(c.space, c.accelerator, c.nas, *evaluator);
    const std::string history_path = (fs::path(c.out_dir) / "history.jsonl").string();

    SearchState st;
    if (resume && fs::exists(history_path)) {
        st = engine.resume(History::parse(read_file(history_path)));
        out << "resumed from " << history_path << "\n";
    } else {
        st = engine.run();
    }
    const History& history = engine.history();
    write_out(c, "history.jsonl", history.text());
    write_out(c, "labeled.jsonl", st.labeled.to_jsonl());

    std::ostringstream stats;
    stats << "iteration,population,labeled,evaluated,rejected_mu,acc_min,acc_mean,acc_max,"
             "et_min,et_mean,et_max,front_size\n";
    for (const auto& s : st.stats) {
        stats << s.iteration << "," << s.population << "," << s.labeled << "," << s.evaluated << ","
              << s.rejected_mu << "," << full(s.acc_min) << "," << full(s.acc_mean) << ","
              << full(s.acc_max) << "," << full(s.et_min) << "," << full(s.et_mean) << ","
              << full(s.et_max) << "," << s.front_size << "\n";
    }
    write_out(c, "stats.csv", stats.str());

    std::ostringstream dist;
    dist << "iteration,hash,exits,acc_avg,et_avg,er_last,admitted\n";
    for (const auto& ev : evaluated_events(history)) {
        if (!ev.ok) continue;
        dist << ev.iteration << "," << ev.hash << "," << Chromosome(ev.genes).exit_count() << ","
             << full(ev.acc_avg) << "," << full(ev.et_avg) << "," << full(ev.er_last) << ","
             << (ev.er_last <= c.nas.mu ? 1 : 0) << "\n";
    }
    write_out(c, "distributions.csv", dist.str());

    std::ostringstream scatter;
    scatter << "hash,exits,acc_avg,et_avg,static_et,et_reduction\n";
    for (const auto& r : st.labeled.records()) {
        const ArchCost& ac = engine.cost(r.chromosome);
        scatter << r.chromosome.hash_hex() << "," << r.chromosome.exit_count() << ","
                << full(r.acc_avg) << "," << full(r.et_avg) << "," << full(ac.static_et) << ","
                << full(et_reduction(r.et_avg, ac.static_et)) << "\n";
    }
    write_out(c, "scatter.csv", scatter.str());

    const auto front = pareto_front(st.labeled.records());
    std::ostringstream fr;
    fr << "hash,exits,acc_avg,et_avg,et_reduction,genes\n";
    for (const auto& r : front) {
        const ArchCost& ac = engine.cost(r.chromosome);
        std::string genes;
        for (int g : r.chromosome.genes()) genes += std::to_string(g);
        fr << r.chromosome.hash_hex() << "," << r.chromosome.exit_count() << "," << full(r.acc_avg)
           << "," << full(r.et_avg) << "," << full(et_reduction(r.et_avg, ac.static_et)) << ","
           << genes << "\n";
    }
    write_out(c, "front.csv", fr.str());

    out << "iterations " << c.nas.iterations << ", evaluated " << st.evaluated.size()
        << ", labeled " << st.labeled.size() << ", population " << st.population.size() << "\n";
    out << "front (" << front.size() << " points):\n";
    for (const auto& r : front) {
        out << "  " << r.chromosome.hash_hex() << "  exits " << r.chromosome.exit_count()
            << "  ACC_avg " << fixed(r.acc_avg) << "  ET_avg " << std::scientific
            << std::setprecision(4) << r.et_avg << std::defaultfloat << "\n";
    }

    const AuditResult audit =
        audit_history(history, c.space, c.accelerator, c.nas.theta, c.nas.mu);
    if (!audit.ok()) {
        out << "constraint audit FAILED\n";
        for (const auto& m : audit.messages) out << "  " << m << "\n";
        return kAuditFailure;
    }
    out << "constraint audit ok (" << audit.iterations << " summaries)\n";
    return kOk;
}

int cmd_report(const RunConfig& c, const std::string& history_path,
               std::optional<std::size_t> point, std::ostream& out) {
    const History h = History::parse(read_file(history_path));
    require(!h.lines().empty(), ErrorCode::Evaluation, history_path + ": empty history");
    const PointSummary s = summarize_history(h, c, point);
    out << "point " << s.hash << " (" << s.exits << " exits)\n"
        << "ACC_avg " << fixed(s.acc_avg) << "\n"
        << "ET_avg " << std::scientific << std::setprecision(4) << s.et_avg << std::defaultfloat
        << "\n"
        << "ET reduction " << fixed(s.et_reduction) << "\n"
        << "MAC reduction " << fixed(s.mac_reduction) << "\n";
    json j = {{"hash", s.hash},         {"genes", s.genes},
              {"exits", s.exits},       {"acc_avg", s.acc_avg},
              {"et_avg", s.et_avg},     {"et_reduction", s.et_reduction},
              {"mac_reduction", s.mac_reduction}, {"er", s.er}};
    write_out(c, "report.json", j.dump(2) + "\n");
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hardware-aware early-exit architecture search"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string evaluator;
    app.add_option("--config", config_path, "Run configuration (JSON)");
    app.add_option("--seed", seed, "Seed for sampling, GA and evaluators");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--evaluator", evaluator, "Evaluator: toy, oracle or external")
        ->check(CLI::IsMember({"toy", "oracle", "external"}));

    auto* space = app.add_subcommand("space", "Search-space size with a binomial cross-check");
    auto* cost = app.add_subcommand("cost", "Hardware cost of one architecture");
    std::string arch_path;
    cost->add_option("architecture", arch_path, "Architecture file (JSON)")->required();
    auto* search = app.add_subcommand("search", "Run the constrained search");
    bool resume = false;
    search->add_flag("--resume", resume, "Continue from <out>/history.jsonl");
    auto* report = app.add_subcommand("report", "Summarize a front point of a history");
    std::string history_path;
    std::optional<std::size_t> point;
    report->add_option("--history", history_path, "History file (default <out>/history.jsonl)");
    report->add_option("--point", point, "Front index ordered by ET (default: most accurate)");
    for (auto* sub : {space, cost, search, report}) sub->fallthrough();
    app.fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? kOk : kConfigError;
    }

    try {
        RunConfig c = config_path.empty() ? default_run_config() : load_run_config(config_path);
        if (seed) apply_seed(c, *seed);
        if (!out_dir.empty()) c.out_dir = out_dir;
        if (!evaluator.empty()) c.nas.evaluator = parse_evaluator_kind(evaluator);

        if (space->parsed()) return cmd_space(c, out);
        if (cost->parsed()) return cmd_cost(c, arch_path, out);
        if (search->parsed()) return cmd_search(c, resume, out);
        if (history_path.empty()) history_path = (fs::path(c.out_dir) / "history.jsonl").string();
        return cmd_report(c, history_path, point, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::Config:
            case ErrorCode::Parse:
            case ErrorCode::Io:
            case ErrorCode::InvalidArgument:
            case ErrorCode::Overflow: return kConfigError;
            case ErrorCode::Evaluation:
            case ErrorCode::Divergence: return kEvaluationError;
            case ErrorCode::Constraint: return kConfigError;
        }
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace eenas::cli
