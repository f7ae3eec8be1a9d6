#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eenas/arch.hpp"
#include "eenas/eval.hpp"
#include "eenas/hwcost.hpp"
#include "eenas/oracle.hpp"
#include "eenas/predict.hpp"
#include "eenas/toy.hpp"

namespace eenas {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class EvaluatorKind { Toy, Oracle, External };
enum class RankingMode { Lexicographic, WeightedSum };

const char* to_string(EvaluatorKind kind);
const char* to_string(RankingMode mode);
EvaluatorKind parse_evaluator_kind(const std::string& name);
RankingMode parse_ranking_mode(const std::string& name);

inline constexpr double kNoOverheadCap = std::numeric_limits<double>::infinity();

struct NasConfig {
    std::size_t init_population = 50;
    std::size_t N = 20;
    std::size_t generations = 3;
    std::size_t iterations = 6;  // K
    double theta = 0.5;          // overhead cap, inclusive
    double mu = 0.5;             // last-exit-ratio cap, inclusive
    double mutation_rate = 0.1;  // per gene
    double crossover_rate = 0.9;
    std::uint64_t seed = 0;
    EvaluatorKind evaluator = EvaluatorKind::Oracle;
    RankingMode ranking = RankingMode::Lexicographic;
    double weight_acc = 0.5;  // weighted-sum mode only
    double weight_et = 0.5;
    double ridge = kDefaultRidge;
    std::size_t attempt_factor = 200;  // sampling budget per requested member

    void validate() const;
};

// ---------------------------------------------------------------------------
// Evaluators
// ---------------------------------------------------------------------------

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual std::string name() const = 0;
    /// Must be deterministic in (arch, chrom).
    virtual EvaluationReport evaluate(const EennArchitecture& arch, const Chromosome& chrom) = 0;
};

class OracleEvaluator final : public Evaluator {
public:
    OracleEvaluator(OracleConfig config, std::uint64_t seed)
        : config_(std::move(config)), seed_(seed) {}
    std::string name() const override { return "oracle"; }
    EvaluationReport evaluate(const EennArchitecture& arch, const Chromosome& chrom) override;

private:
    OracleConfig config_;
    std::uint64_t seed_;
};

/// Trains every architecture on a fixed dataset; the per-architecture seed is
/// derived from the base seed and the chromosome hash.
class ToyEvaluator final : public Evaluator {
public:
    ToyEvaluator(Dataset data, TrainingConfig config)
        : data_(std::move(data)), config_(std::move(config)) {}
    std::string name() const override { return "toy"; }
    EvaluationReport evaluate(const EennArchitecture& arch, const Chromosome& chrom) override;

private:
    Dataset data_;
    TrainingConfig config_;
};

/// Reads `<dir>/<hash>.json` in the evaluator protocol.
class ExternalEvaluator final : public Evaluator {
public:
    explicit ExternalEvaluator(std::string dir) : dir_(std::move(dir)) {}
    std::string name() const override { return "external"; }
    EvaluationReport evaluate(const EennArchitecture& arch, const Chromosome& chrom) override;
    std::string path_for(const Chromosome& chrom) const;

private:
    std::string dir_;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// A chromosome with the two objective values used for ranking (true labels
/// or predictions).
struct Candidate {
    Chromosome chromosome;
    double acc = 0.0;
    double et = 0.0;
};

struct Selection {
    std::vector<Candidate> chosen;
    bool undersized = false;  // fewer than 2N candidates were available
};

/// Lexicographic mode: top 2N by accuracy (descending), then top N of those
/// by ET (ascending); ties resolve by chromosome hash ascending. Weighted
/// mode: top N by w_acc * norm(acc) - w_et * norm(log ET).
Selection select_parents(std::vector<Candidate> population, std::size_t N,
                         const NasConfig& config);

/// Predictor pair fitted on P^k.
struct Predictors {
    Predictor acc;
    Predictor et;
};

/// Scores with predictors; throws when `predictors` is empty.
Selection select_parents(const std::vector<Chromosome>& population,
                         const std::optional<Predictors>& predictors, const FeatureMap& features,
                         std::size_t N, const NasConfig& config);

using Admissible = std::function<bool(const Chromosome&)>;

struct GaOutcome {
    std::vector<Chromosome> offspring;       // admissible, distinct, not parents
    std::vector<Chromosome> rejected_theta;  // generated but over the overhead cap
};

/// One GA generation producing 2 * |parents| children: uniform crossover over
/// mount gene groups, per-gene mutation, canonicalization, overhead filter,
/// deduplication.
GaOutcome ga_generation(const std::vector<Chromosome>& parents, const SearchSpace& space,
                        const NasConfig& config, Rng& rng, const Admissible& admissible);

/// Distinct admissible samples. Throws ErrorCode::Constraint when the attempt
/// budget runs out, naming how many were found.
std::vector<Chromosome> init_population(const NasConfig& config, const SearchSpace& space,
                                        Rng& rng, const Admissible& admissible,
                                        std::size_t count,
                                        const std::unordered_set<std::uint64_t>& exclude = {});

struct EvaluatedArch {
    Chromosome chromosome;
    EvaluationReport report;
};

/// Members whose last-exit ratio is at most mu (inclusive).
std::vector<EvaluatedArch> filter_exit_ratio(const std::vector<EvaluatedArch>& population,
                                             double mu);

/// Non-dominated records under (max ACC_avg, min ET_avg), ordered by ET
/// ascending then hash.
std::vector<LabeledRecord> pareto_front(const std::vector<LabeledRecord>& records);

// ---------------------------------------------------------------------------
// Search state and loop
// ---------------------------------------------------------------------------

/// Hardware-only facts about one architecture.
struct ArchCost {
    std::vector<double> et;  // ET_i
    std::vector<double> overhead;
    double max_overhead = 0.0;
    double static_et = 0.0;
    std::uint64_t static_macs = 0;
    std::vector<std::uint64_t> cumulative_macs;
};

struct EvalMemo {
    bool ok = false;
    double acc_avg = 0.0;
    double et_avg = 0.0;
    double er_last = 0.0;
    int iteration = 0;
    std::string error;
};

struct IterationStats {
    int iteration = 0;
    std::size_t population = 0;
    std::size_t labeled = 0;
    std::size_t evaluated = 0;  // new evaluations in this iteration
    std::size_t rejected_mu = 0;
    double acc_min = 0, acc_mean = 0, acc_max = 0;
    double et_min = 0, et_mean = 0, et_max = 0;
    std::size_t front_size = 0;
};

struct SearchState {
    int k = 0;
    bool finished = false;
    std::vector<Chromosome> population;  // S^k in admission order
    LabeledSet labeled;                  // P^k
    std::map<std::uint64_t, EvalMemo> evaluated;
    std::vector<IterationStats> stats;
    Rng rng;

    bool in_population(std::uint64_t hash) const;
};

/// Append-only JSON-lines event log.
class History {
public:
    void emit(const std::string& json_line) { lines_.push_back(json_line); }
    const std::vector<std::string>& lines() const { return lines_; }
    std::string text() const;
    void truncate(std::size_t n) { lines_.resize(n); }

    static History parse(const std::string& text);

private:
    std::vector<std::string> lines_;
};

class NasEngine {
public:
    NasEngine(SearchSpace space, AcceleratorSpec accel, NasConfig config, Evaluator& evaluator);

    const SearchSpace& space() const { return space_; }
    const NasConfig& config() const { return config_; }
    const FeatureMap& features() const { return features_; }
    History& history() { return history_; }

    /// Memoized hardware cost of a chromosome.
    const ArchCost& cost(const Chromosome& chrom);
    bool admissible(const Chromosome& chrom);

    /// S^0 and the run header.
    SearchState initialize();
    /// One search iteration: labels S^k, then grows it into S^(k+1).
    void iterate(SearchState& state);
    /// Evaluates the members of S^K not yet labeled.
    void finalize(SearchState& state);
    SearchState run();

    /// Restores the state from the last iteration summary of `history` and
    /// finishes the run; earlier events are kept byte-for-byte.
    SearchState resume(const History& history);

    std::optional<Predictors> fit_predictors(const LabeledSet& data) const;

private:
    void evaluate_population(SearchState& state);
    void summarize(SearchState& state, std::size_t new_evals, std::size_t rejected);
    std::string header_line() const;

    SearchSpace space_;
    AcceleratorSpec accel_;
    NasConfig config_;
    Evaluator& evaluator_;
    FeatureMap features_;
    History history_;
    std::unordered_map<std::uint64_t, ArchCost> costs_;
};

// ---------------------------------------------------------------------------
// History audit
// ---------------------------------------------------------------------------

struct AuditResult {
    std::size_t iterations = 0;
    std::size_t theta_violations = 0;
    std::size_t mu_violations = 0;
    std::size_t duplicate_evaluations = 0;
    std::size_t population_shrinks = 0;  // S^k not a subset of S^(k+1)
    std::size_t labeled_mismatches = 0;  // P^k differs from the union of admissions
    std::vector<std::string> messages;

    bool ok() const {
        return theta_violations == 0 && mu_violations == 0 && duplicate_evaluations == 0 &&
               population_shrinks == 0 && labeled_mismatches == 0;
    }
};

/// Replays a history: recomputes every population member's overhead with
/// `accel`, checks every labeled member's last-exit ratio against the
/// evaluation events, and checks the set-growth properties.
AuditResult audit_history(const History& history, const SearchSpace& space,
                          const AcceleratorSpec& accel, double theta, double mu);

/// Per-iteration population snapshots (S^k) and labeled sets (P^k) as hash
/// sets, read back from the summaries.
struct HistorySnapshots {
    std::vector<std::vector<std::uint64_t>> population;
    std::vector<std::vector<std::uint64_t>> labeled;
};
HistorySnapshots history_snapshots(const History& history);

/// The labeled set as of the last summary in `history`.
LabeledSet labeled_from_history(const History& history);

}  // namespace eenas
