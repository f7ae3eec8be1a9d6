#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eenas/accel_io.hpp"
#include "eenas/arch.hpp"
#include "eenas/nas.hpp"
#include "eenas/oracle.hpp"
#include "eenas/toy.hpp"

namespace eenas::cli {

enum ExitStatus : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kEvaluationError = 3,
    kAuditFailure = 4,
    kSelfCheckMismatch = 5,
};

/// Everything a command needs, resolved and validated up front. Paths inside
/// a config file are relative to that file.
struct RunConfig {
    std::shared_ptr<const BackboneSpec> backbone;
    AcceleratorSpec accelerator;
    SearchSpace space;
    NasConfig nas;
    OracleConfig oracle;
    TrainingConfig training;
    ToyDataConfig toy_data;
    std::string external_dir = "external";
    std::string out_dir = "results";
    std::uint64_t seed = 0;
};

/// Defaults: the MobileNetV2 backbone and the default accelerator.
RunConfig default_run_config();
RunConfig load_run_config(const std::string& path);
void apply_seed(RunConfig& config, std::uint64_t seed);

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& config);

/// Architecture file: {"genes": [...]} or {"exits": [{"mount", "head",
/// "quant"}, ...]} with the final exit last; head and quant index the
/// space's options.
Chromosome load_architecture(const std::string& path, const SearchSpace& space);

/// sum_j C(H, j) (pq)^j * pq, evaluated term by term.
std::uint64_t binomial_space_size(std::uint64_t H, std::uint64_t p, std::uint64_t q);

/// 1 - (sum_i ER_i * cumMACs_i) / cumMACs_static.
double mac_reduction(std::span<const double> er, std::span<const std::uint64_t> cumulative_macs,
                     std::uint64_t static_macs);

struct PointSummary {
    std::string hash;
    std::vector<int> genes;
    std::size_t exits = 0;
    double acc_avg = 0.0;
    double et_avg = 0.0;
    double et_reduction = 0.0;
    double mac_reduction = 0.0;
    std::vector<double> er;
};

/// Summary of the front of a finished (or partial) history; `point` indexes
/// the front ordered by ET ascending, defaulting to its most accurate member.
PointSummary summarize_history(const History& history, const RunConfig& config,
                               std::optional<std::size_t> point = std::nullopt);

int cmd_space(const RunConfig& config, std::ostream& out);
int cmd_cost(const RunConfig& config, const std::string& architecture_path, std::ostream& out);
int cmd_search(const RunConfig& config, bool resume, std::ostream& out);
int cmd_report(const RunConfig& config, const std::string& history_path,
               std::optional<std::size_t> point, std::ostream& out);

/// Parses arguments, runs the command, and maps errors to exit statuses.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eenas::cli
