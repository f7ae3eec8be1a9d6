#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace eenas {

/// Per-exit outcome of evaluating an early-exit network on a dataset.
/// Exits that received no samples carry `std::nullopt` accuracy and ER 0.
struct EvaluationReport {
    double tau = 0.9;
    std::vector<std::optional<double>> acc;  // percent, over samples that exited there
    std::vector<double> er;                  // fractions, sum to 1
    std::vector<std::uint64_t> counts;
    double acc_avg = 0.0;

    std::size_t m() const { return er.size(); }
    double last_exit_ratio() const { return er.back(); }

    /// Throws ErrorCode::Evaluation when an invariant is violated.
    void validate() const;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

inline constexpr double kReportTolerance = 1e-9;

/// Builds a report from per-exit accuracy and exit ratios, computing ACC_avg
/// and validating. `counts` may be empty.
EvaluationReport make_report(double tau, std::vector<std::optional<double>> acc,
                             std::vector<double> er, std::vector<std::uint64_t> counts = {});

/// Aggregates per-sample outcomes (1-based exit index, correctness).
EvaluationReport report_from_decisions(std::span<const std::size_t> decisions,
                                       std::span<const bool> correct, std::size_t m, double tau);

/// First exit (1-based) whose confidence reaches tau; the last exit always
/// accepts.
std::size_t exit_decision(std::span<const double> confidences, double tau);
/// Same with one threshold per exit (the last entry is ignored).
std::size_t exit_decision(std::span<const double> confidences, std::span<const double> taus);

std::vector<double> exit_ratios(std::span<const std::size_t> decisions, std::size_t m);

/// Sum of er_i * acc_i. Requires equal lengths and sum(er) == 1.
double acc_avg(std::span<const double> acc, std::span<const double> er);

/// Sum of lambda_i * L_i.
double scalarized_loss(std::span<const double> losses, std::span<const double> lambda);

struct TrainingConfig {
    int epochs = 100;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t batch_size = 128;
    double tau = 0.9;
    std::vector<double> exit_taus;  // optional per-exit override
    std::vector<double> lambda;     // empty means all ones
    std::uint64_t seed = 0;
    int calibration_epoch = 1;      // clips calibrated after this many epochs
    std::size_t calibration_samples = 256;

    void validate(std::size_t m) const;
    std::vector<double> lambdas(std::size_t m) const;
    std::vector<double> thresholds(std::size_t m) const;
};

}  // namespace eenas
