#pragma once

#include <cstdint>
#include <vector>

#include "eenas/arch.hpp"
#include "eenas/eval.hpp"

namespace eenas {

/// Uniform difficulty component of the synthetic sample population.
struct DifficultyBand {
    double weight;
    double lo;
    double hi;
};

/// Closed-form stand-in for training + evaluation.
///
/// Each exit i gets a capacity
///   kappa_i = f_i^gamma * (1 + depth_bonus * (layers_i - 1)) * beta(b_i) * beta(b_backbone)
/// where f_i is the cumulative backbone MAC fraction at its mount and
/// beta(b) = 1 - 2^-b (1 for unquantized). Intermediate capacities get a
/// seeded per-exit jitter. A sample of difficulty u exits at the first exit
/// with u <= rho * kappa (running maximum over earlier exits); the rest reach
/// the last exit. Accuracy over the samples exiting at i is
///   100 * clamp(1 - slope * mean(u | band_i) / kappa_i, 0, 1).
/// Difficulty follows `mixture`, so every quantity is an exact piecewise
/// polynomial in the exit thresholds.
struct OracleConfig {
    double confidence_efficiency = 0.85;  // rho
    double capacity_exponent = 0.6;       // gamma
    double depth_bonus = 0.08;
    double accuracy_slope = 0.45;
    double jitter = 0.05;
    double tau = 0.9;  // carried into the report
    std::uint64_t nominal_samples = 10000;
    std::vector<DifficultyBand> mixture = {{0.45, 0.0, 0.4}, {0.35, 0.3, 0.8}, {0.20, 0.6, 1.0}};

    void validate() const;
};

EvaluationReport synthetic_oracle(const EennArchitecture& arch, const OracleConfig& config,
                                  std::uint64_t seed);

/// Mixture CDF and partial first moment, exposed for tests.
double difficulty_cdf(const OracleConfig& config, double x);
double difficulty_partial_mean(const OracleConfig& config, double lo, double hi);

}  // namespace eenas
