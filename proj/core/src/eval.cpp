#include "eenas/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "eenas/error.hpp"

namespace eenas {

void EvaluationReport::validate() const {
    const std::size_t n = er.size();
    require(n >= 1, ErrorCode::Evaluation, "report has no exits");
    require(acc.size() == n, ErrorCode::Evaluation, "report: acc/er length mismatch");
    require(counts.empty() || counts.size() == n, ErrorCode::Evaluation,
            "report: counts length mismatch");
    require(tau > 0.0 && tau <= 1.0, ErrorCode::Evaluation, "report: tau outside (0, 1]");
    double sum = 0.0, avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(std::isfinite(er[i]) && er[i] >= 0.0 && er[i] <= 1.0 + kReportTolerance,
                ErrorCode::Evaluation, "report: exit ratio outside [0, 1]");
        sum += er[i];
        if (acc[i]) {
            require(*acc[i] >= 0.0 && *acc[i] <= 100.0, ErrorCode::Evaluation,
                    "report: accuracy outside [0, 100]");
            avg += er[i] * *acc[i];
        } else {
            require(er[i] == 0.0, ErrorCode::Evaluation,
                    "report: exit " + std::to_string(i + 1) + " has no accuracy but ER > 0");
        }
    }
    require(std::abs(sum - 1.0) <= kReportTolerance, ErrorCode::Evaluation,
            "report: exit ratios sum to " + std::to_string(sum) + ", not 1");
    require(std::abs(avg - acc_avg) <= kReportTolerance, ErrorCode::Evaluation,
            "report: ACC_avg inconsistent with per-exit accuracy and exit ratios");
}

EvaluationReport make_report(double tau, std::vector<std::optional<double>> acc,
                             std::vector<double> er, std::vector<std::uint64_t> counts) {
    EvaluationReport r;
    r.tau = tau;
    r.acc = std::move(acc);
    r.er = std::move(er);
    r.counts = std::move(counts);
    double avg = 0.0;
    for (std::size_t i = 0; i < r.er.size() && i < r.acc.size(); ++i) {
        if (r.acc[i]) avg += r.er[i] * *r.acc[i];
    }
    r.acc_avg = avg;
    r.validate();
    return r;
}

EvaluationReport report_from_decisions(std::span<const std::size_t> decisions,
                                       std::span<const bool> correct, std::size_t m, double tau) {
    require(decisions.size() == correct.size(), ErrorCode::InvalidArgument,
            "decisions/correctness length mismatch");
    const auto er = exit_ratios(decisions, m);
    std::vector<std::uint64_t> counts(m, 0), hits(m, 0);
    for (std::size_t s = 0; s < decisions.size(); ++s) {
        ++counts[decisions[s] - 1];
        if (correct[s]) ++hits[decisions[s] - 1];
    }
    std::vector<std::optional<double>> acc(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (counts[i] > 0) acc[i] = 100.0 * double(hits[i]) / double(counts[i]);
    }
    return make_report(tau, std::move(acc), er, std::move(counts));
}

std::size_t exit_decision(std::span<const double> confidences, double tau) {
    require(!confidences.empty(), ErrorCode::InvalidArgument, "exit_decision: no exits");
    require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidArgument, "exit_decision: tau outside (0, 1)");
    for (std::size_t i = 0; i + 1 < confidences.size(); ++i) {
        if (confidences[i] >= tau) return i + 1;
    }
    return confidences.size();
}

std::size_t exit_decision(std::span<const double> confidences, std::span<const double> taus) {
    require(!confidences.empty(), ErrorCode::InvalidArgument, "exit_decision: no exits");
    require(taus.size() == confidences.size(), ErrorCode::InvalidArgument,
            "exit_decision: one threshold per exit required");
    for (std::size_t i = 0; i + 1 < confidences.size(); ++i) {
        if (confidences[i] >= taus[i]) return i + 1;
    }
    return confidences.size();
}

std::vector<double> exit_ratios(std::span<const std::size_t> decisions, std::size_t m) {
    require(!decisions.empty(), ErrorCode::InvalidArgument, "exit_ratios: empty dataset");
    require(m >= 1, ErrorCode::InvalidArgument, "exit_ratios: m must be >= 1");
    std::vector<std::uint64_t> counts(m, 0);
    for (std::size_t d : decisions) {
        require(d >= 1 && d <= m, ErrorCode::InvalidArgument,
                "exit_ratios: decision " + std::to_string(d) + " outside [1, m]");
        ++counts[d - 1];
    }
    std::vector<double> er(m);
    const double n = static_cast<double>(decisions.size());
    for (std::size_t i = 0; i < m; ++i) er[i] = double(counts[i]) / n;
    return er;
}

double acc_avg(std::span<const double> acc, std::span<const double> er) {
    require(acc.size() == er.size(), ErrorCode::InvalidArgument, "acc_avg: length mismatch");
    require(!er.empty(), ErrorCode::InvalidArgument, "acc_avg: no exits");
    const double sum = std::accumulate(er.begin(), er.end(), 0.0);
    require(std::abs(sum - 1.0) <= kReportTolerance, ErrorCode::InvalidArgument,
            "acc_avg: exit ratios are not normalized");
    double avg = 0.0;
    for (std::size_t i = 0; i < er.size(); ++i) avg += er[i] * acc[i];
    return avg;
}

double scalarized_loss(std::span<const double> losses, std::span<const double> lambda) {
    require(losses.size() == lambda.size(), ErrorCode::InvalidArgument,
            "scalarized_loss: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        require(lambda[i] > 0.0, ErrorCode::InvalidArgument, "scalarized_loss: lambda must be > 0");
        total += lambda[i] * losses[i];
    }
    return total;
}

void TrainingConfig::validate(std::size_t m) const {
    require(epochs >= 1, ErrorCode::Config, "training: epochs must be >= 1");
    require(learning_rate > 0.0, ErrorCode::Config, "training: learning rate must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, ErrorCode::Config, "training: momentum in [0, 1)");
    require(weight_decay >= 0.0, ErrorCode::Config, "training: weight decay must be >= 0");
    require(batch_size >= 1, ErrorCode::Config, "training: batch size must be >= 1");
    require(tau > 0.0 && tau < 1.0, ErrorCode::Config, "training: tau outside (0, 1)");
    require(exit_taus.empty() || exit_taus.size() == m, ErrorCode::Config,
            "training: per-exit tau list must have one entry per exit");
    require(lambda.empty() || lambda.size() == m, ErrorCode::Config,
            "training: lambda list must have one entry per exit");
    for (double l : lambda) require(l > 0.0, ErrorCode::Config, "training: lambda must be > 0");
}

std::vector<double> TrainingConfig::lambdas(std::size_t m) const {
    return lambda.empty() ? std::vector<double>(m, 1.0) : lambda;
}

std::vector<double> TrainingConfig::thresholds(std::size_t m) const {
    return exit_taus.empty() ? std::vector<double>(m, tau) : exit_taus;
}

}  // namespace eenas
