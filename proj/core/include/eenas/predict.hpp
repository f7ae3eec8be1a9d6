#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eenas/arch.hpp"

namespace eenas {

struct LabeledRecord {
    Chromosome chromosome;
    double acc_avg = 0.0;
    double et_avg = 0.0;
    double er_last = 0.0;
    int iteration = 0;  // iteration in which the record was labeled
};

/// Cumulative labeled set keyed by canonical chromosome hash. Records keep
/// insertion order; re-labeling an existing chromosome replaces its values
/// in place (latest wins).
class LabeledSet {
public:
    /// Returns true when the chromosome was new.
    bool upsert(LabeledRecord record);
    bool contains(std::uint64_t hash) const { return index_.count(hash) != 0; }
    const LabeledRecord* find(std::uint64_t hash) const;

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<LabeledRecord>& records() const { return records_; }

    /// One JSON object per line.
    std::string to_jsonl() const;
    static LabeledSet from_jsonl(const std::string& text, const std::string& source = "<string>");
    void save(const std::string& path) const;
    static LabeledSet load(const std::string& path);

private:
    std::vector<LabeledRecord> records_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Precomputed per-space data used to featurize chromosomes.
class FeatureMap {
public:
    explicit FeatureMap(const SearchSpace& space);

    std::size_t length() const { return 4 * H_ + 4; }

    /// [exit count | occupancy (H) | occupancy * cumulative backbone MAC
    ///  fraction at the mount (H) | head depth per slot (H+1, 0 if absent) |
    ///  bits/8 per slot (H+1, 0 if absent) | backbone bits/8]
    std::vector<double> operator()(const Chromosome& chrom) const;

    const std::vector<double>& mac_fractions() const { return fractions_; }

private:
    SearchSpace space_;
    std::size_t H_ = 0;
    std::vector<double> fractions_;  // per mount, final mount last (== 1)
};

std::vector<double> featurize(const Chromosome& chrom, const SearchSpace& space);

/// Ridge regression on z-scored features with an unpenalized intercept.
struct RidgeModel {
    std::vector<double> mean;
    std::vector<double> scale;  // per-feature std (1 for constant features)
    std::vector<double> coef;   // in z-scored units
    double intercept = 0.0;
    double lambda = 0.0;
    double train_mse = 0.0;

    double predict(std::span<const double> x) const;
};

RidgeModel fit_ridge(const std::vector<std::vector<double>>& X, std::span<const double> y,
                     double lambda);

enum class TargetKind { Accuracy, Et };

inline constexpr double kDefaultRidge = 1.0;

/// Accuracy predictions are clamped to [0, 100]; ET is regressed on log(ET)
/// and exponentiated, so it stays positive.
struct Predictor {
    TargetKind kind = TargetKind::Accuracy;
    RidgeModel model;
    std::size_t feature_length = 0;

    double predict(std::span<const double> features) const;
};

/// Needs at least two records.
Predictor fit(const LabeledSet& data, const FeatureMap& features, TargetKind kind,
              double lambda = kDefaultRidge);

double predict(const Predictor& pred, const Chromosome& chrom, const FeatureMap& features);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace eenas
