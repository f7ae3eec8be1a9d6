#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eenas/arch.hpp"
#include "eenas/eval.hpp"
#include "eenas/quant.hpp"

namespace eenas {

struct Dataset {
    std::size_t dim = 0;
    int classes = 0;
    std::vector<double> features;  // row-major, size() x dim
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
    void push(std::span<const double> x, int label);
};

/// Gaussian class clusters with an easy/hard noise mixture, so that shallow
/// exits can settle the easy samples.
struct ToyDataConfig {
    std::size_t samples = 2000;
    std::size_t dim = 16;
    int classes = 4;
    double center_radius = 3.0;
    double easy_fraction = 0.6;
    double easy_noise = 0.6;
    double hard_noise = 1.8;
    std::uint64_t seed = 7;
};

Dataset make_toy_dataset(const ToyDataConfig& config = {});

/// Two well-separated Gaussian blobs (linearly separable in practice).
Dataset make_blobs(std::size_t samples, std::size_t dim, double separation, std::uint64_t seed);

struct DatasetSplit {
    Dataset train;
    Dataset test;
};

/// Per-class split; every class contributes max(1, floor(test_fraction * n_c))
/// samples to the test side.
DatasetSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Dense early-exit network built from an architecture whose backbone is
/// made of `linear` blocks. Every backbone layer and exit hidden layer uses
/// ReLU6; weights and activations are fake-quantized at the architecture's
/// bit widths once clips are calibrated (straight-through backward).
class ToyNetwork {
public:
    ToyNetwork(const EennArchitecture& arch, std::uint64_t seed);

    std::size_t m() const { return heads_.size(); }
    std::size_t parameter_count() const { return params_.size(); }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    bool quantized() const { return quantized_; }
    void set_quantized(bool on) { quantized_ = on; }

    /// Per-layer KL clip calibration for weights and activations on up to
    /// `max_samples` rows of `data`, then enables quantization.
    void calibrate(const Dataset& data, std::size_t max_samples);

    struct LossResult {
        std::vector<double> exit_losses;  // mean cross-entropy per exit
        double total = 0.0;               // sum of lambda_i * exit_losses[i]
    };

    /// Loss over `batch`; when `grad` is non-null it receives d(total)/d(params)
    /// (overwritten, same layout as parameters()).
    LossResult loss_and_gradient(const Dataset& data, std::span<const std::size_t> batch,
                                 std::span<const double> lambda, std::vector<double>* grad) const;

    /// Softmax output of every exit for one sample.
    std::vector<std::vector<double>> exit_probabilities(std::span<const double> x) const;

private:
    struct Dense {
        std::size_t in = 0;
        std::size_t out = 0;
        std::size_t w = 0;  // offset of out x in weights (row-major)
        std::size_t b = 0;  // offset of biases
        int bits = kUnquantizedBits;
        bool relu6 = true;
        double weight_clip = 0.0;
        double act_clip = 0.0;
    };
    struct Head {
        std::size_t after_layer = 0;  // backbone layer feeding this exit
        std::vector<std::size_t> layers;
    };
    struct Trace;

    Dense make_dense(std::size_t in, std::size_t out, int bits, bool relu6);
    std::vector<double> effective_weights(const Dense& d) const;

    std::vector<double> params_;
    std::vector<Dense> layers_;  // backbone layers then head layers
    std::size_t backbone_layers_ = 0;
    std::vector<Head> heads_;
    int classes_ = 0;
    std::size_t input_dim_ = 0;
    bool quantized_ = false;
};

EvaluationReport evaluate_toy(const ToyNetwork& net, const Dataset& test,
                              std::span<const double> thresholds, double tau);

struct ToyTrainingResult {
    EvaluationReport report;
    std::vector<double> epoch_loss;
    double test_accuracy_last_exit = 0.0;  // percent, every sample through exit m
};

/// Joint training of all exits with the scalarized loss under fake
/// quantization, evaluated on a stratified 80/20 split.
ToyTrainingResult train_toy_detailed(const EennArchitecture& arch, const Dataset& data,
                                     const TrainingConfig& config);

EvaluationReport train_toy(const EennArchitecture& arch, const Dataset& data,
                           const TrainingConfig& config);

}  // namespace eenas
