#pragma once

#include <span>
#include <vector>

namespace eenas {

enum class Rounding { Floor, Nearest };

/// Symmetric linear quantizer: values are clamped to [-c, c] and snapped to
/// multiples of s = c / (2^(b-1) - 1). A bit width of 32 or more is the
/// unquantized sentinel.
struct QuantParams {
    double clip = 1.0;
    int bits = 8;
    Rounding rounding = Rounding::Floor;

    /// Validating constructor.
    static QuantParams make(double clip, int bits, Rounding rounding = Rounding::Floor);

    bool passthrough() const { return bits >= 32; }
    /// 2^(b-1) - 1.
    double levels() const;
    double scale() const;
};

double scale_factor(double clip, int bits);

double quantize(double r, const QuantParams& params);

std::vector<double> fake_quant_forward(std::span<const double> x, const QuantParams& params);
void fake_quant_inplace(std::span<double> x, const QuantParams& params);

/// Straight-through estimator: passes `grad` where |x| <= c, zero elsewhere.
std::vector<double> fake_quant_backward(std::span<const double> x, std::span<const double> grad,
                                        const QuantParams& params);

inline constexpr int kCalibrationBins = 128;

/// D_KL(hist(r) || hist(Q(r))) on a shared histogram spanning [-max|r|, max|r|].
double quantization_kl(std::span<const double> values, const QuantParams& params,
                       int bins = kCalibrationBins);

struct ClipCalibration {
    double clip = 0.0;
    double kl = 0.0;
    bool degenerate = false;  // sample was all zeros; smallest candidate returned
    std::vector<double> candidates;  // ascending
    std::vector<double> kl_per_candidate;
};

/// KL-minimal clip among `candidates`; ties resolve toward the smaller clip.
ClipCalibration calibrate_clip(std::span<const double> values, int bits,
                               std::span<const double> candidates,
                               Rounding rounding = Rounding::Floor);

/// Magnitude percentiles used as the default clip grid.
std::vector<double> percentile_candidates(std::span<const double> values,
                                          std::span<const double> percentiles);
std::vector<double> default_clip_candidates(std::span<const double> values);

}  // namespace eenas
