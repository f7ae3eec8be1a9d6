#include "eenas/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eenas/error.hpp"

namespace eenas {

namespace {

// Grid points reproduced by k*c/L may land a few ulps below k after the
// round trip through t = x*L/c; this slack keeps them on their own grid point.
constexpr double kGridSlack = 1e-9;

}  // namespace

QuantParams QuantParams::make(double clip, int bits, Rounding rounding) {
    require(std::isfinite(clip) && clip > 0.0, ErrorCode::InvalidArgument,
            "clip must be positive and finite");
    require(bits >= 2, ErrorCode::InvalidArgument, "bit width must be >= 2");
    return {clip, bits, rounding};
}

double QuantParams::levels() const {
    return std::ldexp(1.0, bits - 1) - 1.0;
}

double QuantParams::scale() const {
    return clip / levels();
}

double scale_factor(double clip, int bits) {
    return QuantParams::make(clip, bits).scale();
}

double quantize(double r, const QuantParams& params) {
    if (params.passthrough() || std::isnan(r)) return r;
    const double c = params.clip;
    const double L = params.levels();
    const double x = std::clamp(r, -c, c);
    const double t = x * L / c;
    double k = params.rounding == Rounding::Floor ? std::floor(t + kGridSlack) : std::round(t);
    k = std::clamp(k, -L, L);
    return std::clamp(k * c / L, -c, c);
}

std::vector<double> fake_quant_forward(std::span<const double> x, const QuantParams& params) {
    std::vector<double> out(x.begin(), x.end());
    fake_quant_inplace(out, params);
    return out;
}

void fake_quant_inplace(std::span<double> x, const QuantParams& params) {
    if (params.passthrough()) return;
    for (double& v : x) v = quantize(v, params);
}

std::vector<double> fake_quant_backward(std::span<const double> x, std::span<const double> grad,
                                        const QuantParams& params) {
    require(x.size() == grad.size(), ErrorCode::InvalidArgument,
            "fake_quant_backward: size mismatch");
    std::vector<double> out(grad.begin(), grad.end());
    if (params.passthrough()) return out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > params.clip) out[i] = 0.0;
    }
    return out;
}

double quantization_kl(std::span<const double> values, const QuantParams& params, int bins) {
    require(!values.empty(), ErrorCode::InvalidArgument, "KL needs a nonempty sample");
    require(bins >= 2, ErrorCode::InvalidArgument, "KL needs at least 2 bins");
    double range = 0.0;
    for (double v : values) range = std::max(range, std::abs(v));
    if (range == 0.0) return 0.0;

    auto bin_of = [&](double v) {
        const double pos = (v + range) / (2.0 * range) * bins;
        return static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, double(bins - 1)));
    };
    std::vector<double> p(bins, 0.0), q(bins, 0.0);
    for (double v : values) {
        p[bin_of(v)] += 1.0;
        q[bin_of(quantize(v, params))] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    constexpr double eps = 1e-10;
    double kl = 0.0;
    for (int i = 0; i < bins; ++i) {
        if (p[i] == 0.0) continue;
        const double pi = p[i] / n;
        const double qi = std::max(q[i] / n, eps);
        kl += pi * std::log(pi / qi);
    }
    return std::max(kl, 0.0);
}

ClipCalibration calibrate_clip(std::span<const double> values, int bits,
                               std::span<const double> candidates, Rounding rounding) {
    require(!values.empty(), ErrorCode::InvalidArgument, "calibrate_clip: empty sample");
    require(!candidates.empty(), ErrorCode::InvalidArgument, "calibrate_clip: empty candidate grid");
    ClipCalibration out;
    out.candidates.assign(candidates.begin(), candidates.end());
    std::sort(out.candidates.begin(), out.candidates.end());
    for (double c : out.candidates) {
        require(std::isfinite(c) && c > 0.0, ErrorCode::InvalidArgument,
                "calibrate_clip: candidates must be positive");
    }

    const bool all_zero = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
        out.clip = out.candidates.front();
        out.degenerate = true;
        out.kl_per_candidate.assign(out.candidates.size(), 0.0);
        return out;
    }

    std::size_t best = 0;
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
        const double kl =
            quantization_kl(values, QuantParams::make(out.candidates[i], bits, rounding));
        out.kl_per_candidate.push_back(kl);
        if (kl < out.kl_per_candidate[best]) best = i;
    }
    out.clip = out.candidates[best];
    out.kl = out.kl_per_candidate[best];
    return out;
}

std::vector<double> percentile_candidates(std::span<const double> values,
                                          std::span<const double> percentiles) {
    require(!values.empty(), ErrorCode::InvalidArgument, "percentile_candidates: empty sample");
    std::vector<double> mags;
    mags.reserve(values.size());
    for (double v : values) mags.push_back(std::abs(v));
    std::sort(mags.begin(), mags.end());
    std::vector<double> out;
    for (double pct : percentiles) {
        // nearest-rank
        const double rank = std::ceil(pct / 100.0 * static_cast<double>(mags.size()));
        const std::size_t idx =
            static_cast<std::size_t>(std::clamp(rank, 1.0, double(mags.size()))) - 1;
        const double c = mags[idx];
        if (c > 0.0 && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> default_clip_candidates(std::span<const double> values) {
    static constexpr double kPercentiles[] = {90.0, 95.0, 99.0, 99.9, 100.0};
    auto out = percentile_candidates(values, kPercentiles);
    if (out.empty()) out.push_back(1.0);
    return out;
}

}  // namespace eenas
