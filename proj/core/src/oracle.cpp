#include "eenas/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eenas/error.hpp"

namespace eenas {

void OracleConfig::validate() const {
    require(confidence_efficiency > 0.0, ErrorCode::Config, "oracle: rho must be > 0");
    require(capacity_exponent > 0.0, ErrorCode::Config, "oracle: gamma must be > 0");
    require(depth_bonus >= 0.0, ErrorCode::Config, "oracle: depth bonus must be >= 0");
    require(accuracy_slope >= 0.0, ErrorCode::Config, "oracle: slope must be >= 0");
    require(jitter >= 0.0 && jitter < 1.0, ErrorCode::Config, "oracle: jitter in [0, 1)");
    require(tau > 0.0 && tau < 1.0, ErrorCode::Config, "oracle: tau in (0, 1)");
    require(nominal_samples >= 1, ErrorCode::Config, "oracle: nominal sample count must be >= 1");
    require(!mixture.empty(), ErrorCode::Config, "oracle: empty difficulty mixture");
    double w = 0.0;
    for (const auto& b : mixture) {
        require(b.weight > 0.0 && b.hi > b.lo, ErrorCode::Config, "oracle: malformed mixture band");
        w += b.weight;
    }
    require(std::abs(w - 1.0) <= 1e-12, ErrorCode::Config, "oracle: mixture weights must sum to 1");
}

double difficulty_cdf(const OracleConfig& config, double x) {
    double f = 0.0;
    for (const auto& b : config.mixture) {
        f += b.weight * std::clamp((x - b.lo) / (b.hi - b.lo), 0.0, 1.0);
    }
    return f;
}

double difficulty_partial_mean(const OracleConfig& config, double lo, double hi) {
    double s = 0.0;
    for (const auto& b : config.mixture) {
        const double a = std::clamp(lo, b.lo, b.hi);
        const double c = std::clamp(hi, b.lo, b.hi);
        s += b.weight / (b.hi - b.lo) * (c * c - a * a) / 2.0;
    }
    return s;
}

namespace {

double bit_factor(int bits) {
    if (bits >= kUnquantizedBits) return 1.0;
    return 1.0 - std::ldexp(1.0, -bits);
}

double exit_jitter(std::uint64_t seed, std::size_t mount, const ExitHeadSpec& head, int bits) {
    std::uint64_t h = mix_seed(seed);
    h = mix_seed(h ^ mount);
    h = mix_seed(h ^ static_cast<std::uint64_t>(head.linear_layers));
    h = mix_seed(h ^ static_cast<std::uint64_t>(head.hidden_width));
    h = mix_seed(h ^ static_cast<std::uint64_t>(head.pooled_size));
    h = mix_seed(h ^ static_cast<std::uint64_t>(bits));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Largest-remainder rounding of er * n.
std::vector<std::uint64_t> apportion(const std::vector<double>& er, std::uint64_t n) {
    std::vector<std::uint64_t> counts(er.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::uint64_t used = 0;
    for (std::size_t i = 0; i < er.size(); ++i) {
        const double exact = er[i] * double(n);
        counts[i] = static_cast<std::uint64_t>(std::floor(exact));
        used += counts[i];
        rem.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < n && k < rem.size(); ++k) {
        if (er[rem[k].second] > 0.0) {
            ++counts[rem[k].second];
            ++used;
        }
    }
    return counts;
}

}  // namespace

EvaluationReport synthetic_oracle(const EennArchitecture& arch, const OracleConfig& config,
                                  std::uint64_t seed) {
    config.validate();
    const LayerGraph graph = expand_layers(arch);
    const std::size_t m = graph.m();

    std::uint64_t backbone_total = 0;
    for (const auto& n : graph.nodes) {
        if (!n.segment.is_exit()) backbone_total += n.macs;
    }
    auto backbone_macs_upto = [&](std::size_t mount) {
        std::uint64_t s = 0;
        for (const auto& n : graph.nodes) {
            if (!n.segment.is_exit() && n.segment.index <= static_cast<int>(mount)) s += n.macs;
        }
        return s;
    };

    const double bb_factor = bit_factor(arch.quant.backbone_bits);
    std::vector<double> kappa(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& ex = graph.exits[i];
        const double f = backbone_total == 0
                             ? 1.0
                             : double(backbone_macs_upto(ex.mount_position)) / double(backbone_total);
        const ExitHeadSpec& head = arch.exits[i].head;
        double k = std::pow(f, config.capacity_exponent) *
                   (1.0 + config.depth_bonus * (head.linear_layers - 1)) *
                   bit_factor(arch.quant.exit_bits[i]) * bb_factor;
        if (i + 1 < m) {
            k *= 1.0 + config.jitter *
                           exit_jitter(seed, ex.mount_position, head, arch.quant.exit_bits[i]);
        }
        kappa[i] = std::max(k, 1e-9);
    }

    // Difficulty bands: exit i takes (D_{i-1}, D_i], the last exit the rest.
    std::vector<double> upper(m);
    double running = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        running = std::max(running, config.confidence_efficiency * kappa[i]);
        upper[i] = running;
    }
    upper[m - 1] = std::numeric_limits<double>::infinity();

    std::vector<double> er(m);
    std::vector<std::optional<double>> acc(m);
    double lo = -std::numeric_limits<double>::infinity();
    double cdf_lo = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double hi = upper[i];
        const double cdf_hi = i + 1 == m ? 1.0 : difficulty_cdf(config, hi);
        er[i] = std::max(cdf_hi - cdf_lo, 0.0);
        if (er[i] > 0.0) {
            const double mean = difficulty_partial_mean(config, lo, hi) / er[i];
            acc[i] = 100.0 * std::clamp(1.0 - config.accuracy_slope * mean / kappa[i], 0.0, 1.0);
        }
        lo = hi;
        cdf_lo = cdf_hi;
    }
    // ER telescopes from 0 to 1; renormalize only the rounding residue.
    const double total = std::accumulate(er.begin(), er.end(), 0.0);
    for (double& e : er) e /= total;

    auto counts = apportion(er, config.nominal_samples);
    return make_report(config.tau, std::move(acc), std::move(er), std::move(counts));
}

}  // namespace eenas
