#include "eenas/toy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <numeric>
#include <string>

#include "eenas/error.hpp"
#include "eenas/rng.hpp"

namespace eenas {

void Dataset::push(std::span<const double> x, int label) {
    require(x.size() == dim, ErrorCode::InvalidArgument, "dataset row has the wrong width");
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
}

Dataset make_toy_dataset(const ToyDataConfig& config) {
    require(config.classes >= 2 && config.dim >= 1 && config.samples >= 1,
            ErrorCode::InvalidArgument, "toy dataset: malformed config");
    Rng rng(config.seed);
    std::vector<std::vector<double>> centers(config.classes, std::vector<double>(config.dim));
    for (auto& c : centers) {
        double norm = 0.0;
        for (double& v : c) {
            v = standard_normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : c) v *= config.center_radius / norm;
    }
    Dataset d;
    d.dim = config.dim;
    d.classes = config.classes;
    std::vector<double> x(config.dim);
    for (std::size_t i = 0; i < config.samples; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(config.classes));
        const double noise = bernoulli(rng, config.easy_fraction) ? config.easy_noise
                                                                  : config.hard_noise;
        for (std::size_t k = 0; k < config.dim; ++k) {
            x[k] = centers[label][k] + noise * standard_normal(rng);
        }
        d.push(x, label);
    }
    return d;
}

Dataset make_blobs(std::size_t samples, std::size_t dim, double separation, std::uint64_t seed) {
    require(dim >= 1 && samples >= 2, ErrorCode::InvalidArgument, "blobs: malformed config");
    Rng rng(seed);
    Dataset d;
    d.dim = dim;
    d.classes = 2;
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < samples; ++i) {
        const int label = static_cast<int>(i % 2);
        for (std::size_t k = 0; k < dim; ++k) x[k] = 0.5 * standard_normal(rng);
        x[0] += label == 0 ? -separation / 2.0 : separation / 2.0;
        d.push(x, label);
    }
    return d;
}

DatasetSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::InvalidArgument,
            "split: test fraction must be in (0, 1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

    Rng rng(seed);
    DatasetSplit out;
    out.train.dim = out.test.dim = data.dim;
    out.train.classes = out.test.classes = data.classes;
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& [label, idx] : by_class) {
        require(idx.size() >= 2, ErrorCode::InvalidArgument,
                "dataset too small for the split: class " + std::to_string(label) +
                    " has fewer than 2 samples");
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
        }
        const std::size_t n_test = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(test_fraction * double(idx.size()))));
        test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + n_test);
        train_idx.insert(train_idx.end(), idx.begin() + n_test, idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    for (std::size_t i : train_idx) out.train.push(data.row(i), data.labels[i]);
    for (std::size_t i : test_idx) out.test.push(data.row(i), data.labels[i]);
    return out;
}

// ---------------------------------------------------------------------------
// ToyNetwork
// ---------------------------------------------------------------------------

struct ToyNetwork::Trace {
    std::vector<std::vector<double>> input;  // per layer
    std::vector<std::vector<double>> z;      // pre-activation
    std::vector<std::vector<double>> a;      // post-activation, before quantization
    std::vector<std::vector<double>> y;      // layer output
};

ToyNetwork::Dense ToyNetwork::make_dense(std::size_t in, std::size_t out, int bits, bool relu6) {
    Dense d;
    d.in = in;
    d.out = out;
    d.bits = bits;
    d.relu6 = relu6;
    d.w = params_.size();
    params_.resize(params_.size() + in * out, 0.0);
    d.b = params_.size();
    params_.resize(params_.size() + out, 0.0);
    return d;
}

ToyNetwork::ToyNetwork(const EennArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    const BackboneSpec& bb = *arch.backbone;
    for (const auto& blk : bb.blocks) {
        require(blk.kind == BlockKind::Linear, ErrorCode::InvalidArgument,
                "toy network needs a backbone made of linear blocks");
    }
    input_dim_ = bb.input.elements();
    classes_ = bb.num_classes;

    std::vector<std::size_t> exit_at_mount(bb.mount_points().size(), 0);
    for (std::size_t e = 0; e < arch.exits.size(); ++e) {
        exit_at_mount[*bb.mount_index(arch.exits[e].mount)] = e + 1;
    }

    std::size_t width = input_dim_;
    std::size_t mount = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pending;  // (exit index, backbone layer)
    for (const auto& blk : bb.blocks) {
        for (int r = 0; r < blk.repetition; ++r) {
            layers_.push_back(make_dense(width, static_cast<std::size_t>(blk.channels),
                                         arch.quant.backbone_bits, true));
            width = static_cast<std::size_t>(blk.channels);
            if (!blk.mounts.empty()) {
                if (exit_at_mount[mount] != 0) pending.emplace_back(exit_at_mount[mount], layers_.size() - 1);
                ++mount;
            }
        }
    }
    backbone_layers_ = layers_.size();

    for (const auto& [exit_index, layer] : pending) {
        const ExitSpec& ex = arch.exits[exit_index - 1];
        const int bits = arch.quant.exit_bits[exit_index - 1];
        Head h;
        h.after_layer = layer;
        const std::size_t in = layers_[layer].out;
        const auto classes = static_cast<std::size_t>(classes_);
        if (ex.head.linear_layers == 2) {
            const auto hidden = static_cast<std::size_t>(ex.head.hidden_width);
            h.layers.push_back(layers_.size());
            layers_.push_back(make_dense(in, hidden, bits, true));
            h.layers.push_back(layers_.size());
            layers_.push_back(make_dense(hidden, classes, bits, false));
        } else {
            h.layers.push_back(layers_.size());
            layers_.push_back(make_dense(in, classes, bits, false));
        }
        heads_.push_back(std::move(h));
    }

    Rng rng(seed);
    for (const Dense& d : layers_) {
        const double stddev = std::sqrt(2.0 / double(d.in));
        for (std::size_t k = 0; k < d.in * d.out; ++k) params_[d.w + k] = stddev * standard_normal(rng);
    }
}

std::vector<double> ToyNetwork::effective_weights(const Dense& d) const {
    std::vector<double> w(params_.begin() + static_cast<std::ptrdiff_t>(d.w),
                          params_.begin() + static_cast<std::ptrdiff_t>(d.w + d.in * d.out));
    if (quantized_ && d.bits < kUnquantizedBits && d.weight_clip > 0.0) {
        fake_quant_inplace(w, QuantParams::make(d.weight_clip, d.bits));
    }
    return w;
}

namespace {

void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::vector<double>& z) {
    const std::size_t out = b.size();
    const std::size_t in = x.size();
    z.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        const double* row = w.data() + o * in;
        for (std::size_t k = 0; k < in; ++k) s += row[k] * x[k];
        z[o] = s;
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

ToyNetwork::LossResult ToyNetwork::loss_and_gradient(const Dataset& data,
                                                     std::span<const std::size_t> batch,
                                                     std::span<const double> lambda,
                                                     std::vector<double>* grad) const {
    require(data.dim == input_dim_, ErrorCode::InvalidArgument,
            "dataset feature width does not match the toy backbone input");
    require(lambda.size() == m(), ErrorCode::InvalidArgument, "one lambda per exit required");
    require(!batch.empty(), ErrorCode::InvalidArgument, "empty batch");

    std::vector<std::vector<double>> weights(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) weights[l] = effective_weights(layers_[l]);

    auto act_params = [&](const Dense& d) -> std::optional<QuantParams> {
        if (!quantized_ || !d.relu6 || d.bits >= kUnquantizedBits || d.act_clip <= 0.0)
            return std::nullopt;
        return QuantParams::make(d.act_clip, d.bits);
    };

    if (grad) grad->assign(params_.size(), 0.0);
    LossResult res;
    res.exit_losses.assign(m(), 0.0);
    const double inv_batch = 1.0 / double(batch.size());

    Trace t;
    t.input.resize(layers_.size());
    t.z.resize(layers_.size());
    t.a.resize(layers_.size());
    t.y.resize(layers_.size());
    std::vector<std::vector<double>> dy(layers_.size());

    auto run_layer = [&](std::size_t l, std::span<const double> in) {
        const Dense& d = layers_[l];
        t.input[l].assign(in.begin(), in.end());
        dense_forward(weights[l], std::span<const double>(params_.data() + d.b, d.out), in, t.z[l]);
        t.a[l] = t.z[l];
        if (d.relu6) {
            for (double& v : t.a[l]) v = std::clamp(v, 0.0, 6.0);
        }
        t.y[l] = t.a[l];
        if (const auto qp = act_params(d)) fake_quant_inplace(t.y[l], *qp);
    };

    // Backward through one layer given dL/dy; returns dL/dinput.
    auto back_layer = [&](std::size_t l, const std::vector<double>& dout) {
        const Dense& d = layers_[l];
        std::vector<double> dz = dout;
        if (const auto qp = act_params(d)) {
            for (std::size_t o = 0; o < d.out; ++o) {
                if (std::abs(t.a[l][o]) > qp->clip) dz[o] = 0.0;
            }
        }
        if (d.relu6) {
            for (std::size_t o = 0; o < d.out; ++o) {
                if (!(t.z[l][o] > 0.0 && t.z[l][o] < 6.0)) dz[o] = 0.0;
            }
        }
        const bool wq = quantized_ && d.bits < kUnquantizedBits && d.weight_clip > 0.0;
        std::vector<double> din(d.in, 0.0);
        auto& g = *grad;
        for (std::size_t o = 0; o < d.out; ++o) {
            if (dz[o] == 0.0) continue;
            g[d.b + o] += dz[o];
            const double* wrow = weights[l].data() + o * d.in;
            for (std::size_t k = 0; k < d.in; ++k) {
                const std::size_t idx = d.w + o * d.in + k;
                if (!wq || std::abs(params_[idx]) <= d.weight_clip) g[idx] += dz[o] * t.input[l][k];
                din[k] += wrow[k] * dz[o];
            }
        }
        return din;
    };

    for (std::size_t s : batch) {
        const int label = data.labels[s];
        std::span<const double> in = data.row(s);
        for (std::size_t l = 0; l < backbone_layers_; ++l) {
            run_layer(l, in);
            in = t.y[l];
        }
        for (std::size_t l = 0; l < backbone_layers_; ++l) dy[l].assign(layers_[l].out, 0.0);

        for (std::size_t e = 0; e < m(); ++e) {
            const Head& h = heads_[e];
            std::span<const double> hin = t.y[h.after_layer];
            for (std::size_t l : h.layers) {
                run_layer(l, hin);
                hin = t.y[l];
            }
            const auto p = softmax(t.y[h.layers.back()]);
            const double ce = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
            res.exit_losses[e] += ce * inv_batch;
            if (!grad) continue;

            std::vector<double> d = p;
            d[static_cast<std::size_t>(label)] -= 1.0;
            for (double& v : d) v *= lambda[e] * inv_batch;
            for (auto it = h.layers.rbegin(); it != h.layers.rend(); ++it) d = back_layer(*it, d);
            for (std::size_t k = 0; k < d.size(); ++k) dy[h.after_layer][k] += d[k];
        }
        if (!grad) continue;
        for (std::size_t l = backbone_layers_; l-- > 0;) {
            auto din = back_layer(l, dy[l]);
            if (l > 0) {
                for (std::size_t k = 0; k < din.size(); ++k) dy[l - 1][k] += din[k];
            }
        }
    }
    res.total = scalarized_loss(res.exit_losses, lambda);
    return res;
}

std::vector<std::vector<double>> ToyNetwork::exit_probabilities(std::span<const double> x) const {
    require(x.size() == input_dim_, ErrorCode::InvalidArgument, "sample width mismatch");
    auto act = [&](const Dense& d, std::vector<double>& v) {
        if (d.relu6) {
            for (double& e : v) e = std::clamp(e, 0.0, 6.0);
        }
        if (quantized_ && d.relu6 && d.bits < kUnquantizedBits && d.act_clip > 0.0) {
            fake_quant_inplace(v, QuantParams::make(d.act_clip, d.bits));
        }
    };
    std::vector<std::vector<double>> outputs(backbone_layers_);
    std::vector<double> cur(x.begin(), x.end()), z;
    for (std::size_t l = 0; l < backbone_layers_; ++l) {
        const Dense& d = layers_[l];
        const auto w = effective_weights(d);
        dense_forward(w, std::span<const double>(params_.data() + d.b, d.out), cur, z);
        act(d, z);
        outputs[l] = z;
        cur = z;
    }
    std::vector<std::vector<double>> probs;
    for (const Head& h : heads_) {
        std::vector<double> v = outputs[h.after_layer];
        for (std::size_t l : h.layers) {
            const Dense& d = layers_[l];
            const auto w = effective_weights(d);
            dense_forward(w, std::span<const double>(params_.data() + d.b, d.out), v, z);
            act(d, z);
            v = z;
        }
        probs.push_back(softmax(v));
    }
    return probs;
}

void ToyNetwork::calibrate(const Dataset& data, std::size_t max_samples) {
    require(data.dim == input_dim_, ErrorCode::InvalidArgument, "calibration data width mismatch");
    quantized_ = false;
    const std::size_t n = std::min(max_samples, data.size());
    std::vector<std::vector<double>> acts(layers_.size());
    std::vector<double> cur, z;
    for (std::size_t s = 0; s < n; ++s) {
        cur.assign(data.row(s).begin(), data.row(s).end());
        std::vector<std::vector<double>> outputs(backbone_layers_);
        for (std::size_t l = 0; l < backbone_layers_; ++l) {
            const Dense& d = layers_[l];
            dense_forward(effective_weights(d), std::span<const double>(params_.data() + d.b, d.out),
                          cur, z);
            for (double& e : z) e = std::clamp(e, 0.0, 6.0);
            acts[l].insert(acts[l].end(), z.begin(), z.end());
            outputs[l] = z;
            cur = z;
        }
        for (const Head& h : heads_) {
            std::vector<double> v = outputs[h.after_layer];
            for (std::size_t l : h.layers) {
                const Dense& d = layers_[l];
                dense_forward(effective_weights(d),
                              std::span<const double>(params_.data() + d.b, d.out), v, z);
                if (d.relu6) {
                    for (double& e : z) e = std::clamp(e, 0.0, 6.0);
                    acts[l].insert(acts[l].end(), z.begin(), z.end());
                }
                v = z;
            }
        }
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Dense& d = layers_[l];
        if (d.bits >= kUnquantizedBits) continue;
        std::span<const double> w(params_.data() + d.w, d.in * d.out);
        d.weight_clip = calibrate_clip(w, d.bits, default_clip_candidates(w)).clip;
        if (d.relu6 && !acts[l].empty()) {
            d.act_clip = calibrate_clip(acts[l], d.bits, default_clip_candidates(acts[l])).clip;
        }
    }
    quantized_ = true;
}

EvaluationReport evaluate_toy(const ToyNetwork& net, const Dataset& test,
                              std::span<const double> thresholds, double tau) {
    require(test.size() > 0, ErrorCode::InvalidArgument, "empty evaluation set");
    std::vector<std::size_t> decisions;
    std::vector<char> correct;
    std::vector<double> conf(net.m());
    for (std::size_t s = 0; s < test.size(); ++s) {
        const auto probs = net.exit_probabilities(test.row(s));
        for (std::size_t e = 0; e < net.m(); ++e) {
            conf[e] = *std::max_element(probs[e].begin(), probs[e].end());
        }
        const std::size_t exit = exit_decision(conf, thresholds);
        const auto& p = probs[exit - 1];
        const auto pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        decisions.push_back(exit);
        correct.push_back(pred == test.labels[s] ? 1 : 0);
    }
    std::vector<bool> ok(correct.begin(), correct.end());
    std::unique_ptr<bool[]> flags(new bool[ok.size()]);
    for (std::size_t i = 0; i < ok.size(); ++i) flags[i] = ok[i];
    return report_from_decisions(decisions, std::span<const bool>(flags.get(), ok.size()), net.m(),
                                 tau);
}

ToyTrainingResult train_toy_detailed(const EennArchitecture& arch, const Dataset& data,
                                     const TrainingConfig& config) {
    config.validate(arch.m());
    require(data.size() >= 10, ErrorCode::InvalidArgument, "dataset too small for an 80/20 split");
    const DatasetSplit split = stratified_split(data, 0.2, mix_seed(config.seed));

    ToyNetwork net(arch, mix_seed(config.seed + 1));
    require(split.train.dim == data.dim, ErrorCode::InvalidArgument, "dataset width mismatch");

    const auto lambda = config.lambdas(arch.m());
    const bool needs_quant =
        arch.quant.backbone_bits < kUnquantizedBits ||
        std::any_of(arch.quant.exit_bits.begin(), arch.quant.exit_bits.end(),
                    [](int b) { return b < kUnquantizedBits; });

    Rng rng(mix_seed(config.seed + 2));
    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> velocity(net.parameter_count(), 0.0);
    std::vector<double> grad;

    ToyTrainingResult out;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (needs_quant && epoch == config.calibration_epoch) {
            net.calibrate(split.train, config.calibration_samples);
        }
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            const auto res = net.loss_and_gradient(split.train, batch, lambda, &grad);
            if (!std::isfinite(res.total)) {
                fail(ErrorCode::Divergence,
                     "toy training diverged at epoch " + std::to_string(epoch));
            }
            auto params = net.parameters();
            for (std::size_t k = 0; k < params.size(); ++k) {
                const double g = grad[k] + config.weight_decay * params[k];
                velocity[k] = config.momentum * velocity[k] + g;
                params[k] -= config.learning_rate * velocity[k];
            }
            epoch_loss += res.total;
            ++batches;
        }
        out.epoch_loss.push_back(epoch_loss / double(batches));
    }
    if (needs_quant && config.calibration_epoch >= config.epochs) {
        net.calibrate(split.train, config.calibration_samples);
    }

    const auto thresholds = config.thresholds(arch.m());
    out.report = evaluate_toy(net, split.test, thresholds, config.tau);

    std::size_t hits = 0;
    for (std::size_t s = 0; s < split.test.size(); ++s) {
        const auto probs = net.exit_probabilities(split.test.row(s));
        const auto& p = probs.back();
        const auto pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        hits += pred == split.test.labels[s] ? 1 : 0;
    }
    out.test_accuracy_last_exit = 100.0 * double(hits) / double(split.test.size());
    return out;
}

EvaluationReport train_toy(const EennArchitecture& arch, const Dataset& data,
                           const TrainingConfig& config) {
    return train_toy_detailed(arch, data, config).report;
}

}  // namespace eenas
