#include "eenas/predict.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eenas/error.hpp"
#include "eenas/report_io.hpp"
#include "json.hpp"

namespace eenas {

using nlohmann::json;

bool LabeledSet::upsert(LabeledRecord record) {
    record.chromosome = record.chromosome.canonical();
    const std::uint64_t h = record.chromosome.hash();
    if (auto it = index_.find(h); it != index_.end()) {
        records_[it->second] = std::move(record);
        return false;
    }
    index_.emplace(h, records_.size());
    records_.push_back(std::move(record));
    return true;
}

const LabeledRecord* LabeledSet::find(std::uint64_t hash) const {
    const auto it = index_.find(hash);
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::string LabeledSet::to_jsonl() const {
    std::string out;
    for (const auto& r : records_) {
        json j = {{"hash", r.chromosome.hash_hex()},
                  {"genes", r.chromosome.genes()},
                  {"acc_avg", r.acc_avg},
                  {"et_avg", r.et_avg},
                  {"er_last", r.er_last},
                  {"iteration", r.iteration}};
        out += j.dump() + "\n";
    }
    return out;
}

LabeledSet LabeledSet::from_jsonl(const std::string& text, const std::string& source) {
    LabeledSet set;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        try {
            const json j = json::parse(line);
            LabeledRecord r;
            r.chromosome = Chromosome(j.at("genes").get<std::vector<int>>());
            r.acc_avg = j.at("acc_avg").get<double>();
            r.et_avg = j.at("et_avg").get<double>();
            r.er_last = j.value("er_last", 0.0);
            r.iteration = j.value("iteration", 0);
            if (j.contains("hash")) {
                require(j["hash"].get<std::string>() == r.chromosome.hash_hex(), ErrorCode::Parse,
                        where + ": hash does not match genes");
            }
            set.upsert(std::move(r));
        } catch (const json::exception& e) {
            fail(ErrorCode::Parse, where + ": " + e.what());
        }
    }
    return set;
}

void LabeledSet::save(const std::string& path) const { write_file_atomic(path, to_jsonl()); }

LabeledSet LabeledSet::load(const std::string& path) { return from_jsonl(read_file(path), path); }

FeatureMap::FeatureMap(const SearchSpace& space) : space_(space), H_(space.H()) {
    space.validate();
    // Backbone MACs accumulated up to each mount, from the static graph.
    const Chromosome single = Chromosome::single_exit(H_);
    const LayerGraph g = expand_layers(decode(single, space));
    const std::size_t mounts = H_ + 1;
    std::vector<double> per(mounts, 0.0);
    double total = 0.0;
    for (const auto& n : g.nodes) {
        if (n.segment.is_exit()) continue;
        per[static_cast<std::size_t>(n.segment.index)] += double(n.macs);
        total += double(n.macs);
    }
    double acc = 0.0;
    for (double v : per) {
        acc += v;
        fractions_.push_back(total > 0.0 ? acc / total : 0.0);
    }
}

std::vector<double> FeatureMap::operator()(const Chromosome& chrom) const {
    require(chrom.genes().size() == Chromosome::length_for(H_), ErrorCode::InvalidArgument,
            "chromosome length does not match the feature map");
    std::vector<double> f(length(), 0.0);
    const std::size_t occ = 1, frac = occ + H_, depth = frac + H_, bits = depth + H_ + 1;
    f[0] = double(chrom.exit_count());
    auto head_depth = [&](int idx) {
        return double(space_.head_options.at(static_cast<std::size_t>(idx)).linear_layers);
    };
    auto head_bits = [&](int idx) {
        return double(space_.quant_bits.at(static_cast<std::size_t>(idx))) / 8.0;
    };
    for (std::size_t h = 0; h < H_; ++h) {
        if (!chrom.present(h)) continue;
        f[occ + h] = 1.0;
        f[frac + h] = fractions_[h];
        f[depth + h] = head_depth(chrom.head(h));
        f[bits + h] = head_bits(chrom.quant(h));
    }
    f[depth + H_] = head_depth(chrom.final_head());
    f[bits + H_] = head_bits(chrom.final_quant());
    f[length() - 1] = double(space_.backbone_bits) / 8.0;
    return f;
}

std::vector<double> featurize(const Chromosome& chrom, const SearchSpace& space) {
    return FeatureMap(space)(chrom);
}

double RidgeModel::predict(std::span<const double> x) const {
    require(x.size() == coef.size(), ErrorCode::InvalidArgument,
            "feature length " + std::to_string(x.size()) + " does not match the model (" +
                std::to_string(coef.size()) + ")");
    double y = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) y += coef[j] * (x[j] - mean[j]) / scale[j];
    return y;
}

RidgeModel fit_ridge(const std::vector<std::vector<double>>& X, std::span<const double> y,
                     double lambda) {
    const std::size_t n = X.size();
    require(n >= 2, ErrorCode::InvalidArgument, "ridge fit needs at least 2 records");
    require(y.size() == n, ErrorCode::InvalidArgument, "ridge fit: X/y length mismatch");
    require(lambda >= 0.0, ErrorCode::InvalidArgument, "ridge strength must be non-negative");
    const std::size_t d = X.front().size();
    for (const auto& row : X) {
        require(row.size() == d, ErrorCode::InvalidArgument, "ridge fit: ragged feature rows");
    }

    RidgeModel m;
    m.lambda = lambda;
    m.mean.assign(d, 0.0);
    m.scale.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (const auto& row : X) mu += row[j];
        mu /= double(n);
        double var = 0.0;
        for (const auto& row : X) var += (row[j] - mu) * (row[j] - mu);
        var /= double(n);
        m.mean[j] = mu;
        m.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    m.intercept = ybar;

    // Stacked system [Z; sqrt(lambda) I] w = [y - ybar; 0].
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Eigen::Index(n + d), Eigen::Index(d));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(n + d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            A(Eigen::Index(i), Eigen::Index(j)) = (X[i][j] - m.mean[j]) / m.scale[j];
        }
        b(Eigen::Index(i)) = y[i] - ybar;
    }
    const double root = std::sqrt(lambda);
    for (std::size_t j = 0; j < d; ++j) A(Eigen::Index(n + j), Eigen::Index(j)) = root;
    const Eigen::VectorXd w = A.completeOrthogonalDecomposition().solve(b);
    m.coef.assign(w.data(), w.data() + w.size());

    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = m.predict(X[i]) - y[i];
        mse += r * r;
    }
    m.train_mse = mse / double(n);
    return m;
}

double Predictor::predict(std::span<const double> features) const {
    require(features.size() == feature_length, ErrorCode::InvalidArgument,
            "feature length mismatch");
    const double raw = model.predict(features);
    if (kind == TargetKind::Et) return std::exp(raw);
    return std::clamp(raw, 0.0, 100.0);
}

Predictor fit(const LabeledSet& data, const FeatureMap& features, TargetKind kind,
              double lambda) {
    require(data.size() >= 2, ErrorCode::InvalidArgument,
            "predictor fit needs at least 2 labeled records");
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (const auto& r : data.records()) {
        X.push_back(features(r.chromosome));
        if (kind == TargetKind::Et) {
            require(r.et_avg > 0.0, ErrorCode::InvalidArgument, "ET targets must be positive");
            y.push_back(std::log(r.et_avg));
        } else {
            y.push_back(r.acc_avg);
        }
    }
    Predictor p;
    p.kind = kind;
    p.model = fit_ridge(X, y, lambda);
    p.feature_length = features.length();
    return p;
}

double predict(const Predictor& pred, const Chromosome& chrom, const FeatureMap& features) {
    return pred.predict(features(chrom));
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double rank = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && a.size() >= 2, ErrorCode::InvalidArgument,
            "spearman needs two equal-length samples of size >= 2");
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const double n = double(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace eenas
