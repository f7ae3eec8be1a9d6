#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "eenas/backbone_io.hpp"
#include "eenas/error.hpp"
#include "eenas/rng.hpp"
#include "eenas/toy.hpp"

using namespace eenas;

namespace {

EennArchitecture dense_arch(std::size_t in, std::vector<int> widths, int classes,
                            std::vector<std::pair<std::string, ExitHeadSpec>> exits, int bits) {
    EennArchitecture a;
    a.backbone = std::make_shared<BackboneSpec>(toy_dense_backbone(int(in), widths, classes));
    for (auto& [m, h] : exits) a.exits.push_back({m, h});
    a.quant.backbone_bits = bits;
    a.quant.exit_bits.assign(exits.size(), bits);
    return a;
}

const ExitHeadSpec kLinear{1, 1, 128, Activation::ReLU6};

// Relative gradient error between analytic and central differences.
double gradient_error(ToyNetwork& net, const Dataset& data, double h) {
    std::vector<std::size_t> batch(data.size());
    std::iota(batch.begin(), batch.end(), 0);
    const std::vector<double> lambda(net.m(), 1.0);
    std::vector<double> grad;
    net.loss_and_gradient(data, batch, lambda, &grad);
    auto p = net.parameters();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = net.loss_and_gradient(data, batch, lambda, nullptr).total;
        p[i] = keep - h;
        const double dn = net.loss_and_gradient(data, batch, lambda, nullptr).total;
        p[i] = keep;
        const double fd = (up - dn) / (2 * h);
        num += (fd - grad[i]) * (fd - grad[i]);
        den = std::max({den, fd * fd, grad[i] * grad[i]});
    }
    return std::sqrt(num) / std::sqrt(den);
}

}  // namespace

TEST_CASE("toy dataset shape and labels") {
    ToyDataConfig cfg;
    cfg.samples = 400;
    const auto d = make_toy_dataset(cfg);
    CHECK(d.size() == 400);
    CHECK(d.dim == 16);
    CHECK(d.features.size() == 400 * 16);
    std::map<int, int> per_class;
    for (int y : d.labels) ++per_class[y];
    CHECK(per_class.size() == 4);
    CHECK(make_toy_dataset(cfg).features == d.features);
}

TEST_CASE("stratified split keeps every class on both sides") {
    const auto d = make_blobs(103, 4, 4.0, 2);
    const auto s = stratified_split(d, 0.2, 9);
    CHECK(s.train.size() + s.test.size() == d.size());
    std::map<int, int> total, test;
    for (int y : d.labels) ++total[y];
    for (int y : s.test.labels) ++test[y];
    for (const auto& [y, n] : total) CHECK(test[y] == std::max(1, int(std::floor(0.2 * n))));
    Dataset tiny;
    tiny.dim = 1;
    const double x = 0.0;
    tiny.push({&x, 1}, 0);
    tiny.classes = 1;
    CHECK_THROWS_AS(stratified_split(tiny, 0.2, 1), Error);
}

TEST_CASE("parameter count of a dense early-exit net") {
    const auto a = dense_arch(5, {7, 6}, 3, {{"A", {1, 2, 4, Activation::ReLU6}}, {"B", kLinear}},
                              kUnquantizedBits);
    ToyNetwork net(a, 1);
    // 5x7+7, 7x6+6, head A: 7x4+4, 4x3+3, head B: 6x3+3.
    CHECK(net.parameter_count() == 42u + 48 + 32 + 15 + 21);
    CHECK(net.m() == 2);
}

TEST_CASE("exit probabilities are distributions") {
    const auto a = dense_arch(4, {8, 8, 8}, 3, {{"A", kLinear}, {"C", kLinear}}, 8);
    ToyNetwork net(a, 3);
    const auto d = make_blobs(20, 4, 3.0, 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto probs = net.exit_probabilities(d.row(i));
        REQUIRE(probs.size() == 2);
        for (const auto& p : probs) {
            CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("gradient check on a twelve-parameter two-exit net") {
    const auto a = dense_arch(1, {1, 1}, 2, {{"A", kLinear}, {"B", kLinear}}, kUnquantizedBits);
    ToyNetwork net(a, 5);
    CHECK(net.parameter_count() == 12);
    // Zero-initialized biases put some pre-activations exactly on the ReLU
    // kink, where finite differences see one side only.
    Rng rng(7);
    for (double& p : net.parameters()) p = 0.7 * standard_normal(rng);
    Dataset d;
    d.dim = 1;
    d.classes = 2;
    for (double x : {-1.3, -0.4, 0.2, 0.9, 1.7}) d.push({&x, 1}, x > 0 ? 1 : 0);
    CHECK(gradient_error(net, d, 1e-5) <= 1e-3);
}

TEST_CASE("scalarized gradient is the lambda-weighted sum of exit gradients") {
    const auto a = dense_arch(3, {5, 4}, 2, {{"A", kLinear}, {"B", kLinear}}, kUnquantizedBits);
    ToyNetwork net(a, 8);
    const auto d = make_blobs(12, 3, 2.0, 4);
    std::vector<std::size_t> batch(d.size());
    std::iota(batch.begin(), batch.end(), 0);
    // Weights must stay positive, so exit gradients come from two solves:
    // G1 = 2 g(1,1) - g(1,2), G2 = g(1,2) - g(1,1).
    std::vector<double> g11, g12, gs;
    net.loss_and_gradient(d, batch, std::vector<double>{1.0, 1.0}, &g11);
    net.loss_and_gradient(d, batch, std::vector<double>{1.0, 2.0}, &g12);
    const auto res = net.loss_and_gradient(d, batch, std::vector<double>{2.0, 0.5}, &gs);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const double G1 = 2.0 * g11[i] - g12[i], G2 = g12[i] - g11[i];
        CHECK(gs[i] == doctest::Approx(2.0 * G1 + 0.5 * G2).epsilon(1e-9));
    }
    CHECK(res.total == doctest::Approx(2.0 * res.exit_losses[0] + 0.5 * res.exit_losses[1]));
}

TEST_CASE("calibration enables quantization") {
    const auto a = dense_arch(4, {8, 8}, 2, {{"A", kLinear}, {"B", kLinear}}, 4);
    ToyNetwork net(a, 2);
    CHECK_FALSE(net.quantized());
    const auto d = make_blobs(64, 4, 3.0, 3);
    net.calibrate(d, 32);
    CHECK(net.quantized());
}

TEST_CASE("blobs are learned by a single-exit net") {
    const auto d = make_blobs(400, 4, 6.0, 11);
    const auto a = dense_arch(4, {16}, 2, {{"A", kLinear}}, 8);
    TrainingConfig tc;
    tc.epochs = 50;
    tc.learning_rate = 0.01;
    tc.batch_size = 32;
    const auto r = train_toy(a, d, tc);
    CHECK(r.acc_avg >= 95.0);
}

TEST_CASE("training is deterministic and tau near 1 sends samples last") {
    ToyDataConfig dc;
    dc.samples = 300;
    const auto d = make_toy_dataset(dc);
    const auto a = dense_arch(16, {32, 32}, 4, {{"A", kLinear}, {"B", kLinear}}, 8);
    TrainingConfig tc;
    tc.epochs = 4;
    tc.learning_rate = 0.02;
    tc.batch_size = 32;
    const auto r1 = train_toy_detailed(a, d, tc);
    const auto r2 = train_toy_detailed(a, d, tc);
    CHECK(r1.report == r2.report);
    CHECK(r1.epoch_loss == r2.epoch_loss);
    tc.tau = 0.9999;
    const auto r3 = train_toy(a, d, tc);
    CHECK(r3.er.back() >= 0.95);
}

TEST_CASE("divergence is reported with its epoch") {
    const auto d = make_blobs(100, 4, 3.0, 1);
    const auto a = dense_arch(4, {8}, 2, {{"A", kLinear}}, kUnquantizedBits);
    TrainingConfig tc;
    tc.epochs = 5;
    tc.learning_rate = 1e300;
    tc.momentum = 0.0;
    try {
        train_toy(a, d, tc);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Divergence);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("toy trainer needs a dense backbone") {
    EennArchitecture a;
    a.backbone = std::make_shared<BackboneSpec>(mobilenetv2_cifar10());
    a.exits = {{"K", {4, 1, 128, Activation::ReLU6}}};
    a.quant = {8, {8}, {}};
    CHECK_THROWS_AS(ToyNetwork(a, 0), Error);
}
