#include <doctest.h>

#include <set>
#include <sstream>

#include "eenas/arch.hpp"
#include "eenas/backbone_io.hpp"
#include "eenas/error.hpp"
#include "oracles.hpp"

using namespace eenas;
using eenas::testing::dense_space;

namespace {

std::shared_ptr<const BackboneSpec> mbv2() {
    static const auto b = std::make_shared<const BackboneSpec>(mobilenetv2_cifar10());
    return b;
}

EennArchitecture mbv2_arch(std::vector<std::string> mounts, int bits = 8) {
    EennArchitecture a;
    a.backbone = mbv2();
    for (const auto& m : mounts) a.exits.push_back({m, ExitHeadSpec{}});
    a.quant.backbone_bits = 8;
    a.quant.exit_bits.assign(mounts.size(), bits);
    return a;
}

// Output side of a k x k convolution with padding p and stride s.
int conv_out(int in, int k, int p, int s) { return (in + 2 * p - k) / s + 1; }

}  // namespace

TEST_CASE("mobilenet table exposes mounts A..K") {
    const auto mounts = mbv2()->mount_points();
    REQUIRE(mounts.size() == 11);
    std::string labels;
    for (const auto& m : mounts) labels += m.label;
    CHECK(labels == "ABCDEFGHIJK");
    CHECK(mbv2()->optional_mounts() == 10);
    CHECK(mbv2()->mount_index("F") == 5u);
    CHECK_FALSE(mbv2()->mount_index("Z").has_value());
}

TEST_CASE("backbone text round trip") {
    std::ostringstream os;
    write_backbone(os, *mbv2());
    std::istringstream is(os.str());
    CHECK(parse_backbone(is) == *mbv2());
}

TEST_CASE("backbone parser rejects malformed rows") {
    std::istringstream bad_op("bottleneckx 1 A 16 1\n");
    CHECK_THROWS_AS(parse_backbone(bad_op), Error);
    std::istringstream bad_labels("conv2d 1 - 32 1\nbottleneck 2 A 16 1\n");
    CHECK_THROWS_AS(parse_backbone(bad_labels), Error);
}

TEST_CASE("search space size closed form") {
    CHECK(search_space_size(10, 2, 2) == 4ull * 9765625ull);  // 4 * 5^10
    CHECK(search_space_size(0, 3, 2) == 6);
    CHECK(search_space_size(4, 2, 2) == 2500);
    CHECK_THROWS_AS(search_space_size(64, 16, 16), Error);
    CHECK_THROWS_AS(search_space_size(3, 0, 1), Error);
}

TEST_CASE("enumeration matches brute force on small spaces") {
    for (std::size_t H = 0; H <= 3; ++H) {
        for (int p = 1; p <= 2; ++p) {
            for (int q = 1; q <= 2; ++q) {
                const auto space = dense_space(H, p, q);
                const auto all = enumerate_space(space);
                std::set<std::uint64_t> hashes;
                for (const auto& c : all) hashes.insert(c.hash());
                CHECK(all.size() == eenas::testing::brute_force_space_size(H, p, q));
                CHECK(hashes.size() == all.size());
            }
        }
    }
}

TEST_CASE("chromosome canonical form and hash") {
    Chromosome a({0, 1, 1, 1, 0, 1, 0, 0});
    Chromosome b({0, 0, 0, 1, 0, 1, 0, 0});
    CHECK(a.canonical() == b);
    CHECK(a.hash() == b.hash());
    CHECK(a.hash_hex().size() == 16);
    CHECK(a.exit_count() == 2);
    CHECK(Chromosome::length_for(10) == 32);
    Chromosome c({1, 0, 0, 1, 0, 1, 0, 0});
    CHECK(c.hash() != b.hash());
    CHECK(Chromosome::single_exit(3, 1, 0).exit_count() == 1);
}

TEST_CASE("encode and decode are inverse over a whole space") {
    const auto space = dense_space(3, 2, 3);
    for (const auto& c : enumerate_space(space)) {
        const auto arch = decode(c, space);
        CHECK(arch.m() == c.exit_count());
        CHECK(encode(arch, space) == c);
    }
}

TEST_CASE("decode rejects out-of-range genes") {
    const auto space = dense_space(2, 2, 2);
    CHECK_THROWS_AS(decode(Chromosome({1, 2, 0, 0, 0, 0, 0, 0}), space), Error);
    CHECK_THROWS_AS(decode(Chromosome({0, 0, 0}), space), Error);
}

TEST_CASE("sampling is deterministic and canonical") {
    const auto space = dense_space(5, 2, 2);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto c = sample_architecture(space, s);
        CHECK(c == sample_architecture(space, s));
        CHECK(c.canonical() == c);
    }
}

TEST_CASE("architecture validation") {
    auto a = mbv2_arch({"D", "K"});
    CHECK_NOTHROW(a.validate());
    auto no_final = mbv2_arch({"D", "F"});
    CHECK_THROWS_AS(no_final.validate(), Error);
    auto unsorted = mbv2_arch({"F", "D", "K"});
    CHECK_THROWS_AS(unsorted.validate(), Error);
    auto bad_bits = mbv2_arch({"D", "K"}, 5);
    CHECK_THROWS_AS(bad_bits.validate(), Error);
}

TEST_CASE("stem convolution MACs by hand") {
    const auto g = expand_layers(mbv2_arch({"K"}));
    const auto& stem = g.nodes.front();
    const int side = conv_out(32, 3, 1, 1);
    CHECK(stem.kind == LayerKind::Conv);
    CHECK(stem.macs == std::uint64_t(side) * side * 32 * 3 * 9);
    CHECK(stem.params == 3u * 32u * 9u);
}

TEST_CASE("first bottleneck MACs by hand (expansion 6)") {
    const auto g = expand_layers(mbv2_arch({"K"}));
    // 32x32x32 -> expand to 192 -> depthwise 3x3 -> project to 16.
    CHECK(g.nodes[1].macs == 32ull * 32 * 192 * 32);
    CHECK(g.nodes[2].macs == 32ull * 32 * 192 * 9);
    CHECK(g.nodes[3].macs == 32ull * 32 * 16 * 192);
}

TEST_CASE("layer graph structure") {
    const auto g = expand_layers(mbv2_arch({"B", "D", "I", "K"}));
    CHECK(g.is_topologically_ordered());
    CHECK(g.m() == 4);
    std::uint64_t prev = 0;
    for (std::size_t i = 1; i <= g.m(); ++i) {
        const auto cm = cumulative_macs(g, i);
        CHECK(cm > prev);
        prev = cm;
    }
    // The last subnetwork covers every node.
    CHECK(subnetwork_nodes(g, g.m()).size() == g.nodes.size());
    CHECK(cumulative_macs(g, g.m()) == g.total_macs());
    // Every exit's head hangs off a backbone node of its mount.
    for (const auto& e : g.exits) {
        const auto prods = g.producers(e.nodes.front());
        REQUIRE(prods.size() == 1);
        CHECK_FALSE(g.nodes[prods[0]].segment.is_exit());
        CHECK(g.nodes[prods[0]].segment.index == int(e.mount_position));
    }
    CHECK_THROWS_AS(subnetwork_nodes(g, 0), Error);
    CHECK_THROWS_AS(inter_exit_segment(g, g.m()), Error);
}

TEST_CASE("residual adds only where shapes match") {
    const auto g = expand_layers(mbv2_arch({"K"}));
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (g.nodes[k].kind != LayerKind::ElementwiseAdd) continue;
        const auto prods = g.producers(k);
        REQUIRE(prods.size() == 2);
        CHECK(g.nodes[prods[0]].output == g.nodes[prods[1]].output);
    }
}

TEST_CASE("exit bit widths reach the head layers only") {
    auto a = mbv2_arch({"D", "K"});
    a.quant.exit_bits = {4, 8};
    const auto g = expand_layers(a);
    for (const auto& n : g.nodes) {
        if (n.segment.is_exit() && n.segment.index == 1) {
            CHECK(n.bits == 4);
        } else {
            CHECK(n.bits == 8);
        }
    }
}

TEST_CASE("static counterpart keeps backbone and final head") {
    const auto a = mbv2_arch({"B", "F", "K"});
    const auto s = static_counterpart(a);
    CHECK(s.m() == 1);
    CHECK(s.exits.front().mount == "K");
    const auto ga = expand_layers(a), gs = expand_layers(s);
    std::uint64_t early_heads = 0;
    for (std::size_t e = 0; e + 1 < ga.m(); ++e) {
        for (std::size_t k : ga.exits[e].nodes) early_heads += ga.nodes[k].macs;
    }
    CHECK(cumulative_macs(gs, 1) == cumulative_macs(ga, 3) - early_heads);
    CHECK(gs.total_macs() < ga.total_macs());
}

TEST_CASE("dense backbone shapes") {
    const auto b = toy_dense_backbone(16, {64, 32}, 4);
    CHECK(b.optional_mounts() == 1);
    EennArchitecture a;
    a.backbone = std::make_shared<BackboneSpec>(b);
    a.exits = {{"A", {1, 1, 128, Activation::ReLU6}}, {"B", {1, 2, 8, Activation::ReLU6}}};
    a.quant = {8, {8, 8}, {}};
    const auto g = expand_layers(a);
    // Backbone layers 16x64 and 64x32, heads 64x4 and 32x8 + 8x4, biases included.
    std::uint64_t macs = 0;
    for (const auto& n : g.nodes) macs += n.macs;
    CHECK(macs == 16u * 64 + 64 * 32 + 64 * 4 + 32 * 8 + 8 * 4);
}
