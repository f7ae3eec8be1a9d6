#include "eenas/arch.hpp"

#include <algorithm>
#include <functional>
#include <cstdio>
#include <set>

#include "eenas/error.hpp"

namespace eenas {

const char* to_string(BlockKind kind) {
    switch (kind) {
        case BlockKind::Conv2d: return "conv2d";
        case BlockKind::Bottleneck: return "bottleneck";
        case BlockKind::Linear: return "linear";
    }
    return "?";
}

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::DepthwiseConv: return "depthwise-conv";
        case LayerKind::Linear: return "linear";
        case LayerKind::Pool: return "pool";
        case LayerKind::ElementwiseAdd: return "elementwise-add";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

namespace {

int conv_out(int in, int kernel, int stride, int padding) {
    const int span = in + 2 * padding - kernel;
    if (span < 0) return 0;
    return span / stride + 1;
}

/// Output shape of every repetition, in order, with the mount label (if any)
/// that follows it.
struct RepetitionShape {
    std::size_t block;
    int repetition;
    TensorShape output;
};

std::vector<RepetitionShape> repetition_shapes(const BackboneSpec& bb) {
    std::vector<RepetitionShape> out;
    TensorShape cur = bb.input;
    for (std::size_t b = 0; b < bb.blocks.size(); ++b) {
        const BlockSpec& blk = bb.blocks[b];
        for (int r = 0; r < blk.repetition; ++r) {
            const int stride = r == 0 ? blk.stride : 1;
            TensorShape next;
            if (blk.kind == BlockKind::Linear) {
                next = {1, 1, blk.channels};
            } else {
                next = {conv_out(cur.height, bb.kernel, stride, bb.padding),
                        conv_out(cur.width, bb.kernel, stride, bb.padding), blk.channels};
            }
            require(next.height >= 1 && next.width >= 1, ErrorCode::InvalidArgument,
                    "backbone '" + bb.name + "': block " + std::to_string(b) +
                        " reduces the activation below 1x1");
            out.push_back({b, r, next});
            cur = next;
        }
    }
    return out;
}

std::vector<TensorShape> mount_shapes(const BackboneSpec& bb) {
    std::vector<TensorShape> shapes;
    for (const auto& rep : repetition_shapes(bb)) {
        const BlockSpec& blk = bb.blocks[rep.block];
        if (!blk.mounts.empty()) shapes.push_back(rep.output);
    }
    return shapes;
}

void check_head(const ExitHeadSpec& head, const TensorShape& at, const std::string& mount) {
    require(head.linear_layers == 1 || head.linear_layers == 2, ErrorCode::InvalidArgument,
            "exit head at " + mount + ": linear-layer count must be 1 or 2");
    require(head.hidden_width >= 1, ErrorCode::InvalidArgument,
            "exit head at " + mount + ": hidden width must be positive");
    require(head.pooled_size >= 1 && at.height >= head.pooled_size &&
                at.width >= head.pooled_size && at.height % head.pooled_size == 0 &&
                at.width % head.pooled_size == 0,
            ErrorCode::InvalidArgument,
            "exit head at " + mount + ": cannot pool " + std::to_string(at.height) + "x" +
                std::to_string(at.width) + " down to " + std::to_string(head.pooled_size) + "x" +
                std::to_string(head.pooled_size));
}

}  // namespace

// ---------------------------------------------------------------------------
// BackboneSpec
// ---------------------------------------------------------------------------

std::vector<MountPoint> BackboneSpec::mount_points() const {
    std::vector<MountPoint> out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t r = 0; r < blocks[b].mounts.size(); ++r) {
            out.push_back({blocks[b].mounts[r], b, static_cast<int>(r)});
        }
    }
    return out;
}

std::size_t BackboneSpec::optional_mounts() const {
    std::size_t n = 0;
    for (const auto& blk : blocks) n += blk.mounts.size();
    return n == 0 ? 0 : n - 1;
}

std::optional<std::size_t> BackboneSpec::mount_index(const std::string& label) const {
    std::size_t i = 0;
    for (const auto& blk : blocks) {
        for (const auto& m : blk.mounts) {
            if (m == label) return i;
            ++i;
        }
    }
    return std::nullopt;
}

void BackboneSpec::validate() const {
    const std::string who = "backbone '" + name + "'";
    require(!blocks.empty(), ErrorCode::InvalidArgument, who + ": no blocks");
    require(input.height >= 1 && input.width >= 1 && input.channels >= 1,
            ErrorCode::InvalidArgument, who + ": input shape must be positive");
    require(kernel >= 1 && padding >= 0 && expansion >= 1, ErrorCode::InvalidArgument,
            who + ": kernel/padding/expansion out of range");
    require(num_classes >= 2, ErrorCode::InvalidArgument, who + ": need at least 2 classes");

    std::set<std::string> seen;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const BlockSpec& blk = blocks[b];
        const std::string where = who + " block " + std::to_string(b);
        require(blk.repetition >= 1, ErrorCode::InvalidArgument, where + ": repetition < 1");
        require(blk.channels >= 1, ErrorCode::InvalidArgument, where + ": channels < 1");
        require(blk.stride == 1 || blk.stride == 2, ErrorCode::InvalidArgument,
                where + ": stride must be 1 or 2");
        require(blk.mounts.empty() || blk.mounts.size() == static_cast<std::size_t>(blk.repetition),
                ErrorCode::InvalidArgument,
                where + ": needs one mount label per repetition or none");
        for (const auto& label : blk.mounts) {
            require(!label.empty(), ErrorCode::InvalidArgument, where + ": empty mount label");
            require(seen.insert(label).second, ErrorCode::InvalidArgument,
                    who + ": duplicate mount label " + label);
        }
    }
    require(!seen.empty(), ErrorCode::InvalidArgument, who + ": no mounting points");
    require(!blocks.back().mounts.empty(), ErrorCode::InvalidArgument,
            who + ": the final mount label must close the last block");
    (void)repetition_shapes(*this);
}

// ---------------------------------------------------------------------------
// Architectures and search space
// ---------------------------------------------------------------------------

void EennArchitecture::validate(const std::vector<int>& allowed_bits) const {
    require(backbone != nullptr, ErrorCode::InvalidArgument, "architecture has no backbone");
    backbone->validate();
    const auto mounts = backbone->mount_points();
    const auto shapes = mount_shapes(*backbone);
    require(!exits.empty(), ErrorCode::InvalidArgument, "architecture has no exits");
    require(exits.size() <= mounts.size(), ErrorCode::InvalidArgument,
            "more exits than mounting points");

    std::optional<std::size_t> prev;
    for (const auto& e : exits) {
        const auto idx = backbone->mount_index(e.mount);
        require(idx.has_value(), ErrorCode::InvalidArgument,
                "mount label '" + e.mount + "' not in backbone");
        require(!prev || *idx > *prev, ErrorCode::InvalidArgument,
                "exits must be strictly ordered by mount depth (at " + e.mount + ")");
        check_head(e.head, shapes[*idx], e.mount);
        prev = idx;
    }
    require(*prev == mounts.size() - 1, ErrorCode::InvalidArgument,
            "last exit must sit at the final mount label " + mounts.back().label);

    auto bits_ok = [&](int b) {
        return std::find(allowed_bits.begin(), allowed_bits.end(), b) != allowed_bits.end();
    };
    require(quant.exit_bits.size() == exits.size(), ErrorCode::InvalidArgument,
            "per-exit bit list length must equal the exit count");
    require(bits_ok(quant.backbone_bits), ErrorCode::InvalidArgument,
            "backbone bit width " + std::to_string(quant.backbone_bits) + " not allowed");
    for (int b : quant.exit_bits) {
        require(bits_ok(b), ErrorCode::InvalidArgument,
                "exit bit width " + std::to_string(b) + " not allowed");
    }
}

void SearchSpace::validate() const {
    require(backbone != nullptr, ErrorCode::InvalidArgument, "search space has no backbone");
    backbone->validate();
    require(!head_options.empty(), ErrorCode::InvalidArgument, "need at least one head option");
    require(!quant_bits.empty(), ErrorCode::InvalidArgument, "need at least one quant option");
    require(std::set<int>(quant_bits.begin(), quant_bits.end()).size() == quant_bits.size(),
            ErrorCode::InvalidArgument, "duplicate quantization options");
    for (std::size_t i = 0; i < head_options.size(); ++i) {
        for (std::size_t j = i + 1; j < head_options.size(); ++j) {
            require(!(head_options[i] == head_options[j]), ErrorCode::InvalidArgument,
                    "duplicate head options");
        }
    }
    for (int b : quant_bits) {
        require(b >= 2, ErrorCode::InvalidArgument, "bit width must be >= 2");
    }
    const auto mounts = backbone->mount_points();
    const auto shapes = mount_shapes(*backbone);
    for (std::size_t i = 0; i < mounts.size(); ++i) {
        for (const auto& h : head_options) check_head(h, shapes[i], mounts[i].label);
    }
}

SearchSpace default_search_space(std::shared_ptr<const BackboneSpec> backbone, int pooled_size) {
    SearchSpace space;
    space.backbone = std::move(backbone);
    space.head_options = {ExitHeadSpec{pooled_size, 1, 128, Activation::ReLU6},
                          ExitHeadSpec{pooled_size, 2, 128, Activation::ReLU6}};
    space.quant_bits = {8, 4};
    space.backbone_bits = 8;
    return space;
}

std::uint64_t search_space_size(std::uint64_t H, std::uint64_t p, std::uint64_t q) {
    require(p >= 1 && q >= 1, ErrorCode::InvalidArgument, "p and q must be >= 1");
    std::uint64_t pq = 0;
    if (__builtin_mul_overflow(p, q, &pq)) fail(ErrorCode::Overflow, "search space size overflows");
    std::uint64_t base = 0;
    if (__builtin_add_overflow(pq, std::uint64_t{1}, &base))
        fail(ErrorCode::Overflow, "search space size overflows");
    std::uint64_t size = pq;
    for (std::uint64_t i = 0; i < H; ++i) {
        if (__builtin_mul_overflow(size, base, &size))
            fail(ErrorCode::Overflow, "search space size overflows 64 bits");
    }
    return size;
}

// ---------------------------------------------------------------------------
// Chromosome
// ---------------------------------------------------------------------------

Chromosome Chromosome::single_exit(std::size_t H, int head, int quant) {
    Chromosome c(std::vector<int>(length_for(H), 0));
    c.set_final_head(head);
    c.set_final_quant(quant);
    return c;
}

std::size_t Chromosome::exit_count() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < optional_mounts(); ++i) n += present(i) ? 1 : 0;
    return n;
}

Chromosome Chromosome::canonical() const {
    Chromosome c = *this;
    for (std::size_t i = 0; i < optional_mounts(); ++i) {
        if (!present(i)) {
            c.set_head(i, 0);
            c.set_quant(i, 0);
        } else {
            c.set_present(i, true);
        }
    }
    return c;
}

std::uint64_t Chromosome::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint32_t v) {
        for (int k = 0; k < 4; ++k) {
            h ^= (v >> (8 * k)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    };
    const Chromosome c = canonical();
    feed(static_cast<std::uint32_t>(c.genes_.size()));
    for (int g : c.genes_) feed(static_cast<std::uint32_t>(g));
    return h;
}

std::string Chromosome::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

Chromosome encode(const EennArchitecture& arch, const SearchSpace& space) {
    arch.validate();
    const std::size_t H = space.H();
    Chromosome c(std::vector<int>(Chromosome::length_for(H), 0));

    auto head_index = [&](const ExitHeadSpec& h) {
        const auto it = std::find(space.head_options.begin(), space.head_options.end(), h);
        require(it != space.head_options.end(), ErrorCode::InvalidArgument,
                "exit head is not an option of the search space");
        return static_cast<int>(it - space.head_options.begin());
    };
    auto quant_index = [&](int bits) {
        const auto it = std::find(space.quant_bits.begin(), space.quant_bits.end(), bits);
        require(it != space.quant_bits.end(), ErrorCode::InvalidArgument,
                "bit width " + std::to_string(bits) + " is not an option of the search space");
        return static_cast<int>(it - space.quant_bits.begin());
    };

    for (std::size_t e = 0; e < arch.exits.size(); ++e) {
        const std::size_t idx = *space.backbone->mount_index(arch.exits[e].mount);
        const int h = head_index(arch.exits[e].head);
        const int qb = quant_index(arch.quant.exit_bits[e]);
        if (idx == H) {
            c.set_final_head(h);
            c.set_final_quant(qb);
        } else {
            c.set_present(idx, true);
            c.set_head(idx, h);
            c.set_quant(idx, qb);
        }
    }
    return c;
}

EennArchitecture decode(const Chromosome& chrom, const SearchSpace& space) {
    const std::size_t H = space.H();
    require(chrom.genes().size() == Chromosome::length_for(H), ErrorCode::InvalidArgument,
            "chromosome length " + std::to_string(chrom.genes().size()) + " != expected " +
                std::to_string(Chromosome::length_for(H)));
    const auto mounts = space.backbone->mount_points();
    const int p = static_cast<int>(space.p());
    const int q = static_cast<int>(space.q());

    auto in_range = [](int v, int n) { return v >= 0 && v < n; };

    EennArchitecture arch;
    arch.backbone = space.backbone;
    arch.quant.backbone_bits = space.backbone_bits;
    for (std::size_t i = 0; i < H; ++i) {
        if (!chrom.present(i)) continue;
        require(in_range(chrom.head(i), p) && in_range(chrom.quant(i), q),
                ErrorCode::InvalidArgument, "gene out of range at mount " + mounts[i].label);
        arch.exits.push_back({mounts[i].label, space.head_options[chrom.head(i)]});
        arch.quant.exit_bits.push_back(space.quant_bits[chrom.quant(i)]);
    }
    require(in_range(chrom.final_head(), p) && in_range(chrom.final_quant(), q),
            ErrorCode::InvalidArgument, "final-exit gene out of range");
    arch.exits.push_back({mounts[H].label, space.head_options[chrom.final_head()]});
    arch.quant.exit_bits.push_back(space.quant_bits[chrom.final_quant()]);
    return arch;
}

Chromosome sample_architecture(const SearchSpace& space, Rng& rng) {
    const std::size_t H = space.H();
    Chromosome c(std::vector<int>(Chromosome::length_for(H), 0));
    for (std::size_t i = 0; i < H; ++i) {
        c.set_present(i, uniform_index(rng, 2) == 1);
        c.set_head(i, static_cast<int>(uniform_index(rng, space.p())));
        c.set_quant(i, static_cast<int>(uniform_index(rng, space.q())));
    }
    c.set_final_head(static_cast<int>(uniform_index(rng, space.p())));
    c.set_final_quant(static_cast<int>(uniform_index(rng, space.q())));
    return c.canonical();
}

Chromosome sample_architecture(const SearchSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    return sample_architecture(space, rng);
}

void for_each_architecture(const SearchSpace& space,
                           const std::function<void(const Chromosome&)>& visit) {
    const std::size_t H = space.H();
    const int p = static_cast<int>(space.p());
    const int q = static_cast<int>(space.q());
    Chromosome cur(std::vector<int>(Chromosome::length_for(H), 0));

    // Depth-first over mounts; absent mounts contribute exactly one option.
    // Visits happen in strictly increasing lexicographic gene order.
    auto rec = [&](auto&& self, std::size_t mount) -> void {
        if (mount == H) {
            for (int h = 0; h < p; ++h) {
                for (int qb = 0; qb < q; ++qb) {
                    cur.set_final_head(h);
                    cur.set_final_quant(qb);
                    visit(cur);
                }
            }
            return;
        }
        cur.set_present(mount, false);
        cur.set_head(mount, 0);
        cur.set_quant(mount, 0);
        self(self, mount + 1);
        cur.set_present(mount, true);
        for (int h = 0; h < p; ++h) {
            for (int qb = 0; qb < q; ++qb) {
                cur.set_head(mount, h);
                cur.set_quant(mount, qb);
                self(self, mount + 1);
            }
        }
        cur.set_present(mount, false);
        cur.set_head(mount, 0);
        cur.set_quant(mount, 0);
    };
    rec(rec, 0);
}

std::vector<Chromosome> enumerate_space(const SearchSpace& space) {
    std::vector<Chromosome> out;
    for_each_architecture(space, [&out](const Chromosome& c) { out.push_back(c); });
    return out;
}

// ---------------------------------------------------------------------------
// Layer graph
// ---------------------------------------------------------------------------

std::uint64_t LayerGraph::total_macs() const {
    std::uint64_t s = 0;
    for (const auto& n : nodes) s += n.macs;
    return s;
}

std::vector<std::size_t> LayerGraph::producers(std::size_t node) const {
    std::vector<std::size_t> out;
    for (const auto& [from, to] : edges) {
        if (to == node) out.push_back(from);
    }
    return out;
}

std::vector<std::size_t> LayerGraph::consumers(std::size_t node) const {
    std::vector<std::size_t> out;
    for (const auto& [from, to] : edges) {
        if (from == node) out.push_back(to);
    }
    return out;
}

bool LayerGraph::is_topologically_ordered() const {
    return std::all_of(edges.begin(), edges.end(), [this](const auto& e) {
        return e.first < e.second && e.second < nodes.size();
    });
}

namespace {

class GraphBuilder {
public:
    explicit GraphBuilder(LayerGraph& g) : g_(g) {}

    std::size_t add(LayerNode node, std::initializer_list<std::size_t> inputs) {
        const std::size_t id = g_.nodes.size();
        g_.nodes.push_back(std::move(node));
        for (std::size_t in : inputs) g_.edges.emplace_back(in, id);
        return id;
    }

private:
    LayerGraph& g_;
};

constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }

LayerNode conv_node(std::string name, LayerKind kind, TensorShape in, TensorShape out, int kernel,
                    int stride, int bits, Segment seg) {
    LayerNode n;
    n.name = std::move(name);
    n.kind = kind;
    n.input = in;
    n.output = out;
    n.kernel = kernel;
    n.stride = stride;
    n.bits = bits;
    n.segment = seg;
    const std::uint64_t k2 = u64(kernel) * u64(kernel);
    const std::uint64_t spatial = u64(out.height) * u64(out.width);
    if (kind == LayerKind::DepthwiseConv) {
        n.macs = k2 * u64(out.channels) * spatial;
        n.params = k2 * u64(out.channels);
    } else {
        n.macs = k2 * u64(in.channels) * u64(out.channels) * spatial;
        n.params = k2 * u64(in.channels) * u64(out.channels);
    }
    return n;
}

LayerNode linear_node(std::string name, std::uint64_t in_features, int out_features,
                      TensorShape in_shape, int bits, Segment seg) {
    LayerNode n;
    n.name = std::move(name);
    n.kind = LayerKind::Linear;
    n.input = in_shape;
    n.output = {1, 1, out_features};
    n.bits = bits;
    n.segment = seg;
    n.macs = in_features * u64(out_features);
    n.params = in_features * u64(out_features) + u64(out_features);
    return n;
}

LayerNode passive_node(std::string name, LayerKind kind, TensorShape in, TensorShape out, int bits,
                       Segment seg) {
    LayerNode n;
    n.name = std::move(name);
    n.kind = kind;
    n.input = in;
    n.output = out;
    n.bits = bits;
    n.segment = seg;
    return n;
}

void append_head(LayerGraph& g, GraphBuilder& b, const ExitSpec& exit, std::size_t exit_index,
                 std::size_t mount_position, std::size_t source, TensorShape at, int bits,
                 int classes) {
    const Segment seg{Segment::Kind::Exit, static_cast<int>(exit_index)};
    const std::string prefix = "exit" + std::to_string(exit_index) + "@" + exit.mount;
    ExitNodes info{exit.mount, mount_position, {}};

    const TensorShape pooled{exit.head.pooled_size, exit.head.pooled_size, at.channels};
    LayerNode pool = passive_node(prefix + ".pool", LayerKind::Pool, at, pooled, bits, seg);
    pool.kernel = at.height / exit.head.pooled_size;
    pool.stride = pool.kernel;
    std::size_t prev = b.add(std::move(pool), {source});
    info.nodes.push_back(prev);

    const std::uint64_t flat = pooled.elements();
    if (exit.head.linear_layers == 2) {
        prev = b.add(linear_node(prefix + ".fc1", flat, exit.head.hidden_width, pooled, bits, seg),
                     {prev});
        info.nodes.push_back(prev);
        const TensorShape hidden{1, 1, exit.head.hidden_width};
        prev = b.add(linear_node(prefix + ".fc2", u64(exit.head.hidden_width), classes, hidden,
                                 bits, seg),
                     {prev});
    } else {
        prev = b.add(linear_node(prefix + ".fc", flat, classes, pooled, bits, seg), {prev});
    }
    info.nodes.push_back(prev);
    const TensorShape logits{1, 1, classes};
    prev = b.add(passive_node(prefix + ".softmax", LayerKind::Softmax, logits, logits, bits, seg),
                 {prev});
    info.nodes.push_back(prev);
    g.exits.push_back(std::move(info));
}

}  // namespace

LayerGraph expand_layers(const EennArchitecture& arch) {
    arch.validate();
    const BackboneSpec& bb = *arch.backbone;
    LayerGraph g;
    GraphBuilder b(g);

    // mount position -> exit index (1-based), 0 when no exit.
    const auto mounts = bb.mount_points();
    std::vector<std::size_t> exit_at(mounts.size(), 0);
    for (std::size_t e = 0; e < arch.exits.size(); ++e) {
        exit_at[*bb.mount_index(arch.exits[e].mount)] = e + 1;
    }

    const int bits = arch.quant.backbone_bits;
    TensorShape cur = bb.input;
    std::size_t last = kNoNode;
    std::size_t mount_pos = 0;

    auto add_chain = [&](LayerNode node) {
        if (last == kNoNode) return b.add(std::move(node), {});
        return b.add(std::move(node), {last});
    };

    for (std::size_t bi = 0; bi < bb.blocks.size(); ++bi) {
        const BlockSpec& blk = bb.blocks[bi];
        for (int r = 0; r < blk.repetition; ++r) {
            const Segment seg{Segment::Kind::Backbone, static_cast<int>(mount_pos)};
            const int stride = r == 0 ? blk.stride : 1;
            const std::string prefix = "b" + std::to_string(bi) + "." + std::to_string(r);

            if (blk.kind == BlockKind::Conv2d) {
                const TensorShape out{conv_out(cur.height, bb.kernel, stride, bb.padding),
                                      conv_out(cur.width, bb.kernel, stride, bb.padding),
                                      blk.channels};
                last = add_chain(conv_node(prefix + ".conv", LayerKind::Conv, cur, out, bb.kernel,
                                           stride, bits, seg));
                cur = out;
            } else if (blk.kind == BlockKind::Linear) {
                last = add_chain(
                    linear_node(prefix + ".fc", cur.elements(), blk.channels, cur, bits, seg));
                cur = {1, 1, blk.channels};
            } else {
                // Inverted residual: 1x1 expand -> kxk depthwise -> 1x1 project.
                const std::size_t block_input = last;
                const TensorShape block_in = cur;
                const int wide = cur.channels * bb.expansion;
                if (bb.expansion != 1) {
                    const TensorShape out{cur.height, cur.width, wide};
                    last = add_chain(conv_node(prefix + ".expand", LayerKind::Conv, cur, out, 1, 1,
                                               bits, seg));
                    cur = out;
                }
                const TensorShape dw_out{conv_out(cur.height, bb.kernel, stride, bb.padding),
                                         conv_out(cur.width, bb.kernel, stride, bb.padding), wide};
                last = add_chain(conv_node(prefix + ".dw", LayerKind::DepthwiseConv, cur, dw_out,
                                           bb.kernel, stride, bits, seg));
                cur = dw_out;
                const TensorShape proj{cur.height, cur.width, blk.channels};
                last = add_chain(conv_node(prefix + ".project", LayerKind::Conv, cur, proj, 1, 1,
                                           bits, seg));
                cur = proj;
                if (stride == 1 && block_in == cur && block_input != kNoNode) {
                    last = b.add(passive_node(prefix + ".add", LayerKind::ElementwiseAdd, cur, cur,
                                              bits, seg),
                                 {block_input, last});
                }
            }

            if (!blk.mounts.empty()) {
                if (const std::size_t e = exit_at[mount_pos]; e != 0) {
                    append_head(g, b, arch.exits[e - 1], e, mount_pos, last, cur,
                                arch.quant.exit_bits[e - 1], bb.num_classes);
                }
                ++mount_pos;
            }
        }
    }
    return g;
}

std::vector<std::size_t> subnetwork_nodes(const LayerGraph& graph, std::size_t exit_index) {
    require(exit_index >= 1 && exit_index <= graph.m(), ErrorCode::InvalidArgument,
            "exit index " + std::to_string(exit_index) + " out of range [1, " +
                std::to_string(graph.m()) + "]");
    const int mount = static_cast<int>(graph.exits[exit_index - 1].mount_position);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
        const Segment& s = graph.nodes[k].segment;
        const bool take = s.is_exit() ? s.index <= static_cast<int>(exit_index) : s.index <= mount;
        if (take) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> inter_exit_segment(const LayerGraph& graph, std::size_t exit_index) {
    require(exit_index >= 1 && exit_index < graph.m(), ErrorCode::InvalidArgument,
            "inter-exit segment needs exit index in [1, m-1]");
    const int lo = static_cast<int>(graph.exits[exit_index - 1].mount_position);
    const int hi = static_cast<int>(graph.exits[exit_index].mount_position);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
        const Segment& s = graph.nodes[k].segment;
        if (!s.is_exit() && s.index > lo && s.index <= hi) out.push_back(k);
    }
    return out;
}

std::uint64_t cumulative_macs(const LayerGraph& graph, std::size_t exit_index) {
    std::uint64_t s = 0;
    for (std::size_t k : subnetwork_nodes(graph, exit_index)) s += graph.nodes[k].macs;
    return s;
}

std::uint64_t cumulative_params(const LayerGraph& graph, std::size_t exit_index) {
    std::uint64_t s = 0;
    for (std::size_t k : subnetwork_nodes(graph, exit_index)) s += graph.nodes[k].params;
    return s;
}

EennArchitecture static_counterpart(const EennArchitecture& arch) {
    EennArchitecture s;
    s.backbone = arch.backbone;
    s.exits = {arch.exits.back()};
    s.quant.backbone_bits = arch.quant.backbone_bits;
    s.quant.exit_bits = {arch.quant.exit_bits.back()};
    return s;
}

}  // namespace eenas
