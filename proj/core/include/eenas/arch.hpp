#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eenas/rng.hpp"

namespace eenas {

// ---------------------------------------------------------------------------
// Backbone description
// ---------------------------------------------------------------------------

enum class BlockKind { Conv2d, Bottleneck, Linear };

const char* to_string(BlockKind kind);

struct TensorShape {
    int height = 1;
    int width = 1;
    int channels = 1;

    std::uint64_t elements() const {
        return static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width) *
               static_cast<std::uint64_t>(channels);
    }
    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

/// One row of the backbone table. `mounts` holds one label per repetition
/// (the mounting point right after that repetition) or is empty.
struct BlockSpec {
    BlockKind kind = BlockKind::Bottleneck;
    int repetition = 1;
    int channels = 1;
    int stride = 1;
    std::vector<std::string> mounts;

    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct MountPoint {
    std::string label;
    std::size_t block = 0;
    int repetition = 0;
};

/// Fixed backbone plus its mounting-point alphabet. The last mount label is
/// the mandatory final exit; the others are the H optional positions.
struct BackboneSpec {
    std::string name = "backbone";
    TensorShape input{32, 32, 3};
    int kernel = 3;
    int padding = 1;
    int expansion = 6;
    int num_classes = 10;
    std::vector<BlockSpec> blocks;

    /// Mount points in depth order. Throws if the spec is invalid.
    std::vector<MountPoint> mount_points() const;
    /// Number of optional mounting points (all but the final one).
    std::size_t optional_mounts() const;
    /// Position of `label` in mount order, if present.
    std::optional<std::size_t> mount_index(const std::string& label) const;

    void validate() const;

    friend bool operator==(const BackboneSpec&, const BackboneSpec&) = default;
};

// ---------------------------------------------------------------------------
// Exit heads, quantization, architectures
// ---------------------------------------------------------------------------

enum class Activation { ReLU6 };

struct ExitHeadSpec {
    int pooled_size = 4;    // target height == width after max-pooling
    int linear_layers = 1;  // 1 or 2
    int hidden_width = 128; // used by the 2-layer option
    Activation activation = Activation::ReLU6;

    friend bool operator==(const ExitHeadSpec&, const ExitHeadSpec&) = default;
};

inline constexpr int kUnquantizedBits = 32;

struct QuantScheme {
    int backbone_bits = 8;
    std::vector<int> exit_bits;  // one per exit, final exit last
    std::vector<double> clips;   // per layer; empty until calibrated

    friend bool operator==(const QuantScheme&, const QuantScheme&) = default;
};

struct ExitSpec {
    std::string mount;
    ExitHeadSpec head;

    friend bool operator==(const ExitSpec&, const ExitSpec&) = default;
};

struct EennArchitecture {
    std::shared_ptr<const BackboneSpec> backbone;
    std::vector<ExitSpec> exits;  // sorted by mount depth, final exit last
    QuantScheme quant;

    std::size_t m() const { return exits.size(); }

    /// Throws eenas::Error on any violated invariant.
    void validate(const std::vector<int>& allowed_bits = {4, 8, kUnquantizedBits}) const;

    friend bool operator==(const EennArchitecture& a, const EennArchitecture& b) {
        const bool same_backbone =
            a.backbone == b.backbone || (a.backbone && b.backbone && *a.backbone == *b.backbone);
        return same_backbone && a.exits == b.exits && a.quant == b.quant;
    }
};

/// Search space over one backbone: p exit-head options, q quantization
/// options (bit widths) per exit, fixed backbone precision.
struct SearchSpace {
    std::shared_ptr<const BackboneSpec> backbone;
    std::vector<ExitHeadSpec> head_options;
    std::vector<int> quant_bits;
    int backbone_bits = 8;

    std::size_t H() const { return backbone->optional_mounts(); }
    std::size_t p() const { return head_options.size(); }
    std::size_t q() const { return quant_bits.size(); }

    void validate() const;
};

/// Default head/quant options used throughout: {1 linear, 2 linear (128)}
/// heads pooled to `pooled_size`, exits at {8, 4} bits.
SearchSpace default_search_space(std::shared_ptr<const BackboneSpec> backbone,
                                 int pooled_size = 4);

/// pq(1+pq)^H. Throws ErrorCode::Overflow if the value does not fit.
std::uint64_t search_space_size(std::uint64_t H, std::uint64_t p, std::uint64_t q);

// ---------------------------------------------------------------------------
// Chromosome
// ---------------------------------------------------------------------------

/// Categorical genes: for each optional mount `[present, head, quant]`,
/// followed by `[head, quant]` for the final exit. Canonical form zeroes the
/// option genes of absent mounts.
class Chromosome {
public:
    Chromosome() = default;
    explicit Chromosome(std::vector<int> genes) : genes_(std::move(genes)) {}

    static std::size_t length_for(std::size_t H) { return 3 * H + 2; }
    static Chromosome single_exit(std::size_t H, int head = 0, int quant = 0);

    std::size_t optional_mounts() const { return genes_.size() < 2 ? 0 : (genes_.size() - 2) / 3; }

    bool present(std::size_t mount) const { return genes_.at(3 * mount) != 0; }
    int head(std::size_t mount) const { return genes_.at(3 * mount + 1); }
    int quant(std::size_t mount) const { return genes_.at(3 * mount + 2); }
    int final_head() const { return genes_.at(genes_.size() - 2); }
    int final_quant() const { return genes_.at(genes_.size() - 1); }

    void set_present(std::size_t mount, bool on) { genes_.at(3 * mount) = on ? 1 : 0; }
    void set_head(std::size_t mount, int v) { genes_.at(3 * mount + 1) = v; }
    void set_quant(std::size_t mount, int v) { genes_.at(3 * mount + 2) = v; }
    void set_final_head(int v) { genes_.at(genes_.size() - 2) = v; }
    void set_final_quant(int v) { genes_.at(genes_.size() - 1) = v; }

    std::size_t exit_count() const;
    Chromosome canonical() const;

    const std::vector<int>& genes() const { return genes_; }

    /// FNV-1a over the canonical genes.
    std::uint64_t hash() const;
    /// 16-digit lowercase hex of hash().
    std::string hash_hex() const;

    friend bool operator==(const Chromosome&, const Chromosome&) = default;
    friend auto operator<=>(const Chromosome&, const Chromosome&) = default;

private:
    std::vector<int> genes_;
};

Chromosome encode(const EennArchitecture& arch, const SearchSpace& space);
EennArchitecture decode(const Chromosome& chrom, const SearchSpace& space);

/// Uniform over present bits and option indices.
Chromosome sample_architecture(const SearchSpace& space, Rng& rng);
Chromosome sample_architecture(const SearchSpace& space, std::uint64_t seed);

/// Every distinct canonical chromosome of the space, in lexicographic gene
/// order. Only sensible for small spaces.
/// Calls `visit` once per canonical architecture, in increasing gene order.
void for_each_architecture(const SearchSpace& space,
                           const std::function<void(const Chromosome&)>& visit);
std::vector<Chromosome> enumerate_space(const SearchSpace& space);

// ---------------------------------------------------------------------------
// Layer graph
// ---------------------------------------------------------------------------

enum class LayerKind { Conv, DepthwiseConv, Linear, Pool, ElementwiseAdd, Softmax };

const char* to_string(LayerKind kind);

/// Backbone nodes carry the index of the mount position they precede
/// (0-based over all mount labels); exit nodes carry their 1-based exit index.
struct Segment {
    enum class Kind { Backbone, Exit };
    Kind kind = Kind::Backbone;
    int index = 0;

    bool is_exit() const { return kind == Kind::Exit; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

struct LayerNode {
    std::string name;
    LayerKind kind = LayerKind::Conv;
    TensorShape input;
    TensorShape output;
    int kernel = 1;
    int stride = 1;
    std::uint64_t macs = 0;
    std::uint64_t params = 0;
    int bits = 8;
    Segment segment;

    friend bool operator==(const LayerNode&, const LayerNode&) = default;
};

struct ExitNodes {
    std::string mount;
    std::size_t mount_position = 0;
    std::vector<std::size_t> nodes;

    friend bool operator==(const ExitNodes&, const ExitNodes&) = default;
};

struct LayerGraph {
    std::vector<LayerNode> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // producer -> consumer
    std::vector<ExitNodes> exits;                            // exit i at exits[i-1]

    std::size_t m() const { return exits.size(); }
    std::uint64_t total_macs() const;
    std::vector<std::size_t> producers(std::size_t node) const;
    std::vector<std::size_t> consumers(std::size_t node) const;
    /// True when no edge points backwards in node order (node order is a
    /// topological order).
    bool is_topologically_ordered() const;

    friend bool operator==(const LayerGraph&, const LayerGraph&) = default;
};

LayerGraph expand_layers(const EennArchitecture& arch);

/// Nodes executed before a sample leaves at exit `exit_index` (1-based):
/// backbone up to the exit's mount plus the heads of exits 1..exit_index.
/// Sorted ascending.
std::vector<std::size_t> subnetwork_nodes(const LayerGraph& graph, std::size_t exit_index);

/// Backbone nodes strictly after mount of exit i and up to the mount of exit
/// i+1 (1-based i in [1, m-1]).
std::vector<std::size_t> inter_exit_segment(const LayerGraph& graph, std::size_t exit_index);

std::uint64_t cumulative_macs(const LayerGraph& graph, std::size_t exit_index);
std::uint64_t cumulative_params(const LayerGraph& graph, std::size_t exit_index);

/// Same backbone, final exit only (the static counterpart).
EennArchitecture static_counterpart(const EennArchitecture& arch);

}  // namespace eenas
