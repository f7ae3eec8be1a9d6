#include "eenas/backbone_io.hpp"

#include <fstream>
#include <sstream>

#include "eenas/error.hpp"

namespace eenas {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

int to_int(const std::string& tok, const std::string& where) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::Parse, where + ": expected an integer, got '" + tok + "'");
    }
}

std::vector<std::string> split_labels(const std::string& tok) {
    std::vector<std::string> out;
    if (tok == "-") return out;
    std::string cur;
    for (char c : tok) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

BackboneSpec parse_backbone(std::istream& in, const std::string& source) {
    BackboneSpec spec;
    spec.blocks.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto tok = tokenize(line);
        if (tok.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const std::string& key = tok[0];

        auto expect = [&](std::size_t n) {
            require(tok.size() == n, ErrorCode::Parse,
                    where + ": '" + key + "' expects " + std::to_string(n - 1) + " value(s)");
        };

        if (key == "name") {
            expect(2);
            spec.name = tok[1];
        } else if (key == "input") {
            expect(4);
            spec.input = {to_int(tok[1], where), to_int(tok[2], where), to_int(tok[3], where)};
        } else if (key == "kernel") {
            expect(2);
            spec.kernel = to_int(tok[1], where);
        } else if (key == "padding") {
            expect(2);
            spec.padding = to_int(tok[1], where);
        } else if (key == "expansion") {
            expect(2);
            spec.expansion = to_int(tok[1], where);
        } else if (key == "classes") {
            expect(2);
            spec.num_classes = to_int(tok[1], where);
        } else {
            expect(5);
            BlockSpec blk;
            if (key == "conv2d") {
                blk.kind = BlockKind::Conv2d;
            } else if (key == "bottleneck") {
                blk.kind = BlockKind::Bottleneck;
            } else if (key == "linear") {
                blk.kind = BlockKind::Linear;
            } else {
                fail(ErrorCode::Parse, where + ": unknown operator '" + key + "'");
            }
            blk.repetition = to_int(tok[1], where);
            blk.mounts = split_labels(tok[2]);
            blk.channels = to_int(tok[3], where);
            blk.stride = to_int(tok[4], where);
            spec.blocks.push_back(std::move(blk));
        }
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Parse, source + ": " + e.what());
    }
    return spec;
}

BackboneSpec load_backbone(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open backbone file " + path);
    return parse_backbone(in, path);
}

void write_backbone(std::ostream& out, const BackboneSpec& spec) {
    out << "name " << spec.name << "\n"
        << "input " << spec.input.height << ' ' << spec.input.width << ' ' << spec.input.channels
        << "\n"
        << "kernel " << spec.kernel << "\n"
        << "padding " << spec.padding << "\n"
        << "expansion " << spec.expansion << "\n"
        << "classes " << spec.num_classes << "\n"
        << "# operator repetition exits channels stride\n";
    for (const auto& blk : spec.blocks) {
        std::string labels;
        for (std::size_t i = 0; i < blk.mounts.size(); ++i) {
            if (i) labels += ',';
            labels += blk.mounts[i];
        }
        if (labels.empty()) labels = "-";
        out << to_string(blk.kind) << ' ' << blk.repetition << ' ' << labels << ' ' << blk.channels
            << ' ' << blk.stride << "\n";
    }
}

BackboneSpec mobilenetv2_cifar10() {
    BackboneSpec s;
    s.name = "mobilenetv2-cifar10";
    s.input = {32, 32, 3};
    s.kernel = 3;
    s.padding = 1;
    s.expansion = 6;
    s.num_classes = 10;
    s.blocks = {
        {BlockKind::Conv2d, 1, 32, 1, {}},
        {BlockKind::Bottleneck, 1, 16, 1, {}},
        {BlockKind::Bottleneck, 2, 24, 1, {"A", "B"}},
        {BlockKind::Bottleneck, 2, 32, 1, {"C", "D"}},
        {BlockKind::Bottleneck, 2, 64, 2, {"E", "F"}},
        {BlockKind::Bottleneck, 2, 96, 1, {"G", "H"}},
        {BlockKind::Bottleneck, 2, 160, 2, {"I", "J"}},
        {BlockKind::Bottleneck, 1, 320, 1, {"K"}},
    };
    s.validate();
    return s;
}

BackboneSpec toy_dense_backbone(int input_features, const std::vector<int>& widths,
                                int num_classes) {
    BackboneSpec s;
    s.name = "toy-dense";
    s.input = {1, 1, input_features};
    s.kernel = 1;
    s.padding = 0;
    s.expansion = 1;
    s.num_classes = num_classes;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        s.blocks.push_back(
            {BlockKind::Linear, 1, widths[i], 1, {std::string(1, static_cast<char>('A' + i))}});
    }
    s.validate();
    return s;
}

}  // namespace eenas
