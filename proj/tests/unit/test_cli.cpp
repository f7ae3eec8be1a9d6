#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "eenas/error.hpp"

using namespace eenas;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("eenas_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& text) const {
        const auto p = path / name;
        std::ofstream(p) << text;
        return p.string();
    }
};

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "eenas");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const char* kSmallSearch = R"({
  "nas": {"init_population": 10, "N": 3, "generations": 2, "iterations": 2,
          "theta": 0.5, "mu": 0.5},
  "evaluator": "oracle",
  "out": "out"
})";

}  // namespace

TEST_CASE("binomial sum equals the closed form") {
    for (std::uint64_t H = 0; H <= 12; ++H) {
        for (std::uint64_t p = 1; p <= 3; ++p) {
            for (std::uint64_t q = 1; q <= 3; ++q) {
                CHECK(cli::binomial_space_size(H, p, q) == search_space_size(H, p, q));
            }
        }
    }
}

TEST_CASE("MAC reduction by hand") {
    const std::vector<double> er = {0.5, 0.5};
    const std::vector<std::uint64_t> cum = {100, 200};
    CHECK(cli::mac_reduction(er, cum, 200) == doctest::Approx(0.25));
    const std::vector<double> last = {0.0, 1.0};
    CHECK(cli::mac_reduction(last, cum, 200) == doctest::Approx(0.0));
}

TEST_CASE("architecture files in both formats") {
    TempDir dir("arch");
    const auto space = cli::default_run_config().space;
    Chromosome want = Chromosome::single_exit(space.H());
    want.set_present(*space.backbone->mount_index("D"), true);
    std::string genes = "{\"genes\": [";
    for (std::size_t i = 0; i < want.genes().size(); ++i) {
        genes += (i ? "," : "") + std::to_string(want.genes()[i]);
    }
    genes += "]}";
    CHECK(cli::load_architecture(dir.file("g.json", genes), space) == want);
    const auto exits = dir.file("e.json", R"({"exits": [{"mount": "D", "head": 0, "quant": 0},
                                                        {"mount": "K", "head": 0, "quant": 0}]})");
    CHECK(cli::load_architecture(exits, space) == want);
    const auto bad = dir.file("b.json", R"({"exits": [{"mount": "Z", "head": 0, "quant": 0}]})");
    CHECK_THROWS_AS(cli::load_architecture(bad, space), Error);
}

TEST_CASE("space command self-checks") {
    TempDir dir("space");
    const auto r = invoke({"--out", dir.path.string(), "space"});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("self-check ok") != std::string::npos);
    CHECK(fs::exists(dir.path / "space.json"));
    const json j = json::parse(std::ifstream(dir.path / "space.json"));
    CHECK(j["closed_form"] == j["binomial_sum"]);
}

TEST_CASE("usage and configuration errors exit with 2") {
    CHECK(invoke({}).code == cli::kConfigError);
    CHECK(invoke({"frobnicate"}).code == cli::kConfigError);
    CHECK(invoke({"--config", "/nonexistent/eenas.json", "space"}).code == cli::kConfigError);
    TempDir dir("badcfg");
    const auto unknown = dir.file("c.json", R"({"nas": {"N": 3}, "bogus": 1})");
    const auto r = invoke({"--config", unknown, "space"});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("bogus") != std::string::npos);
    const auto bad_mu = dir.file("m.json", R"({"nas": {"mu": 2.0}})");
    CHECK(invoke({"--config", bad_mu, "space"}).code == cli::kConfigError);
    CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("cost command with a missing external label exits with 3") {
    TempDir dir("external");
    const auto cfg = dir.file("c.json", R"({"evaluator": "external", "external_dir": "labels",
                                             "out": "out"})");
    const auto arch = dir.file("a.json", R"({"exits": [{"mount": "K", "head": 0, "quant": 0}]})");
    const auto r = invoke({"--config", cfg, "cost", arch});
    CHECK(r.code == cli::kEvaluationError);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("cost command writes its reports") {
    TempDir dir("cost");
    const auto arch = dir.file("a.json", R"({"exits": [{"mount": "D", "head": 1, "quant": 0},
                                                       {"mount": "K", "head": 0, "quant": 0}]})");
    const auto r = invoke({"--out", (dir.path / "out").string(), "cost", arch});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("ET_avg") != std::string::npos);
    CHECK(r.out.find("OH_1") != std::string::npos);
    for (const char* f : {"cost.json", "cost.csv", "layers.csv"}) {
        CHECK(fs::exists(dir.path / "out" / f));
    }
}

TEST_CASE("search, resume and report") {
    TempDir dir("search");
    const auto cfg = dir.file("c.json", kSmallSearch);
    const auto r = invoke({"--config", cfg, "search"});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("constraint audit ok") != std::string::npos);
    const auto out = dir.path / "out";
    for (const char* f : {"history.jsonl", "labeled.jsonl", "stats.csv", "distributions.csv",
                          "scatter.csv", "front.csv"}) {
        CHECK(fs::exists(out / f));
    }
    std::stringstream first;
    first << std::ifstream(out / "history.jsonl").rdbuf();

    const auto again = invoke({"--config", cfg, "search", "--resume"});
    CHECK(again.code == cli::kOk);
    CHECK(again.out.find("resumed") != std::string::npos);
    std::stringstream second;
    second << std::ifstream(out / "history.jsonl").rdbuf();
    CHECK(first.str() == second.str());

    const auto rep = invoke({"--config", cfg, "report"});
    REQUIRE(rep.code == cli::kOk);
    const json j = json::parse(std::ifstream(out / "report.json"));
    CHECK(j["er"].size() == j["exits"].get<std::size_t>());
    CHECK(j["et_reduction"].get<double>() < 1.0);
    CHECK(j["mac_reduction"].get<double>() < 1.0);
    CHECK(invoke({"--config", cfg, "report", "--point", "9999"}).code == cli::kConfigError);

    const auto h = History::parse(first.str());
    const auto summary = cli::summarize_history(h, cli::load_run_config(cfg));
    CHECK(summary.hash == j["hash"].get<std::string>());
}

TEST_CASE("seed override changes the search") {
    TempDir dir("seed");
    const auto cfg = dir.file("c.json", kSmallSearch);
    REQUIRE(invoke({"--config", cfg, "--out", (dir.path / "a").string(), "search"}).code == 0);
    REQUIRE(invoke({"--config", cfg, "--seed", "3", "--out", (dir.path / "b").string(), "search"})
                .code == 0);
    std::stringstream a, b;
    a << std::ifstream(dir.path / "a" / "history.jsonl").rdbuf();
    b << std::ifstream(dir.path / "b" / "history.jsonl").rdbuf();
    CHECK(a.str() != b.str());
}
