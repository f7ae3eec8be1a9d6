#include "eenas/report_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eenas/error.hpp"
#include "json.hpp"

namespace eenas {

using nlohmann::json;

namespace {

// Tolerance for an externally supplied acc_avg that was rounded by its producer.
constexpr double kExternalAvgTolerance = 1e-6;

bool is_hash(const std::string& s) {
    if (s.size() != 16) return false;
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

}  // namespace

std::string report_to_json(const ExternalReport& r) {
    r.report.validate();
    json j;
    j["architecture_hash"] = r.architecture_hash;
    j["tau"] = r.report.tau;
    json acc = json::array();
    for (const auto& a : r.report.acc) acc.push_back(a ? json(*a) : json(nullptr));
    j["acc"] = acc;
    j["er"] = r.report.er;
    j["counts"] = r.report.counts;
    j["acc_avg"] = r.report.acc_avg;
    return j.dump(2) + "\n";
}

ExternalReport report_from_json(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, source + ": " + e.what());
    }
    auto schema = [&](bool ok, const std::string& what) {
        require(ok, ErrorCode::Parse, source + ": " + what);
    };
    schema(j.is_object(), "top level must be an object");
    for (const char* key : {"architecture_hash", "tau", "acc", "er"}) {
        schema(j.contains(key), std::string("missing field '") + key + "'");
    }
    schema(j["architecture_hash"].is_string(), "architecture_hash must be a string");
    schema(j["tau"].is_number(), "tau must be a number");
    schema(j["acc"].is_array() && j["er"].is_array(), "acc and er must be arrays");
    schema(j["acc"].size() == j["er"].size() && !j["er"].empty(),
           "acc and er must be nonempty and of equal length");

    ExternalReport out;
    out.architecture_hash = j["architecture_hash"].get<std::string>();
    schema(is_hash(out.architecture_hash), "architecture_hash must be 16 lowercase hex digits");

    std::vector<std::optional<double>> acc;
    for (const auto& a : j["acc"]) {
        schema(a.is_null() || a.is_number(), "acc entries must be numbers or null");
        acc.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
    }
    std::vector<double> er;
    for (const auto& e : j["er"]) {
        schema(e.is_number(), "er entries must be numbers");
        er.push_back(e.get<double>());
    }
    std::vector<std::uint64_t> counts;
    if (j.contains("counts")) {
        schema(j["counts"].is_array(), "counts must be an array");
        for (const auto& c : j["counts"]) {
            schema(c.is_number_unsigned(), "counts entries must be non-negative integers");
            counts.push_back(c.get<std::uint64_t>());
        }
    }
    try {
        out.report = make_report(j["tau"].get<double>(), std::move(acc), std::move(er),
                                 std::move(counts));
    } catch (const Error& e) {
        fail(ErrorCode::Evaluation, source + ": " + e.what());
    }
    if (j.contains("acc_avg")) {
        schema(j["acc_avg"].is_number(), "acc_avg must be a number");
        require(std::abs(j["acc_avg"].get<double>() - out.report.acc_avg) <= kExternalAvgTolerance,
                ErrorCode::Evaluation, source + ": acc_avg disagrees with per-exit values");
    }
    return out;
}

void save_external_report(const std::string& path, const ExternalReport& report) {
    write_file_atomic(path, report_to_json(report));
}

ExternalReport load_external_report(const std::string& path,
                                    const std::optional<std::string>& expected_hash) {
    ExternalReport r = report_from_json(read_file(path), path);
    if (expected_hash) {
        require(r.architecture_hash == *expected_hash, ErrorCode::Evaluation,
                path + ": report is for architecture " + r.architecture_hash + ", expected " +
                    *expected_hash);
    }
    return r;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + tmp.string());
        out << contents;
        out.flush();
        require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    require(!ec, ErrorCode::Io, "rename to " + path + " failed: " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace eenas
