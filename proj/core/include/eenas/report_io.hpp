#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "eenas/eval.hpp"

namespace eenas {

// External evaluator protocol: one JSON object per architecture,
//
//   {"architecture_hash": "<16 hex>", "tau": 0.9,
//    "acc": [99.1, null, ...], "er": [...], "counts": [...], "acc_avg": 88.5}
//
// `acc` uses null for exits that received no samples. `counts` and `acc_avg`
// are optional on input; acc_avg, when given, must agree with the recomputed
// value.
struct ExternalReport {
    std::string architecture_hash;
    EvaluationReport report;
};

std::string report_to_json(const ExternalReport& report);
ExternalReport report_from_json(const std::string& text, const std::string& source = "<string>");

void save_external_report(const std::string& path, const ExternalReport& report);
/// Throws ErrorCode::Parse on schema violations, ErrorCode::Evaluation on
/// invariant violations and when the hash differs from `expected_hash`.
ExternalReport load_external_report(const std::string& path,
                                    const std::optional<std::string>& expected_hash = {});

/// Write to `path` through a temporary sibling and rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace eenas
