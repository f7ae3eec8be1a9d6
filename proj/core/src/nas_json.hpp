#pragma once

// JSON helpers shared by the search loop and the history reader.

#include <cstdint>
#include <string>

#include "eenas/nas.hpp"
#include "json.hpp"

namespace eenas::detail {

using nlohmann::json;

std::uint64_t parse_hash(const std::string& hex);
std::string hash_hex(std::uint64_t h);

json stats_to_json(const IterationStats& s);
IterationStats stats_from_json(const json& j);

json state_to_json(const SearchState& state);
SearchState state_from_json(const json& j);

json config_to_json(const NasConfig& c);

}  // namespace eenas::detail
