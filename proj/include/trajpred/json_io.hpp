#pragma once

#include <string>

#include "json.hpp"
#include "trajpred/net.hpp"
#include "trajpred/normalize.hpp"

namespace trajpred {

// Shared helpers for the versioned JSON model files. Every document carries a
// "format" tag; read_json rejects a mismatch before the caller touches fields.
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path, const std::string& expect_format);

nlohmann::json net_to_json(const Mlp& net);
Mlp net_from_json(const nlohmann::json& j);
nlohmann::json stats_to_json(const NormStats& s);
NormStats stats_from_json(const nlohmann::json& j);

}  // namespace trajpred
