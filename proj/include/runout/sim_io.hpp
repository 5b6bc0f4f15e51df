#pragma once

#include "runout/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace runout {

/// 64-bit FNV-1a. The hex form (16 digits) names runs.
std::uint64_t fnv1a64(std::string_view text);
std::string fnv1a_hex(std::string_view text);

/// Canonical text of a solver configuration (round-trip exact doubles).
std::string canonical_string(const SolverConfig& cfg);

nlohmann::json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const nlohmann::json& j);

struct RunInfo {
    std::string run_id;
    std::string dem_id;
    SolverConfig solver;
};

/// Manifest for one simulation: identity, parameters and outcome.
nlohmann::json sim_manifest(const SimResult& result, const RunInfo& info);

/// Writes dir/h.rfg, dir/footprint.rfg and dir/manifest.json (manifest last,
/// via rename, so its presence marks a complete run).
void write_sim_result(const std::filesystem::path& dir, const SimResult& result, const RunInfo& info,
                      const nlohmann::json& extra = nlohmann::json::object());

/// Writes JSON to `path` through a temporary file and an atomic rename.
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j, int indent = 2);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace runout
