#pragma once

#include "runout/sampling.hpp"
#include "runout/solver.hpp"
#include "runout/source.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace runout {

struct CampaignConfig {
    std::filesystem::path tiles_dir;
    std::size_t runs_per_tile = 10;
    ParamRanges ranges;
    std::uint64_t seed = 0;
    std::size_t min_displaced_px = 15;
    std::filesystem::path output_dir;
    std::size_t worker_count = 1;
    SolverConfig solver;
    SourceSpec source;          // volume is overwritten per run
    MaterialParams material;    // density and cohesion overwritten per run
    // Stop after this many fresh simulations; a later call resumes.
    std::optional<std::size_t> max_new_runs;

    void validate() const;
};

struct DatasetEntry {
    std::string run_id;
    std::string tile_id;
    std::string split;  // "train", "val", "test", or empty before splitting
    ParameterSample params;
    std::string h_path;          // relative to the dataset directory
    std::string footprint_path;  // relative to the dataset directory
    std::size_t displaced_px = 0;

    bool operator==(const DatasetEntry&) const = default;
};

struct DatasetManifest {
    std::vector<DatasetEntry> entries;  // sorted by run_id
    std::array<double, 3> split_fractions{0.8, 0.1, 0.1};

    bool operator==(const DatasetManifest&) const = default;
};

struct TileError {
    std::string tile_id;
    std::string message;
};

enum class CampaignStatus { ok, empty, incomplete };
std::string to_string(CampaignStatus status);

struct CampaignReport {
    DatasetManifest manifest;
    CampaignStatus status = CampaignStatus::ok;
    std::size_t simulated = 0;  // fresh simulations in this call
    std::size_t resumed = 0;    // runs found complete on disk
    std::size_t discarded = 0;  // below the mobility threshold
    std::size_t failed = 0;     // numerical failures
    std::size_t pending = 0;    // left for a later call (run budget)
    std::vector<TileError> tile_errors;
};

/// Footprint cells whose centres lie outside the initial pile support.
std::size_t compute_displaced_px(const SimResult& result, const PileField& pile);

/// Runs with fewer than `min_displaced_px` displaced cells are dropped.
bool passes_mobility_filter(std::size_t displaced_px, std::size_t min_displaced_px);

/// Stable identity of (tile, unit point, solver config).
std::string make_run_id(const std::string& tile_id, const UnitPoint& unit_point, const SolverConfig& solver);

/// Per-tile LHS seed derived from the campaign seed and tile id.
std::uint64_t tile_seed(std::uint64_t campaign_seed, const std::string& tile_id);

/// Simulates runs_per_tile LHS draws per tile, skipping run ids already
/// complete on disk, and returns the retained runs (unsplit).
CampaignReport run_campaign(const CampaignConfig& cfg);

/// Assigns whole tiles to train/val/test by a seeded shuffle. Needs >= 3 tiles.
DatasetManifest split_dataset(DatasetManifest manifest, std::array<double, 3> fractions, std::uint64_t seed);

nlohmann::json to_json(const DatasetEntry& e);
DatasetEntry dataset_entry_from_json(const nlohmann::json& j);

/// dataset.jsonl plus splits.json (tile_id -> split) in `dir`.
void write_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest);
DatasetManifest read_dataset(const std::filesystem::path& dataset_jsonl);

}  // namespace runout
