#pragma once

#include "runout/raster.hpp"
#include "runout/source.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace runout {

struct FootprintScore {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
};

/// Metrics from confusion counts. A zero denominator scores 1 when both masks
/// are empty for that metric, 0 otherwise.
FootprintScore score_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
FootprintScore score_footprint(const Mask& pred, const Mask& ref);

struct ThicknessScore {
    std::optional<double> rmse_in;   // m, over the reference mask; absent when the mask is empty
    std::optional<double> rmse_out;  // m, over its complement
    std::optional<double> bias_in;   // m, mean(pred - ref) over the mask
};

ThicknessScore score_thickness(const RasterField& pred_h, const RasterField& ref_h, const Mask& ref_mask);

/// Largest Euclidean distance in pixels from `source` to a footprint cell centre; 0 when empty.
double max_runout_distance(const Mask& footprint, CellPoint source);

/// One prediction/reference pair for the batch scorer.
struct ScorePair {
    std::string run_id;
    std::filesystem::path pred_h, pred_footprint;
    std::filesystem::path ref_h, ref_footprint;
    std::optional<CellPoint> source;  // defaults to the grid centre cell, where piles are placed
};

/// Reads JSON lines {run_id, pred_h, pred_footprint, ref_h, ref_footprint[, source_row, source_col]}.
/// Relative paths resolve against the file's directory.
std::vector<ScorePair> read_score_pairs(const std::filesystem::path& jsonl);

/// Pairs run directories (holding h.rfg and footprint.rfg) by name, or by
/// run_id through dataset.jsonl when present. Only runs present in both sides are scored.
std::vector<ScorePair> pair_run_directories(const std::filesystem::path& pred_dir,
                                            const std::filesystem::path& ref_dir);

/// Per-run scores plus mean/std aggregates.
nlohmann::json batch_score(const std::vector<ScorePair>& pairs);

}  // namespace runout
