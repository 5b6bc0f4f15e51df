#include "runout/metrics.hpp"

#include "runout/error.hpp"
#include "runout/sim_io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <map>

namespace runout {

namespace fs = std::filesystem;

namespace {

double ratio(std::size_t num, std::size_t den, bool both_empty) {
    if (den == 0) return both_empty ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

void require_same_shape(const GridGeo& a, const GridGeo& b, const char* what) {
    if (!a.same_shape(b)) throw GeometryError(fmt::format("{}: rasters differ in geometry", what));
}

std::map<std::string, std::pair<fs::path, fs::path>> index_runs(const fs::path& dir) {
    std::map<std::string, std::pair<fs::path, fs::path>> runs;
    const auto dataset = dir / "dataset.jsonl";
    if (fs::exists(dataset)) {
        std::ifstream in(dataset);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            runs[j.at("run_id").get<std::string>()] = {dir / j.at("h_path").get<std::string>(),
                                                       dir / j.at("footprint_path").get<std::string>()};
        }
        return runs;
    }
    if (!fs::is_directory(dir)) throw Error(fmt::format("'{}' is not a directory", dir.string()));
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        const auto h = entry.path() / "h.rfg";
        const auto fp = entry.path() / "footprint.rfg";
        if (fs::exists(h) && fs::exists(fp)) runs[entry.path().filename().string()] = {h, fp};
    }
    // A single run directory scored against another.
    if (runs.empty() && fs::exists(dir / "h.rfg") && fs::exists(dir / "footprint.rfg"))
        runs[dir.filename().string()] = {dir / "h.rfg", dir / "footprint.rfg"};
    return runs;
}

nlohmann::json stats(const std::vector<double>& xs) {
    if (xs.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    return {{"mean", mean}, {"std", sd}, {"n", xs.size()}};
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

FootprintScore score_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    FootprintScore s{tp, fp, fn, tn};
    const bool both_empty = tp + fp + fn == 0;
    s.precision = ratio(tp, tp + fp, fn == 0);
    s.recall = ratio(tp, tp + fn, fp == 0);
    s.f1 = ratio(2 * tp, 2 * tp + fp + fn, both_empty);
    s.iou = ratio(tp, tp + fp + fn, both_empty);
    return s;
}

FootprintScore score_footprint(const Mask& pred, const Mask& ref) {
    require_same_shape(pred.geo(), ref.geo(), "score_footprint");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i];
        const bool r = ref[i];
        tp += p && r;
        fp += p && !r;
        fn += !p && r;
        tn += !p && !r;
    }
    return score_confusion(tp, fp, fn, tn);
}

ThicknessScore score_thickness(const RasterField& pred_h, const RasterField& ref_h, const Mask& ref_mask) {
    require_same_shape(pred_h.geo(), ref_h.geo(), "score_thickness");
    require_same_shape(pred_h.geo(), ref_mask.geo(), "score_thickness");
    double sq_in = 0.0, sq_out = 0.0, bias = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < pred_h.size(); ++i) {
        const double d = pred_h[i] - ref_h[i];
        if (ref_mask[i]) {
            sq_in += d * d;
            bias += d;
            ++n_in;
        } else {
            sq_out += d * d;
            ++n_out;
        }
    }
    ThicknessScore s;
    if (n_in > 0) {
        s.rmse_in = std::sqrt(sq_in / static_cast<double>(n_in));
        s.bias_in = bias / static_cast<double>(n_in);
    }
    if (n_out > 0) s.rmse_out = std::sqrt(sq_out / static_cast<double>(n_out));
    return s;
}

double max_runout_distance(const Mask& footprint, CellPoint source) {
    double best = 0.0;
    const auto& g = footprint.geo();
    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) {
            if (!footprint.at(r, c)) continue;
            const double dr = static_cast<double>(r) - source.row;
            const double dc = static_cast<double>(c) - source.col;
            best = std::max(best, std::sqrt(dr * dr + dc * dc));
        }
    }
    return best;
}

std::vector<ScorePair> read_score_pairs(const fs::path& jsonl) {
    std::ifstream in(jsonl);
    if (!in) throw FormatError(fmt::format("cannot open pairs file '{}'", jsonl.string()));
    const auto base = jsonl.parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path path(p);
        return path.is_absolute() ? path : base / path;
    };
    std::vector<ScorePair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ScorePair p;
            p.run_id = j.value("run_id", fmt::format("pair{}", pairs.size()));
            p.pred_h = resolve(j.at("pred_h").get<std::string>());
            p.pred_footprint = resolve(j.at("pred_footprint").get<std::string>());
            p.ref_h = resolve(j.at("ref_h").get<std::string>());
            p.ref_footprint = resolve(j.at("ref_footprint").get<std::string>());
            if (j.contains("source_row") && j.contains("source_col"))
                p.source = CellPoint{j.at("source_row").get<double>(), j.at("source_col").get<double>()};
            pairs.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(fmt::format("bad pairs line {}: {}", pairs.size() + 1, e.what()));
        }
    }
    return pairs;
}

std::vector<ScorePair> pair_run_directories(const fs::path& pred_dir, const fs::path& ref_dir) {
    const auto pred = index_runs(pred_dir);
    const auto ref = index_runs(ref_dir);
    std::vector<ScorePair> pairs;
    for (const auto& [id, paths] : ref) {
        auto it = pred.find(id);
        if (it == pred.end()) {
            if (pred.size() == 1 && ref.size() == 1) it = pred.begin();
            else continue;
        }
        pairs.push_back({id, it->second.first, it->second.second, paths.first, paths.second, std::nullopt});
    }
    return pairs;
}

nlohmann::json batch_score(const std::vector<ScorePair>& pairs) {
    nlohmann::json runs = nlohmann::json::array();
    std::vector<double> precision, recall, f1, iou, rmse_in, rmse_out, bias_in, runout_pred, runout_ref, runout_err;
    for (const auto& p : pairs) {
        const auto pred_h = read_raster(p.pred_h);
        const auto pred_fp = read_mask(p.pred_footprint);
        const auto ref_h = read_raster(p.ref_h);
        const auto ref_fp = read_mask(p.ref_footprint);
        const auto fs_score = score_footprint(pred_fp, ref_fp);
        const auto th = score_thickness(pred_h, ref_h, ref_fp);
        const CellPoint source = p.source.value_or(
            CellPoint{static_cast<double>(ref_fp.geo().rows / 2), static_cast<double>(ref_fp.geo().cols / 2)});
        const double rp = max_runout_distance(pred_fp, source);
        const double rr = max_runout_distance(ref_fp, source);

        precision.push_back(fs_score.precision);
        recall.push_back(fs_score.recall);
        f1.push_back(fs_score.f1);
        iou.push_back(fs_score.iou);
        if (th.rmse_in) rmse_in.push_back(*th.rmse_in);
        if (th.rmse_out) rmse_out.push_back(*th.rmse_out);
        if (th.bias_in) bias_in.push_back(*th.bias_in);
        runout_pred.push_back(rp);
        runout_ref.push_back(rr);
        runout_err.push_back(std::abs(rp - rr));

        runs.push_back({{"run_id", p.run_id},
                        {"tp", fs_score.tp},
                        {"fp", fs_score.fp},
                        {"fn", fs_score.fn},
                        {"tn", fs_score.tn},
                        {"precision", fs_score.precision},
                        {"recall", fs_score.recall},
                        {"f1", fs_score.f1},
                        {"iou", fs_score.iou},
                        {"rmse_in_m", optional_json(th.rmse_in)},
                        {"rmse_out_m", optional_json(th.rmse_out)},
                        {"bias_in_m", optional_json(th.bias_in)},
                        {"runout_pred_px", rp},
                        {"runout_ref_px", rr},
                        {"runout_abs_err_px", std::abs(rp - rr)}});
    }
    return {{"n_runs", pairs.size()},
            {"runs", runs},
            {"aggregate",
             {{"precision", stats(precision)},
              {"recall", stats(recall)},
              {"f1", stats(f1)},
              {"iou", stats(iou)},
              {"rmse_in_m", stats(rmse_in)},
              {"rmse_out_m", stats(rmse_out)},
              {"bias_in_m", stats(bias_in)},
              {"runout_pred_px", stats(runout_pred)},
              {"runout_ref_px", stats(runout_ref)},
              {"runout_abs_err_px", stats(runout_err)}}}};
}

}  // namespace runout
