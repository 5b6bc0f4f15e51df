#include "runout/campaign.hpp"

#include "runout/error.hpp"
#include "runout/parallel.hpp"
#include "runout/random.hpp"
#include "runout/sim_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>

namespace runout {

namespace fs = std::filesystem;

namespace {

struct Job {
    std::size_t tile;
    ParameterSample sample;
    std::string run_id;
};

std::vector<fs::path> list_tiles(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(fmt::format("tiles directory '{}' does not exist", dir.string()));
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".rfg" || ext == ".asc") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

nlohmann::json simulate_job(const Job& job, const Terrain& terrain, const std::string& tile_id,
                            const CampaignConfig& cfg) {
    const fs::path dir = cfg.output_dir / job.run_id;
    nlohmann::json extra{{"tile_id", tile_id}, {"params", to_json(job.sample)}};
    RunInfo info{job.run_id, tile_id, cfg.solver};
    try {
        SourceSpec spec = cfg.source;
        spec.volume = job.sample.volume;
        const auto pile = build_pile(terrain.geo(), spec);
        MaterialParams material = cfg.material;
        material.density_rho = job.sample.density;
        material.cohesion_c = job.sample.cohesion;
        const auto result = run(terrain, pile, material, cfg.solver);
        const bool retained = passes_mobility_filter(result.displaced_px, cfg.min_displaced_px);
        extra["status"] = "ok";
        extra["retained"] = retained;
        auto manifest = sim_manifest(result, info);
        for (const auto& [k, v] : extra.items()) manifest[k] = v;
        fs::create_directories(dir);
        if (retained) {
            write_raster(dir / "h.rfg", result.final_h);
            write_mask(dir / "footprint.rfg", result.footprint);
        }
        write_json_atomic(dir / "manifest.json", manifest);
        return manifest;
    } catch (const NumericalBlowup& e) {
        nlohmann::json manifest{{"run_id", job.run_id}, {"dem_id", tile_id}, {"status", "failed"},
                                {"retained", false},   {"error", e.what()},  {"solver_config", to_json(cfg.solver)}};
        for (const auto& [k, v] : extra.items()) manifest[k] = v;
        fs::create_directories(dir);
        write_json_atomic(dir / "manifest.json", manifest);
        return manifest;
    }
}

}  // namespace

void CampaignConfig::validate() const {
    if (runs_per_tile < 1) throw ParameterError("runs_per_tile must be at least 1");
    if (worker_count < 1) throw ParameterError("worker_count must be at least 1");
    if (output_dir.empty()) throw ParameterError("output directory is required");
    ranges.validate();
    solver.validate();
}

std::string to_string(CampaignStatus status) {
    switch (status) {
        case CampaignStatus::ok: return "ok";
        case CampaignStatus::empty: return "empty";
        case CampaignStatus::incomplete: return "incomplete";
    }
    return "unknown";
}

std::size_t compute_displaced_px(const SimResult& result, const PileField& pile) {
    if (!result.footprint.geo().same_shape(pile.support_mask.geo()))
        throw GeometryError("simulation result and pile differ in geometry");
    return count_displaced(result.footprint, pile.support_mask);
}

bool passes_mobility_filter(std::size_t displaced_px, std::size_t min_displaced_px) {
    return displaced_px >= min_displaced_px;
}

std::string make_run_id(const std::string& tile_id, const UnitPoint& u, const SolverConfig& solver) {
    return fnv1a_hex(fmt::format("{}|{:.17g},{:.17g},{:.17g}|{}", tile_id, u[0], u[1], u[2], canonical_string(solver)));
}

std::uint64_t tile_seed(std::uint64_t campaign_seed, const std::string& tile_id) {
    return fnv1a64(fmt::format("{}|{}", campaign_seed, tile_id));
}

CampaignReport run_campaign(const CampaignConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    CampaignReport report;

    const auto tile_paths = list_tiles(cfg.tiles_dir);
    if (tile_paths.empty()) throw Error(fmt::format("no tile rasters in '{}'", cfg.tiles_dir.string()));

    std::vector<std::unique_ptr<Terrain>> terrains;
    std::vector<std::string> tile_ids;
    std::vector<Job> jobs;
    for (const auto& path : tile_paths) {
        const std::string tile_id = path.stem().string();
        try {
            auto terrain = std::make_unique<Terrain>(read_raster(path));
            build_pile(terrain->geo(), cfg.source);  // rejects tiles too small for the kernel
            const auto samples = lhs_sample(cfg.runs_per_tile, cfg.ranges, tile_seed(cfg.seed, tile_id));
            for (const auto& s : samples)
                jobs.push_back({terrains.size(), s, make_run_id(tile_id, s.unit_point, cfg.solver)});
            terrains.push_back(std::move(terrain));
            tile_ids.push_back(tile_id);
        } catch (const Error& e) {
            report.tile_errors.push_back({tile_id, e.what()});
            std::cerr << fmt::format("tile {}: {}\n", tile_id, e.what());
        }
    }

    std::vector<std::size_t> todo;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (fs::exists(cfg.output_dir / jobs[j].run_id / "manifest.json")) {
            ++report.resumed;
        } else if (cfg.max_new_runs && todo.size() >= *cfg.max_new_runs) {
            ++report.pending;
        } else {
            todo.push_back(j);
        }
    }

    parallel_for(todo.size(), cfg.worker_count, [&](std::size_t k) {
        const auto& job = jobs[todo[k]];
        simulate_job(job, *terrains[job.tile], tile_ids[job.tile], cfg);
    });
    report.simulated = todo.size();

    // Assemble from disk so fresh and resumed runs produce identical entries.
    for (const auto& job : jobs) {
        const fs::path manifest_path = cfg.output_dir / job.run_id / "manifest.json";
        if (!fs::exists(manifest_path)) continue;
        const auto m = read_json(manifest_path);
        if (m.value("status", "ok") != "ok") {
            ++report.failed;
            continue;
        }
        if (!m.at("retained").get<bool>()) {
            ++report.discarded;
            continue;
        }
        DatasetEntry e;
        e.run_id = job.run_id;
        e.tile_id = tile_ids[job.tile];
        e.params = sample_from_json(m.at("params"));
        e.h_path = job.run_id + "/h.rfg";
        e.footprint_path = job.run_id + "/footprint.rfg";
        e.displaced_px = m.at("displaced_px").get<std::size_t>();
        report.manifest.entries.push_back(std::move(e));
    }
    std::sort(report.manifest.entries.begin(), report.manifest.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.run_id < b.run_id; });

    if (report.pending > 0)
        report.status = CampaignStatus::incomplete;
    else if (report.manifest.entries.empty())
        report.status = CampaignStatus::empty;
    return report;
}

DatasetManifest split_dataset(DatasetManifest manifest, std::array<double, 3> fractions, std::uint64_t seed) {
    for (double f : fractions)
        if (!(f >= 0.0)) throw SplitError("split fractions must be non-negative");
    const double total = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(total - 1.0) > 1e-9) throw SplitError(fmt::format("split fractions sum to {}, not 1", total));

    std::set<std::string> unique;
    for (const auto& e : manifest.entries) unique.insert(e.tile_id);
    std::vector<std::string> tiles(unique.begin(), unique.end());
    const std::size_t n = tiles.size();
    if (n < 3) throw SplitError(fmt::format("splitting needs at least 3 distinct tiles, found {}", n));

    std::mt19937_64 rng(seed);
    shuffle(tiles, rng);

    auto count_for = [n](double f) {
        return std::max<std::size_t>(f > 0.0 ? 1 : 0, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
    };
    const std::size_t n_val = count_for(fractions[1]);
    const std::size_t n_test = count_for(fractions[2]);
    if (n_val + n_test >= n) throw SplitError("too few tiles to fill every split");
    const std::size_t n_train = n - n_val - n_test;

    std::map<std::string, std::string> assignment;
    for (std::size_t i = 0; i < n; ++i)
        assignment[tiles[i]] = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    for (auto& e : manifest.entries) e.split = assignment.at(e.tile_id);
    manifest.split_fractions = fractions;
    return manifest;
}

nlohmann::json to_json(const DatasetEntry& e) {
    return {{"run_id", e.run_id},
            {"tile_id", e.tile_id},
            {"split", e.split},
            {"params", to_json(e.params)},
            {"h_path", e.h_path},
            {"footprint_path", e.footprint_path},
            {"displaced_px", e.displaced_px}};
}

DatasetEntry dataset_entry_from_json(const nlohmann::json& j) {
    try {
        DatasetEntry e;
        e.run_id = j.at("run_id").get<std::string>();
        e.tile_id = j.at("tile_id").get<std::string>();
        e.split = j.value("split", "");
        e.params = sample_from_json(j.at("params"));
        e.h_path = j.at("h_path").get<std::string>();
        e.footprint_path = j.at("footprint_path").get<std::string>();
        e.displaced_px = j.at("displaced_px").get<std::size_t>();
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(fmt::format("malformed dataset entry: {}", ex.what()));
    }
}

void write_dataset(const fs::path& dir, const DatasetManifest& manifest) {
    fs::create_directories(dir);
    {
        const auto tmp = dir / "dataset.jsonl.tmp";
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
        for (const auto& e : manifest.entries) out << to_json(e).dump() << '\n';
        out.close();
        fs::rename(tmp, dir / "dataset.jsonl");
    }
    nlohmann::json splits = nlohmann::json::object();
    for (const auto& e : manifest.entries)
        if (!e.split.empty()) splits[e.tile_id] = e.split;
    write_json_atomic(dir / "splits.json", splits);
}

DatasetManifest read_dataset(const fs::path& dataset_jsonl) {
    std::ifstream in(dataset_jsonl);
    if (!in) throw FormatError(fmt::format("cannot open dataset '{}'", dataset_jsonl.string()));
    DatasetManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            m.entries.push_back(dataset_entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(fmt::format("bad dataset line: {}", e.what()));
        }
    }
    return m;
}

}  // namespace runout
