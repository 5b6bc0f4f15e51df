// Command-line entry point: terrain preparation, single simulations, dataset
// campaigns, ensemble forecasts, scoring and re-splitting.

#include "runout/campaign.hpp"
#include "runout/ensemble.hpp"
#include "runout/error.hpp"
#include "runout/metrics.hpp"
#include "runout/parallel.hpp"
#include "runout/sim_io.hpp"
#include "runout/solver.hpp"
#include "runout/terrain.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace runout;

namespace {

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg, MaterialParams& material) {
    cmd->add_option("--mu", material.voellmy_mu, "Voellmy Coulomb coefficient [-]")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--xi", material.voellmy_xi, "Voellmy turbulent coefficient [m/s^2]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--dt-init", cfg.dt_init, "initial and maximum time step [s]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--dt-min", cfg.dt_min, "minimum time step [s]")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--cfl", cfg.cfl_number, "Courant number [-]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd->add_option("--h-min", cfg.h_min, "dry-cell thickness threshold [m]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--v-stop", cfg.v_stop, "stopping speed [m/s]")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--t-max", cfg.t_max, "simulated time cap [s]")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--footprint-threshold", cfg.footprint_threshold, "footprint thickness threshold [m]")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

void add_range_flags(CLI::App* cmd, std::string& volume, std::string& density, std::string& cohesion) {
    cmd->add_option("--volume", volume, "source volume range LO:HI [m^3], sampled log-uniformly")->capture_default_str();
    cmd->add_option("--density", density, "bulk density range LO:HI [kg/m^3]")->capture_default_str();
    cmd->add_option("--cohesion", cohesion, "cohesion range LO:HI [Pa]")->capture_default_str();
}

ParamRanges ranges_from_flags(const std::string& volume, const std::string& density, const std::string& cohesion) {
    ParamRanges ranges;
    std::tie(ranges.volume.lo, ranges.volume.hi) = parse_range(volume);
    std::tie(ranges.density.lo, ranges.density.hi) = parse_range(density);
    std::tie(ranges.cohesion.lo, ranges.cohesion.hi) = parse_range(cohesion);
    ranges.validate();
    return ranges;
}

void write_split_outputs(const fs::path& dir, DatasetManifest manifest, std::uint64_t seed) {
    std::set<std::string> tiles;
    for (const auto& e : manifest.entries) tiles.insert(e.tile_id);
    if (tiles.size() >= 3) {
        manifest = split_dataset(std::move(manifest), {0.8, 0.1, 0.1}, seed);
    } else {
        std::cerr << fmt::format("warning: {} retained tile(s); dataset left unsplit (needs 3)\n", tiles.size());
    }
    write_dataset(dir, manifest);
}

struct PrepArgs {
    std::string dem, out;
    std::size_t tile = 256;
    double min_slope = 5.0;
    double sigma = 1.0;
    std::size_t window = 11;
};

int cmd_prep(const PrepArgs& a) {
    const auto dem = read_raster(a.dem);
    const auto smoothed = gaussian_smooth(dem, a.sigma);
    const auto tiles = extract_tiles(smoothed, a.tile, a.min_slope, a.window);
    fs::create_directories(a.out);
    const std::string stem = fs::path(a.dem).stem().string();
    nlohmann::json listing = nlohmann::json::array();
    for (const auto& tile : tiles) {
        const auto col0 = std::llround((tile.geo().origin_x - dem.geo().origin_x) / dem.geo().cell_size);
        const auto row0 = std::llround((dem.geo().origin_y - tile.geo().origin_y) / dem.geo().cell_size);
        const std::string id = fmt::format("{}_r{:05d}_c{:05d}", stem, row0, col0);
        write_raster(fs::path(a.out) / (id + ".rfg"), tile);
        listing.push_back({{"tile_id", id}, {"row0", row0}, {"col0", col0}});
    }
    write_json_atomic(fs::path(a.out) / "tiles.json", listing);
    std::cerr << fmt::format("prep: kept {} tile(s) from {}\n", tiles.size(), a.dem);
    return 0;
}

struct SimulateArgs {
    std::string dem, out;
    double volume = 0.0, density = 0.0, cohesion = 0.0;
    std::uint64_t seed = 0;
    SolverConfig solver;
    MaterialParams material;
};

int cmd_simulate(SimulateArgs a) {
    const auto dem = read_raster(a.dem);
    const Terrain terrain(dem);
    SourceSpec spec;
    spec.volume = a.volume;
    const auto pile = build_pile(terrain.geo(), spec);
    a.material.density_rho = a.density;
    a.material.cohesion_c = a.cohesion;
    const auto start = std::chrono::steady_clock::now();
    const auto result = run(terrain, pile, a.material, a.solver);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string dem_id = fs::path(a.dem).stem().string();
    const std::string run_id = fnv1a_hex(fmt::format("{}|{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}|{}", dem_id, a.volume,
                                                     a.density, a.cohesion, a.material.voellmy_mu,
                                                     a.material.voellmy_xi, canonical_string(a.solver)));
    write_sim_result(a.out, result, {run_id, dem_id, a.solver}, {{"seed", a.seed}, {"kernel_px", pile.kernel_px}});
    std::cerr << fmt::format("simulate: {} after {:.2f} s simulated ({} steps, {:.2f} s wall), {} displaced px\n",
                             to_string(result.stop_reason), result.stop_time, result.steps, wall,
                             result.displaced_px);
    return 0;
}

struct CampaignArgs {
    std::string tiles, out;
    std::size_t runs_per_tile = 10;
    std::uint64_t seed = 0;
    std::size_t workers = default_worker_count();
    std::size_t min_displaced = 15;
    std::size_t max_new_runs = 0;
    std::string volume = "1e4:1e7", density = "917:2650", cohesion = "5000:50000";
    SolverConfig solver;
    MaterialParams material;
};

int cmd_campaign(const CampaignArgs& a) {
    CampaignConfig cfg;
    cfg.tiles_dir = a.tiles;
    cfg.output_dir = a.out;
    cfg.runs_per_tile = a.runs_per_tile;
    cfg.seed = a.seed;
    cfg.worker_count = a.workers;
    cfg.min_displaced_px = a.min_displaced;
    cfg.ranges = ranges_from_flags(a.volume, a.density, a.cohesion);
    cfg.solver = a.solver;
    cfg.material = a.material;
    if (a.max_new_runs > 0) cfg.max_new_runs = a.max_new_runs;

    const auto report = run_campaign(cfg);
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : report.tile_errors) errors.push_back({{"tile_id", e.tile_id}, {"error", e.message}});
    write_json_atomic(fs::path(a.out) / "campaign.json",
                      {{"status", to_string(report.status)},
                       {"simulated", report.simulated},
                       {"resumed", report.resumed},
                       {"discarded", report.discarded},
                       {"failed", report.failed},
                       {"pending", report.pending},
                       {"retained", report.manifest.entries.size()},
                       {"tile_errors", errors}});
    write_split_outputs(a.out, report.manifest, a.seed);
    std::cerr << fmt::format("campaign: {} simulated, {} resumed, {} retained, {} discarded, {} failed, {} pending\n",
                             report.simulated, report.resumed, report.manifest.entries.size(), report.discarded,
                             report.failed, report.pending);
    if (report.status == CampaignStatus::empty) std::cerr << "warning: campaign retained no runs\n";
    return 0;
}

struct EnsembleArgs {
    std::string dem, out;
    std::size_t n = 1024;
    std::string volume = "1e4:1e7", density = "917:2650", cohesion = "5000:50000";
    std::string sampler = "sobol";
    std::uint64_t seed = 0;
    std::size_t workers = default_worker_count();
    SolverConfig solver;
    MaterialParams material;
};

int cmd_ensemble(const EnsembleArgs& a) {
    EnsembleConfig cfg;
    cfg.n_members = a.n;
    cfg.ranges = ranges_from_flags(a.volume, a.density, a.cohesion);
    cfg.sampler = sampler_from_string(a.sampler);
    cfg.seed = a.seed;
    cfg.worker_count = a.workers;
    cfg.solver = a.solver;
    cfg.material = a.material;
    const auto product = run_ensemble(read_raster(a.dem), cfg);
    write_ensemble(a.out, product, cfg);
    std::cerr << fmt::format("ensemble: {} members ({} failed) in {:.1f} s\n", product.n_members, product.n_failed,
                             product.wall_time_s);
    return 0;
}

struct MetricsArgs {
    std::string pred, ref, pairs, out;
};

int cmd_metrics(const MetricsArgs& a) {
    std::vector<ScorePair> pairs;
    if (!a.pairs.empty()) {
        pairs = read_score_pairs(a.pairs);
    } else {
        if (a.pred.empty() || a.ref.empty()) throw ParameterError("metrics needs --pred and --ref, or --pairs");
        pairs = pair_run_directories(a.pred, a.ref);
    }
    if (pairs.empty()) throw Error("no prediction/reference pairs found");
    const auto report = batch_score(pairs);
    write_json_atomic(a.out, report);
    std::cerr << fmt::format("metrics: scored {} run(s)\n", pairs.size());
    return 0;
}

struct SplitArgs {
    std::string dataset;
    std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a) {
    auto manifest = split_dataset(read_dataset(a.dataset), {0.8, 0.1, 0.1}, a.seed);
    write_dataset(fs::path(a.dataset).parent_path(), manifest);
    std::cerr << fmt::format("split: {} entries re-assigned\n", manifest.entries.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granular-flow runout simulation toolkit"};
    app.require_subcommand(1);

    PrepArgs prep;
    auto* p = app.add_subcommand("prep", "Smooth a DEM and cut it into slope-filtered tiles");
    p->add_option("--dem", prep.dem, "input DEM (.rfg or ESRI .asc)")->required()->check(CLI::ExistingFile);
    p->add_option("--out", prep.out, "output tile directory")->required();
    p->add_option("--tile", prep.tile, "tile edge length [px]")->check(CLI::PositiveNumber)->capture_default_str();
    p->add_option("--min-slope", prep.min_slope, "minimum mean centre-window slope [deg]")
        ->check(CLI::Range(0.0, 90.0))
        ->capture_default_str();
    p->add_option("--sigma", prep.sigma, "Gaussian smoothing width [cells]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    p->add_option("--window", prep.window, "centre window edge length [px]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Run one simulation from a centred Gaussian pile");
    s->add_option("--dem", sim.dem, "tile DEM (.rfg or ESRI .asc)")->required()->check(CLI::ExistingFile);
    s->add_option("--volume", sim.volume, "source volume [m^3]")->required()->check(CLI::PositiveNumber);
    s->add_option("--density", sim.density, "bulk density [kg/m^3]")->required()->check(CLI::PositiveNumber);
    s->add_option("--cohesion", sim.cohesion, "cohesion [Pa]")->required()->check(CLI::NonNegativeNumber);
    s->add_option("--out", sim.out, "output run directory")->required();
    s->add_option("--seed", sim.seed, "recorded in the manifest; the solver is deterministic [count]")
        ->capture_default_str();
    add_solver_flags(s, sim.solver, sim.material);

    CampaignArgs camp;
    auto* c = app.add_subcommand("campaign", "Simulate LHS draws on every tile, filter, and split by tile");
    c->add_option("--tiles", camp.tiles, "directory of tile rasters")->required()->check(CLI::ExistingDirectory);
    c->add_option("--out", camp.out, "output dataset directory")->required();
    c->add_option("--runs-per-tile", camp.runs_per_tile, "simulations per tile [count]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--seed", camp.seed, "sampling and split seed [count]")->capture_default_str();
    c->add_option("--workers", camp.workers, "parallel simulations [count]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--min-displaced", camp.min_displaced, "mobility filter: minimum displaced cells [px]")
        ->capture_default_str();
    c->add_option("--max-new-runs", camp.max_new_runs, "stop after this many new simulations, 0 = no limit [count]")
        ->capture_default_str();
    add_range_flags(c, camp.volume, camp.density, camp.cohesion);
    add_solver_flags(c, camp.solver, camp.material);

    EnsembleArgs ens;
    auto* e = app.add_subcommand("ensemble", "Run a parameter ensemble and write reach-probability maps");
    e->add_option("--dem", ens.dem, "tile DEM (.rfg or ESRI .asc)")->required()->check(CLI::ExistingFile);
    e->add_option("--n", ens.n, "ensemble members [count]")->check(CLI::Range(2, 1 << 30))->capture_default_str();
    add_range_flags(e, ens.volume, ens.density, ens.cohesion);
    e->add_option("--sampler", ens.sampler, "sobol or lhs")
        ->check(CLI::IsMember({"sobol", "lhs"}))
        ->capture_default_str();
    e->add_option("--seed", ens.seed, "LHS seed [count]")->capture_default_str();
    e->add_option("--workers", ens.workers, "parallel members [count]")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    e->add_option("--out", ens.out, "output directory")->required();
    add_solver_flags(e, ens.solver, ens.material);

    MetricsArgs met;
    auto* m = app.add_subcommand("metrics", "Score predicted runs against reference runs");
    m->add_option("--pred", met.pred, "directory of predicted runs");
    m->add_option("--ref", met.ref, "directory of reference runs");
    m->add_option("--pairs", met.pairs, "JSON-lines file of explicit prediction/reference path pairs");
    m->add_option("--out", met.out, "report JSON path")->required();

    SplitArgs spl;
    auto* sp = app.add_subcommand("split", "Re-assign a dataset's tiles to train/val/test");
    sp->add_option("--dataset", spl.dataset, "dataset.jsonl")->required()->check(CLI::ExistingFile);
    sp->add_option("--seed", spl.seed, "shuffle seed [count]")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& err) {
        std::cerr << "error: " << err.what() << "\n" << "Run with --help for usage.\n";
        return 1;
    }

    try {
        if (*p) return cmd_prep(prep);
        if (*s) return cmd_simulate(sim);
        if (*c) return cmd_campaign(camp);
        if (*e) return cmd_ensemble(ens);
        if (*m) return cmd_metrics(met);
        if (*sp) return cmd_split(spl);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 1;
}
