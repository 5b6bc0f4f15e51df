#include "runout/campaign.hpp"
#include "runout/error.hpp"
#include "runout/sim_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

using namespace runout;
namespace fs = std::filesystem;

namespace {

DatasetManifest synthetic_manifest(std::size_t tiles, std::size_t runs) {
    DatasetManifest m;
    for (std::size_t t = 0; t < tiles; ++t)
        for (std::size_t r = 0; r < runs; ++r) {
            DatasetEntry e;
            e.tile_id = "tile" + std::to_string(t);
            e.run_id = fnv1a_hex(e.tile_id + "/" + std::to_string(r));
            e.h_path = e.run_id + "/h.rfg";
            e.footprint_path = e.run_id + "/footprint.rfg";
            e.displaced_px = 20;
            m.entries.push_back(e);
        }
    return m;
}

std::map<std::string, std::set<std::string>> tiles_by_split(const DatasetManifest& m) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& e : m.entries) out[e.split].insert(e.tile_id);
    return out;
}

}  // namespace

TEST_SUITE("campaign") {

TEST_CASE("mobility filter boundary") {
    CHECK_FALSE(passes_mobility_filter(14, 15));
    CHECK(passes_mobility_filter(15, 15));
    CHECK(passes_mobility_filter(0, 0));
}

TEST_CASE("displaced pixel counting") {
    SourceSpec spec;
    const auto pile = build_pile(testing::grid(64, 64), spec);
    SimResult res;
    res.footprint = pile.support_mask;
    CHECK(compute_displaced_px(res, pile) == 0);
    // support plus 20 cells in a downslope column strip below the pile
    std::size_t added = 0;
    for (std::size_t r = pile.center_row + 12; added < 20; ++r) {
        res.footprint.set(r, pile.center_col, true);
        ++added;
    }
    CHECK(compute_displaced_px(res, pile) == 20);
    res.footprint = Mask(testing::grid(64, 64));
    CHECK(compute_displaced_px(res, pile) == 0);
    res.footprint = Mask(testing::grid(32, 64));
    CHECK_THROWS_AS(compute_displaced_px(res, pile), GeometryError);
}

TEST_CASE("run ids are stable and sensitive to their inputs") {
    const SolverConfig cfg;
    const UnitPoint u{0.1, 0.2, 0.3};
    CHECK(make_run_id("a", u, cfg) == make_run_id("a", u, cfg));
    CHECK(make_run_id("a", u, cfg).size() == 16);
    CHECK(make_run_id("a", u, cfg) != make_run_id("b", u, cfg));
    CHECK(make_run_id("a", u, cfg) != make_run_id("a", {0.1, 0.2, 0.30000000000000004}, cfg));
    SolverConfig other;
    other.t_max = 100.0;
    CHECK(make_run_id("a", u, cfg) != make_run_id("a", u, other));
    CHECK(tile_seed(1, "a") != tile_seed(2, "a"));
}

TEST_CASE("ten tiles split 8/1/1 and never share a tile") {
    const auto m = split_dataset(synthetic_manifest(10, 3), {0.8, 0.1, 0.1}, 11);
    auto by = tiles_by_split(m);
    CHECK(by["train"].size() == 8);
    CHECK(by["val"].size() == 1);
    CHECK(by["test"].size() == 1);
    for (const auto& e : m.entries) CHECK_FALSE(e.split.empty());
    for (const char* a : {"train", "val", "test"})
        for (const char* b : {"train", "val", "test"})
            if (std::string(a) != b)
                for (const auto& t : by[a]) CHECK(by[b].count(t) == 0);
}

TEST_CASE("split is disjoint for many tile counts and deterministic per seed") {
    for (std::size_t n = 3; n <= 40; ++n) {
        const auto m = split_dataset(synthetic_manifest(n, 2), {0.8, 0.1, 0.1}, n);
        std::map<std::string, std::string> seen;
        for (const auto& e : m.entries) {
            auto [it, fresh] = seen.emplace(e.tile_id, e.split);
            CHECK(it->second == e.split);
        }
        auto by = tiles_by_split(m);
        CHECK(by["val"].size() >= 1);
        CHECK(by["test"].size() >= 1);
        CHECK(by["train"].size() + by["val"].size() + by["test"].size() == n);
        CHECK(split_dataset(synthetic_manifest(n, 2), {0.8, 0.1, 0.1}, n) == m);
    }
}

TEST_CASE("too few tiles to split") {
    CHECK_THROWS_AS(split_dataset(synthetic_manifest(2, 5), {0.8, 0.1, 0.1}, 1), SplitError);
    CHECK_THROWS_AS(split_dataset(synthetic_manifest(5, 1), {0.8, 0.1, 0.2}, 1), SplitError);
}

TEST_CASE("dataset files round trip") {
    testing::TempDir dir("dataset");
    const auto m = split_dataset(synthetic_manifest(4, 2), {0.8, 0.1, 0.1}, 3);
    write_dataset(dir.path(), m);
    CHECK(read_dataset(dir / "dataset.jsonl").entries == m.entries);
    const auto splits = read_json(dir / "splits.json");
    CHECK(splits.size() == 4);
    std::ofstream(dir / "broken.jsonl") << "{\"run_id\": 1}\n";
    CHECK_THROWS_AS(read_dataset(dir / "broken.jsonl"), FormatError);
}

TEST_CASE("three mobile tiles, two runs each") {
    testing::TempDir tiles("tiles"), out("out");
    auto cfg = testing::steep_campaign(tiles.path(), out.path(), 3, 2);
    for (int i = 0; i < 3; ++i)
        write_raster(tiles / ("tile" + std::to_string(i) + ".rfg"), testing::plane(64, 64, 50.0));
    cfg.min_displaced_px = 1;
    const auto rep = run_campaign(cfg);
    CHECK(rep.status == CampaignStatus::ok);
    REQUIRE(rep.manifest.entries.size() == 6);
    for (const auto& e : rep.manifest.entries) {
        CHECK(fs::exists(out / e.h_path));
        CHECK(fs::exists(out / e.footprint_path));
        CHECK(fs::exists(out / e.run_id / "manifest.json"));
        CHECK(read_raster(out / e.h_path).geo().same_shape(testing::grid(64, 64)));
        const auto man = read_json(out / e.run_id / "manifest.json");
        CHECK(man.at("run_id") == e.run_id);
        CHECK(man.at("dem_id") == e.tile_id);
        CHECK(man.at("displaced_px") == e.displaced_px);
        CHECK(e.displaced_px >= 1);
    }
}

TEST_CASE("discarded runs keep a manifest but no rasters") {
    testing::TempDir tiles("tiles"), out("out");
    auto cfg = testing::steep_campaign(tiles.path(), out.path(), 1, 3);
    fs::remove(tiles / "tile0.rfg");
    write_raster(tiles / "flat.rfg", RasterField(testing::grid(64, 64), 100.0));
    const auto rep = run_campaign(cfg);
    CHECK(rep.status == CampaignStatus::empty);
    CHECK(rep.discarded == 3);
    std::size_t dirs = 0;
    for (const auto& d : fs::directory_iterator(out.path())) {
        if (!d.is_directory()) continue;
        ++dirs;
        CHECK(fs::exists(d.path() / "manifest.json"));
        CHECK_FALSE(fs::exists(d.path() / "h.rfg"));
    }
    CHECK(dirs == 3);
}

TEST_CASE("bad tiles are reported and skipped") {
    testing::TempDir tiles("tiles"), out("out");
    auto cfg = testing::steep_campaign(tiles.path(), out.path(), 1, 2);
    std::ofstream(tiles / "junk.rfg") << "not a raster";
    write_raster(tiles / "small.rfg", testing::plane(12, 12, 30.0));
    cfg.min_displaced_px = 0;
    const auto rep = run_campaign(cfg);
    CHECK(rep.tile_errors.size() == 2);
    CHECK(rep.manifest.entries.size() == 2);
}

TEST_CASE("resume after an interruption reproduces the manifest") {
    testing::TempDir tiles("tiles"), a("a"), b("b");
    auto cfg = testing::steep_campaign(tiles.path(), a.path(), 3, 4);
    const auto full = run_campaign(cfg);

    cfg.output_dir = b.path();
    cfg.max_new_runs = 5;
    const auto partial = run_campaign(cfg);
    CHECK(partial.status == CampaignStatus::incomplete);
    CHECK(partial.simulated == 5);
    CHECK(partial.pending == 7);
    // a run killed mid-write leaves rasters without a manifest; it must be redone
    std::size_t dropped = 0;
    for (const auto& d : fs::directory_iterator(b.path()))
        if (dropped == 0 && fs::exists(d.path() / "h.rfg")) {
            fs::remove(d.path() / "manifest.json");
            ++dropped;
        }
    REQUIRE(dropped == 1);
    cfg.max_new_runs.reset();
    const auto resumed = run_campaign(cfg);
    CHECK(resumed.simulated == 8);
    CHECK(resumed.resumed == 4);
    CHECK(resumed.manifest == full.manifest);

    const auto again = run_campaign(cfg);
    CHECK(again.simulated == 0);
    CHECK(again.manifest == full.manifest);
}

TEST_CASE("configuration validation") {
    CampaignConfig cfg;
    cfg.output_dir = "x";
    cfg.runs_per_tile = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

}
