#include "runout/raster.hpp"
#include "runout/sim_io.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

using namespace runout;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(const std::string& args, const testing::TempDir& scratch) {
    const auto out = scratch / "stdout.txt";
    const auto err = scratch / "stderr.txt";
    const std::string cmd =
        std::string("\"") + RUNOUT_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits cleanly and lists units") {
    testing::TempDir dir("cli");
    auto r = cli("--help", dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("simulate") != std::string::npos);
    r = cli("simulate --help", dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("[m^3]") != std::string::npos);
    CHECK(r.out.find("[kg/m^3]") != std::string::npos);
    CHECK(r.out.find("[Pa]") != std::string::npos);
    CHECK(r.out.find("[s]") != std::string::npos);
}

TEST_CASE("usage errors exit 1 and name the flag") {
    testing::TempDir dir("cli");
    write_raster(dir / "flat.rfg", RasterField(testing::grid(48, 48), 10.0));
    auto r = cli(fmt::format("simulate --dem {} --volume 1e6 --density 2000 --cohesion -1 --out {}",
                             (dir / "flat.rfg").string(), (dir / "run").string()),
                 dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("--cohesion") != std::string::npos);
    r = cli("simulate", dir);
    CHECK(r.code == 1);
    r = cli("frobnicate", dir);
    CHECK(r.code == 1);
    r = cli(fmt::format("ensemble --dem {} --out {} --volume 10", (dir / "flat.rfg").string(), (dir / "e").string()),
            dir);
    CHECK(r.code != 0);
}

TEST_CASE("runtime errors exit 2") {
    testing::TempDir dir("cli");
    std::ofstream(dir / "junk.rfg") << "garbage";
    const auto r = cli(fmt::format("simulate --dem {} --volume 1e6 --density 2000 --cohesion 0 --out {}",
                                   (dir / "junk.rfg").string(), (dir / "run").string()),
                       dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("simulate statics end to end") {
    testing::TempDir dir("cli");
    write_raster(dir / "flat.rfg", RasterField(testing::grid(48, 48), 10.0));
    const auto r = cli(fmt::format("simulate --dem {} --volume 1e4 --density 2000 --cohesion 50000 --out {}",
                                   (dir / "flat.rfg").string(), (dir / "run").string()),
                       dir);
    REQUIRE(r.code == 0);
    const auto m = read_json(dir / "run" / "manifest.json");
    CHECK(m.at("stop_reason") == "velocity");
    CHECK(m.at("displaced_px") == 0);
    CHECK(m.at("dem_id") == "flat");
    CHECK(m.at("cohesion_pa") == 50000.0);
    CHECK(fs::exists(dir / "run" / "h.rfg"));
    CHECK(read_mask(dir / "run" / "footprint.rfg").count() > 0);
}

TEST_CASE("prep cuts slope-filtered tiles") {
    testing::TempDir dir("cli");
    RasterField dem(testing::grid(64, 128));
    const auto steep = testing::plane(64, 128, 15.0);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 128; ++c) dem.at(r, c) = c < 64 ? 5000.0 : steep.at(r, c);
    write_raster(dir / "area.rfg", dem);
    const auto r = cli(fmt::format("prep --dem {} --out {} --tile 64", (dir / "area.rfg").string(), (dir / "tiles").string()),
                       dir);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "tiles" / "area_r00000_c00064.rfg"));
    CHECK_FALSE(fs::exists(dir / "tiles" / "area_r00000_c00000.rfg"));
    CHECK(read_json(dir / "tiles" / "tiles.json").size() == 1);
}

TEST_CASE("campaign resumes, splits, and scores") {
    testing::TempDir dir("cli");
    const auto cfg = testing::steep_campaign(dir / "tiles", dir / "data", 4, 3);
    const std::string args = fmt::format(
        "campaign --tiles {} --out {} --runs-per-tile 3 --seed 5 --workers 2 --volume 5e6:1e7 --density 2000:2650 "
        "--cohesion 5000:6000 --t-max 600",
        cfg.tiles_dir.string(), cfg.output_dir.string());
    auto r = cli(args, dir);
    REQUIRE(r.code == 0);
    const auto first = read_json(dir / "data" / "campaign.json");
    CHECK(first.at("simulated") == 12);
    std::ifstream in1(dir / "data" / "dataset.jsonl");
    const std::string dataset1(std::istreambuf_iterator<char>(in1), {});

    r = cli(args, dir);
    REQUIRE(r.code == 0);
    const auto second = read_json(dir / "data" / "campaign.json");
    CHECK(second.at("simulated") == 0);
    CHECK(second.at("resumed") == 12);
    std::ifstream in2(dir / "data" / "dataset.jsonl");
    CHECK(std::string(std::istreambuf_iterator<char>(in2), {}) == dataset1);

    r = cli(fmt::format("split --dataset {} --seed 9", (dir / "data" / "dataset.jsonl").string()), dir);
    CHECK(r.code == 0);
    CHECK(read_json(dir / "data" / "splits.json").size() >= 3);

    r = cli(fmt::format("metrics --pred {0} --ref {0} --out {1}", (dir / "data").string(), (dir / "report.json").string()),
            dir);
    REQUIRE(r.code == 0);
    const auto report = read_json(dir / "report.json");
    CHECK(report.at("n_runs").get<int>() == second.at("retained").get<int>());
    if (report.at("n_runs").get<int>() > 0) CHECK(report.at("aggregate").at("iou").at("mean") == 1.0);
}

TEST_CASE("ensemble writes its products") {
    testing::TempDir dir("cli");
    write_raster(dir / "v.rfg", testing::valley(48, 48, 30.0, 10.0));
    const auto r = cli(fmt::format("ensemble --dem {} --n 4 --sampler lhs --seed 3 --t-max 120 --out {}",
                                   (dir / "v.rfg").string(), (dir / "ens").string()),
                       dir);
    REQUIRE(r.code == 0);
    for (const char* f : {"p_reach.rfg", "q50.rfg", "q90.rfg", "ensemble.json"}) CHECK(fs::exists(dir / "ens" / f));
    CHECK(read_json(dir / "ens" / "ensemble.json").at("n_members") == 4);
}

}
