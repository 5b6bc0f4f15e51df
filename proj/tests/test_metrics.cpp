#include "runout/error.hpp"
#include "runout/metrics.hpp"
#include "runout/sim_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace runout;

namespace {

Mask mask(std::size_t rows, std::size_t cols, const std::vector<std::size_t>& on) {
    Mask m(testing::grid(rows, cols));
    for (auto i : on) m.set(i, true);
    return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("hand-counted 3x3 confusion") {
    const auto ref = mask(3, 3, {0, 1, 2, 3});
    const auto pred = mask(3, 3, {0, 1, 2, 4});
    const auto s = score_footprint(pred, ref);
    CHECK(s.tp == 3);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
    CHECK(s.tn == 4);
    CHECK(s.iou == 0.6);
    CHECK(s.f1 == 0.75);
    CHECK(s.precision == 0.75);
    CHECK(s.recall == 0.75);
}

TEST_CASE("perfect and disjoint") {
    const auto a = mask(4, 4, {1, 5, 6});
    auto s = score_footprint(a, a);
    CHECK(s.iou == 1.0);
    CHECK(s.f1 == 1.0);
    s = score_footprint(a, mask(4, 4, {0, 15}));
    CHECK(s.iou == 0.0);
    CHECK(s.f1 == 0.0);
}

TEST_CASE("empty masks") {
    const auto empty = mask(3, 3, {});
    auto s = score_footprint(empty, empty);
    CHECK(s.iou == 1.0);
    CHECK(s.f1 == 1.0);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    s = score_footprint(empty, mask(3, 3, {4}));
    CHECK(s.iou == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.precision == 0.0);
    CHECK_THROWS_AS(score_footprint(empty, mask(3, 4, {})), GeometryError);
}

TEST_CASE("f1 and iou identity on random masks") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double pa = u(rng), pb = u(rng);
        Mask a(testing::grid(8, 8)), b(testing::grid(8, 8));
        for (std::size_t i = 0; i < 64; ++i) {
            a.set(i, u(rng) < pa);
            b.set(i, u(rng) < pb);
        }
        const auto s = score_footprint(a, b);
        CHECK(s.f1 == doctest::Approx(2.0 * s.iou / (1.0 + s.iou)).epsilon(1e-12));
        CHECK(s.tp + s.fp + s.fn + s.tn == 64);
    }
}

TEST_CASE("thickness errors") {
    const auto geo = testing::grid(2, 4);
    const auto in = mask(2, 4, {0, 1, 2, 3});
    RasterField ref(geo, 0.0);
    for (std::size_t i = 0; i < 4; ++i) ref[i] = 3.0 + i;
    auto s = score_thickness(ref, ref, in);
    CHECK(*s.rmse_in == 0.0);
    CHECK(*s.rmse_out == 0.0);
    RasterField pred = ref;
    for (std::size_t i = 0; i < 4; ++i) pred[i] += 1.0;
    pred[6] = 2.0;
    s = score_thickness(pred, ref, in);
    CHECK(*s.rmse_in == doctest::Approx(1.0));
    CHECK(*s.bias_in == doctest::Approx(1.0));
    CHECK(*s.rmse_out == doctest::Approx(1.0));
    s = score_thickness(pred, ref, mask(2, 4, {}));
    CHECK_FALSE(s.rmse_in.has_value());
    CHECK(s.rmse_out.has_value());
}

TEST_CASE("runout distance") {
    CHECK(max_runout_distance(mask(9, 9, {40}), {4, 4}) == 0.0);
    CHECK(max_runout_distance(mask(9, 9, {}), {4, 4}) == 0.0);
    Mask disc(testing::grid(21, 21));
    for (int r = 0; r < 21; ++r)
        for (int c = 0; c < 21; ++c)
            if ((r - 10) * (r - 10) + (c - 10) * (c - 10) <= 25) disc.set(r, c, true);
    CHECK(max_runout_distance(disc, {10, 10}) == doctest::Approx(5.0).epsilon(0.1));
    CHECK(max_runout_distance(mask(1, 5, {0, 4}), {0, 1}) == 3.0);
}

TEST_CASE("batch scoring of run directories") {
    testing::TempDir pred("pred"), ref("ref");
    const auto geo = testing::grid(3, 3);
    for (const std::string id : {"r1", "r2"}) {
        std::filesystem::create_directories(pred / id);
        std::filesystem::create_directories(ref / id);
        RasterField h(geo, 0.0);
        h[4] = 1.0;
        write_raster(ref / id / "h.rfg", h);
        write_mask(ref / id / "footprint.rfg", Mask::threshold(h, 0.05));
        h[5] = 1.0;
        write_raster(pred / id / "h.rfg", h);
        write_mask(pred / id / "footprint.rfg", Mask::threshold(h, 0.05));
    }
    std::filesystem::create_directories(ref / "only_ref");
    const auto pairs = pair_run_directories(pred.path(), ref.path());
    REQUIRE(pairs.size() == 2);
    const auto report = batch_score(pairs);
    CHECK(report.at("n_runs") == 2);
    CHECK(report.at("runs")[0].at("iou").get<double>() == doctest::Approx(0.5));
    CHECK(report.at("aggregate").at("iou").at("mean").get<double>() == doctest::Approx(0.5));
    CHECK(report.at("aggregate").at("iou").at("std").get<double>() == 0.0);
    CHECK(report.at("runs")[0].at("runout_pred_px").get<double>() == 1.0);
    CHECK(report.at("runs")[0].at("runout_ref_px").get<double>() == 0.0);
}

TEST_CASE("explicit pairs file") {
    testing::TempDir dir("pairs");
    const auto geo = testing::grid(2, 2);
    RasterField h(geo, 0.0);
    h[0] = 1.0;
    write_raster(dir / "h.rfg", h);
    write_mask(dir / "f.rfg", Mask::threshold(h, 0.05));
    std::ofstream(dir / "pairs.jsonl")
        << R"({"run_id":"x","pred_h":"h.rfg","pred_footprint":"f.rfg","ref_h":"h.rfg","ref_footprint":"f.rfg","source_row":0,"source_col":1})"
        << "\n";
    const auto pairs = read_score_pairs(dir / "pairs.jsonl");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].source->col == 1.0);
    const auto report = batch_score(pairs);
    CHECK(report.at("runs")[0].at("f1") == 1.0);
    CHECK(report.at("runs")[0].at("runout_ref_px") == 1.0);
}

}
