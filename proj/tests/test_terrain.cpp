#include "runout/error.hpp"
#include "runout/terrain.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace runout;

TEST_SUITE("terrain") {

TEST_CASE("smoothing keeps constants") {
    RasterField f(testing::grid(12, 9), 100.0);
    const auto s = gaussian_smooth(f, 1.0);
    for (double v : s.values()) CHECK(v == doctest::Approx(100.0).epsilon(1e-14));
}

TEST_CASE("impulse response equals the normalized kernel") {
    RasterField f(testing::grid(9, 9), 0.0);
    f.at(4, 4) = 1.0;
    const auto s = gaussian_smooth(f, 1.0);
    // kernel built here from scratch: radius 3, weights exp(-x^2/2) normalized
    double norm = 0.0;
    for (int x = -3; x <= 3; ++x) norm += std::exp(-0.5 * x * x);
    const double peak = 1.0 / norm;
    CHECK(s.at(4, 4) == doctest::Approx(peak * peak).epsilon(1e-14));
    CHECK(s.at(4, 6) == doctest::Approx(peak * std::exp(-2.0) / norm).epsilon(1e-14));
    CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-14));
    const auto k = gaussian_kernel(1.0);
    CHECK(k.size() == 7);
    CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("impulse near an edge still sums to one") {
    RasterField f(testing::grid(9, 9), 0.0);
    f.at(0, 1) = 1.0;
    CHECK(gaussian_smooth(f, 1.5).sum() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("ramp preserved in the interior") {
    RasterField f(testing::grid(15, 15));
    for (std::size_t r = 0; r < 15; ++r)
        for (std::size_t c = 0; c < 15; ++c) f.at(r, c) = static_cast<double>(c);
    const auto s = gaussian_smooth(f, 1.0);
    for (std::size_t r = 0; r < 15; ++r)
        for (std::size_t c = 3; c < 12; ++c) CHECK(s.at(r, c) == doctest::Approx(static_cast<double>(c)).epsilon(1e-13));
    CHECK_THROWS_AS(gaussian_smooth(f, 0.0), ParameterError);
}

TEST_CASE("flat terrain") {
    const auto d = terrain_derivatives(RasterField(testing::grid(6, 5), 1234.0));
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(d.slope_deg[i] == 0.0);
        CHECK(d.sin_alpha_x[i] == 0.0);
        CHECK(d.sin_alpha_y[i] == 0.0);
        CHECK(d.cos_alpha[i] == 1.0);
    }
}

TEST_CASE("45 degree plane rising east") {
    RasterField dem(testing::grid(6, 6));
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 6; ++c) dem.at(r, c) = static_cast<double>(c) * 30.0;
    const auto d = terrain_derivatives(dem);
    for (std::size_t r = 1; r < 5; ++r)
        for (std::size_t c = 1; c < 5; ++c) {
            CHECK(d.slope_deg.at(r, c) == doctest::Approx(45.0).epsilon(1e-12));
            CHECK(d.grad_x.at(r, c) == doctest::Approx(1.0));
            // downslope is west: azimuth 270
            CHECK(d.aspect_sin.at(r, c) == doctest::Approx(-1.0));
            CHECK(d.aspect_cos.at(r, c) == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(d.sin_alpha_x.at(r, c) == doctest::Approx(-std::sqrt(0.5)));
            CHECK(d.cos_alpha.at(r, c) == doctest::Approx(std::sqrt(0.5)));
        }
}

TEST_CASE("gradients match a brute-force finite-difference oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> z(0.0, 500.0);
    RasterField dem(testing::grid(8, 8, 25.0));
    for (auto& v : dem.values()) v = z(rng);
    const auto d = terrain_derivatives(dem);
    const double h = 25.0;
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c) {
            double gx, gy;
            if (c == 0) gx = (dem.at(r, 1) - dem.at(r, 0)) / h;
            else if (c == 7) gx = (dem.at(r, 7) - dem.at(r, 6)) / h;
            else gx = (dem.at(r, c + 1) - dem.at(r, c - 1)) / (2 * h);
            if (r == 0) gy = (dem.at(1, c) - dem.at(0, c)) / h;
            else if (r == 7) gy = (dem.at(7, c) - dem.at(6, c)) / h;
            else gy = (dem.at(r + 1, c) - dem.at(r - 1, c)) / (2 * h);
            CHECK(std::abs(d.grad_x.at(r, c) - gx) <= 1e-12);
            CHECK(std::abs(d.grad_y.at(r, c) - gy) <= 1e-12);
            const double g2 = gx * gx + gy * gy;
            CHECK(d.sin_alpha_x.at(r, c) == doctest::Approx(-gx / std::sqrt(1 + g2)));
            CHECK(d.sin_alpha_y.at(r, c) == doctest::Approx(-gy / std::sqrt(1 + g2)));
            CHECK(d.slope_deg.at(r, c) == doctest::Approx(std::atan(std::sqrt(g2)) * 180.0 / std::numbers::pi));
        }
}

TEST_CASE("curvature of a paraboloid bowl is uniform and of one sign") {
    RasterField dem(testing::grid(9, 9, 1.0));
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 9; ++c) {
            const double x = static_cast<double>(c) - 4.0, y = static_cast<double>(r) - 4.0;
            dem.at(r, c) = 0.01 * (x * x + y * y);
        }
    const auto d = terrain_derivatives(dem);
    CHECK(std::isfinite(d.curv_profile.at(4, 4)));
    CHECK(std::isfinite(d.curv_plan.at(4, 4)));
    CHECK(d.curv_profile.at(2, 6) * d.curv_profile.at(6, 2) >= 0.0);
}

TEST_CASE("tiny or holed DEMs are rejected") {
    CHECK_THROWS_AS(terrain_derivatives(RasterField(testing::grid(2, 5))), GeometryError);
    RasterField dem(testing::grid(5, 5), 1.0);
    dem.at(2, 2) = dem.geo().nodata;
    CHECK_THROWS_AS(terrain_derivatives(dem), GeometryError);
}

TEST_CASE("tile extraction by centre-window slope") {
    CHECK(extract_tiles(RasterField(testing::grid(256, 256), 10.0)).empty());
    CHECK(extract_tiles(testing::plane(256, 256, 10.0)).size() == 1);

    // left half flat, right half a 10 degree plane falling south
    RasterField dem(testing::grid(256, 512));
    const double t = std::tan(testing::deg2rad(10.0));
    for (std::size_t r = 0; r < 256; ++r)
        for (std::size_t c = 0; c < 512; ++c) dem.at(r, c) = c < 256 ? 3000.0 : 3000.0 - static_cast<double>(r) * 30.0 * t;
    const auto tiles = extract_tiles(dem);
    REQUIRE(tiles.size() == 1);
    CHECK(tiles[0].geo().origin_x == doctest::Approx(256 * 30.0));
    CHECK(tiles[0].at(0, 0) == dem.at(0, 256));

    const auto slope = terrain_derivatives(dem).slope_deg;
    CHECK(window_mean_slope(slope, 0, 0, 256, 11) == doctest::Approx(0.0));
    CHECK(window_mean_slope(slope, 0, 256, 256, 11) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("threshold is strict") {
    // an exactly-5-degree plane has centre mean 5.0 (to rounding) and must not pass a 5.0 + eps threshold
    const auto dem = testing::plane(64, 64, 5.0);
    CHECK(extract_tiles(dem, 64, 5.0 + 1e-9).empty());
    CHECK(extract_tiles(dem, 64, 5.0 - 1e-9).size() == 1);
}

}
