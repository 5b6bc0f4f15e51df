#include "runout/terrain.hpp"

#include "runout/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace runout {

namespace {

// Half-sample symmetric reflection: ... c b a | a b c ... | x y z | z y x ...
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    if (n == 1) return 0;
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ParameterError(fmt::format("sigma must be positive, got {}", sigma));
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        total += w;
    }
    for (auto& w : k) w /= total;
    return k;
}

RasterField gaussian_smooth(const RasterField& field, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto rows = static_cast<std::ptrdiff_t>(field.rows());
    const auto cols = static_cast<std::ptrdiff_t>(field.cols());

    RasterField tmp(field.geo());
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       field.at(static_cast<std::size_t>(r), static_cast<std::size_t>(reflect(c + k, cols)));
            tmp.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    }
    RasterField out(field.geo());
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp.at(static_cast<std::size_t>(reflect(r + k, rows)), static_cast<std::size_t>(c));
            out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    }
    return out;
}

TerrainDerivatives terrain_derivatives(const RasterField& dem) {
    const auto& g = dem.geo();
    if (g.rows < 3 || g.cols < 3)
        throw GeometryError(fmt::format("terrain derivatives need at least 3x3 cells, got {}x{}", g.rows, g.cols));
    for (std::size_t r = 1; r + 1 < g.rows; ++r)
        for (std::size_t c = 1; c + 1 < g.cols; ++c)
            if (dem.is_nodata(g.index(r, c)))
                throw GeometryError(fmt::format("nodata in DEM interior at ({}, {})", r, c));

    const double dx = g.cell_size;
    TerrainDerivatives d{RasterField(g), RasterField(g), RasterField(g), RasterField(g), RasterField(g),
                         RasterField(g), RasterField(g), RasterField(g), RasterField(g), RasterField(g)};

    auto d_dx = [&](const RasterField& f, std::size_t r, std::size_t c) {
        if (c == 0) return (f.at(r, 1) - f.at(r, 0)) / dx;
        if (c + 1 == g.cols) return (f.at(r, c) - f.at(r, c - 1)) / dx;
        return (f.at(r, c + 1) - f.at(r, c - 1)) / (2.0 * dx);
    };
    auto d_dy = [&](const RasterField& f, std::size_t r, std::size_t c) {
        if (r == 0) return (f.at(1, c) - f.at(0, c)) / dx;
        if (r + 1 == g.rows) return (f.at(r, c) - f.at(r - 1, c)) / dx;
        return (f.at(r + 1, c) - f.at(r - 1, c)) / (2.0 * dx);
    };

    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) {
            const double gx = d_dx(dem, r, c);
            const double gy = d_dy(dem, r, c);
            const double g2 = gx * gx + gy * gy;
            const double norm = std::sqrt(1.0 + g2);
            d.grad_x.at(r, c) = gx;
            d.grad_y.at(r, c) = gy;
            d.slope_deg.at(r, c) = std::atan(std::sqrt(g2)) * kRadToDeg;
            d.sin_alpha_x.at(r, c) = -gx / norm;
            d.sin_alpha_y.at(r, c) = -gy / norm;
            d.cos_alpha.at(r, c) = 1.0 / norm;
            if (g2 > 0.0) {
                // Downslope direction: east = -gx, north = +gy (y grows southwards).
                const double len = std::sqrt(g2);
                d.aspect_sin.at(r, c) = -gx / len;
                d.aspect_cos.at(r, c) = gy / len;
            } else {
                d.aspect_sin.at(r, c) = 0.0;
                d.aspect_cos.at(r, c) = 1.0;
            }
        }
    }

    // Curvatures from second differences on the interior; boundary cells copy
    // their nearest interior neighbour.
    const double dx2 = dx * dx;
    for (std::size_t r = 1; r + 1 < g.rows; ++r) {
        for (std::size_t c = 1; c + 1 < g.cols; ++c) {
            const double p = d.grad_x.at(r, c);
            const double q = d.grad_y.at(r, c);
            const double zxx = (dem.at(r, c + 1) - 2.0 * dem.at(r, c) + dem.at(r, c - 1)) / dx2;
            const double zyy = (dem.at(r + 1, c) - 2.0 * dem.at(r, c) + dem.at(r - 1, c)) / dx2;
            const double zxy =
                (dem.at(r + 1, c + 1) - dem.at(r + 1, c - 1) - dem.at(r - 1, c + 1) + dem.at(r - 1, c - 1)) /
                (4.0 * dx2);
            const double pq2 = p * p + q * q;
            double profile = 0.0;
            double plan = 0.0;
            if (pq2 > 0.0) {
                profile = -(p * p * zxx + 2.0 * p * q * zxy + q * q * zyy) / (pq2 * std::pow(1.0 + pq2, 1.5));
                plan = -(q * q * zxx - 2.0 * p * q * zxy + p * p * zyy) / std::pow(pq2, 1.5);
            }
            d.curv_profile.at(r, c) = profile;
            d.curv_plan.at(r, c) = plan;
        }
    }
    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) {
            if (r > 0 && r + 1 < g.rows && c > 0 && c + 1 < g.cols) continue;
            const std::size_t rr = std::clamp<std::size_t>(r, 1, g.rows - 2);
            const std::size_t cc = std::clamp<std::size_t>(c, 1, g.cols - 2);
            d.curv_profile.at(r, c) = d.curv_profile.at(rr, cc);
            d.curv_plan.at(r, c) = d.curv_plan.at(rr, cc);
        }
    }
    return d;
}

double window_mean_slope(const RasterField& slope_deg, std::size_t row0, std::size_t col0, std::size_t tile_px,
                         std::size_t window_px) {
    const std::size_t start = (tile_px - window_px) / 2;
    double acc = 0.0;
    for (std::size_t r = 0; r < window_px; ++r)
        for (std::size_t c = 0; c < window_px; ++c) acc += slope_deg.at(row0 + start + r, col0 + start + c);
    return acc / static_cast<double>(window_px * window_px);
}

std::vector<RasterField> extract_tiles(const RasterField& dem, std::size_t tile_px, double min_mean_slope_deg,
                                       std::size_t center_window_px) {
    const auto& g = dem.geo();
    if (tile_px == 0) throw ParameterError("tile size must be positive");
    if (center_window_px == 0 || center_window_px > tile_px)
        throw ParameterError(fmt::format("centre window {} must lie in [1, {}]", center_window_px, tile_px));
    if (g.rows < tile_px || g.cols < tile_px)
        throw GeometryError(fmt::format("DEM {}x{} is smaller than one {}-px tile", g.rows, g.cols, tile_px));

    const auto deriv = terrain_derivatives(dem);
    std::vector<RasterField> tiles;
    for (std::size_t row0 = 0; row0 + tile_px <= g.rows; row0 += tile_px) {
        for (std::size_t col0 = 0; col0 + tile_px <= g.cols; col0 += tile_px) {
            if (!(window_mean_slope(deriv.slope_deg, row0, col0, tile_px, center_window_px) > min_mean_slope_deg))
                continue;
            GridGeo tg = g;
            tg.rows = tile_px;
            tg.cols = tile_px;
            tg.origin_x = g.origin_x + static_cast<double>(col0) * g.cell_size;
            tg.origin_y = g.origin_y - static_cast<double>(row0) * g.cell_size;
            RasterField tile(tg);
            for (std::size_t r = 0; r < tile_px; ++r)
                for (std::size_t c = 0; c < tile_px; ++c) tile.at(r, c) = dem.at(row0 + r, col0 + c);
            tiles.push_back(std::move(tile));
        }
    }
    return tiles;
}

}  // namespace runout
