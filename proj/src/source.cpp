#include "runout/source.hpp"

#include "runout/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace runout {

namespace {

bool in_disc(long dr, long dc, std::size_t kernel_px) {
    const double radius = 0.5 * static_cast<double>(kernel_px);
    return static_cast<double>(dr * dr + dc * dc) <= radius * radius;
}

}  // namespace

void SourceSpec::validate() const {
    if (!(volume > 0.0) || !std::isfinite(volume))
        throw ParameterError(fmt::format("source volume must be positive, got {}", volume));
    if (!(target_mean_thickness > 0.0))
        throw ParameterError(fmt::format("target mean thickness must be positive, got {}", target_mean_thickness));
    if (kernel_halfwidth_min > kernel_halfwidth_max)
        throw ParameterError("kernel halfwidth min exceeds max");
}

std::size_t pile_support_cells(std::size_t kernel_px) {
    const long half = static_cast<long>(kernel_px / 2);
    std::size_t n = 0;
    for (long dr = -half; dr <= half; ++dr)
        for (long dc = -half; dc <= half; ++dc)
            if (in_disc(dr, dc, kernel_px)) ++n;
    return n;
}

std::size_t choose_kernel_px(const SourceSpec& spec, double cell_size) {
    spec.validate();
    const double cell_area = cell_size * cell_size;
    std::size_t chosen = 2 * spec.kernel_halfwidth_min + 1;
    for (std::size_t half = spec.kernel_halfwidth_min; half <= spec.kernel_halfwidth_max; ++half) {
        const std::size_t px = 2 * half + 1;
        const double mean = spec.volume / (static_cast<double>(pile_support_cells(px)) * cell_area);
        if (mean >= spec.target_mean_thickness) chosen = px;
    }
    return chosen;
}

PileField build_pile(const GridGeo& geo, const SourceSpec& spec) {
    spec.validate();
    geo.validate();
    const std::size_t kernel_px = choose_kernel_px(spec, geo.cell_size);
    const std::size_t half = kernel_px / 2;
    const std::size_t max_half = spec.kernel_halfwidth_max;
    const std::size_t cr = geo.rows / 2;
    const std::size_t cc = geo.cols / 2;
    if (cr < max_half || cc < max_half || cr + max_half >= geo.rows || cc + max_half >= geo.cols)
        throw GeometryError(fmt::format("{}x{} grid cannot hold a {}-px kernel at its centre", geo.rows, geo.cols,
                                        2 * max_half + 1));

    const double sigma = static_cast<double>(kernel_px) / 6.0;
    PileField pile{RasterField(geo), Mask(geo), kernel_px, cr, cc};
    double total = 0.0;
    for (long dr = -static_cast<long>(half); dr <= static_cast<long>(half); ++dr) {
        for (long dc = -static_cast<long>(half); dc <= static_cast<long>(half); ++dc) {
            if (!in_disc(dr, dc, kernel_px)) continue;
            const double r2 = static_cast<double>(dr * dr + dc * dc);
            const double w = std::exp(-r2 / (2.0 * sigma * sigma));
            pile.thickness.at(cr + dr, cc + dc) = w;
            pile.support_mask.set(cr + dr, cc + dc, true);
            total += w;
        }
    }
    const double amplitude = spec.volume / (total * geo.cell_area());
    for (auto& v : pile.thickness.values()) v *= amplitude;
    return pile;
}

CellPoint pile_centroid(const PileField& pile) {
    const auto& h = pile.thickness;
    double mass = 0.0, mr = 0.0, mc = 0.0;
    for (std::size_t r = 0; r < h.rows(); ++r) {
        for (std::size_t c = 0; c < h.cols(); ++c) {
            const double v = h.at(r, c);
            mass += v;
            mr += v * static_cast<double>(r);
            mc += v * static_cast<double>(c);
        }
    }
    if (mass <= 0.0) return {static_cast<double>(pile.center_row), static_cast<double>(pile.center_col)};
    return {mr / mass, mc / mass};
}

}  // namespace runout
