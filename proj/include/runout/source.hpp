#pragma once

#include "runout/raster.hpp"

namespace runout {

struct SourceSpec {
    double volume = 1.0e6;                // m^3
    double target_mean_thickness = 25.0;  // m
    std::size_t kernel_halfwidth_min = 3;  // cells, 7-px kernel
    std::size_t kernel_halfwidth_max = 10; // cells, 21-px kernel

    void validate() const;
};

/// Initial thickness of a centred Gaussian pile.
struct PileField {
    RasterField thickness;
    Mask support_mask;
    std::size_t kernel_px = 0;
    std::size_t center_row = 0;
    std::size_t center_col = 0;
};

/// Number of cells in the kernel disc (cell centres within kernel_px/2 of the centre).
std::size_t pile_support_cells(std::size_t kernel_px);

/// Kernel width for a volume: the widest odd kernel in the allowed range whose
/// support-mean thickness (volume / support area) stays at or above the target.
/// Falls back to the narrowest kernel when even that one is too thin.
std::size_t choose_kernel_px(const SourceSpec& spec, double cell_size);

/// Truncated Gaussian pile (sigma = kernel_px / 6 cells) centred on cell
/// (rows/2, cols/2), scaled so that sum(h) * cell_area equals the volume.
PileField build_pile(const GridGeo& geo, const SourceSpec& spec);

/// Thickness-weighted centroid in (row, col) cell coordinates.
struct CellPoint {
    double row = 0.0;
    double col = 0.0;
};
CellPoint pile_centroid(const PileField& pile);

}  // namespace runout
