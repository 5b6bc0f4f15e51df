#pragma once

#include "runout/raster.hpp"

#include <vector>

namespace runout {

/// Per-cell terrain geometry. x runs east along columns, y runs south along rows,
/// so grad_y is the elevation change per metre of increasing row index.
struct TerrainDerivatives {
    RasterField grad_x;
    RasterField grad_y;
    RasterField slope_deg;
    RasterField aspect_sin;  // downslope azimuth, clockwise from north
    RasterField aspect_cos;
    RasterField curv_profile;
    RasterField curv_plan;
    // Slope decomposition used by the momentum equations.
    RasterField sin_alpha_x;
    RasterField sin_alpha_y;
    RasterField cos_alpha;
};

/// Separable Gaussian blur, kernel truncated at ceil(3 sigma) and renormalized,
/// with half-sample symmetric reflection at the edges. `sigma` is in cells.
RasterField gaussian_smooth(const RasterField& field, double sigma);

/// Normalized 1-D kernel used by gaussian_smooth (length 2*ceil(3 sigma)+1).
std::vector<double> gaussian_kernel(double sigma);

/// Central differences in the interior, one-sided on the boundary.
/// Requires at least 3 rows and 3 columns.
TerrainDerivatives terrain_derivatives(const RasterField& dem);

/// Non-overlapping tiles in row-major scan order, keeping a tile iff the mean
/// slope over its central `center_window_px` square strictly exceeds the threshold.
/// Slopes are taken from the full DEM so tile seams do not see boundary stencils.
std::vector<RasterField> extract_tiles(const RasterField& dem, std::size_t tile_px = 256,
                                       double min_mean_slope_deg = 5.0, std::size_t center_window_px = 11);

/// Mean slope (degrees) over the centred window of the tile at (row0, col0).
double window_mean_slope(const RasterField& slope_deg, std::size_t row0, std::size_t col0, std::size_t tile_px,
                         std::size_t window_px);

}  // namespace runout
