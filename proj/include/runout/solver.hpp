#pragma once

#include "runout/raster.hpp"
#include "runout/source.hpp"
#include "runout/terrain.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace runout {

struct MaterialParams {
    double density_rho = 2000.0;  // kg m^-3
    double cohesion_c = 0.0;      // Pa
    double voellmy_mu = 0.0;      // Coulomb coefficient
    double voellmy_xi = 0.02;     // m s^-2
    double gravity_g = 9.81;      // m s^-2

    void validate() const;
};

struct SolverConfig {
    double dt_init = 0.25;              // s
    double dt_min = 0.05;               // s
    double cfl_number = 0.5;
    double h_min = 5.0e-4;              // m, dry threshold
    double v_stop = 0.5;                // m s^-1
    double t_max = 3600.0;              // s
    double footprint_threshold = 0.05;  // m

    void validate() const;
};

/// Conserved fields at cell centres.
struct FlowState {
    RasterField h;   // m
    RasterField hu;  // m^2 s^-1, eastward
    RasterField hv;  // m^2 s^-1, southward (increasing row)
    double t = 0.0;
    double outflow_volume = 0.0;  // m^3

    static FlowState at_rest(const RasterField& thickness);

    /// Sum of h * cell_area plus the volume that left the domain.
    double total_volume() const;
    double max_speed(double h_min) const;
};

/// DEM plus its precomputed derivatives; built once per tile.
struct Terrain {
    RasterField dem;
    TerrainDerivatives deriv;

    explicit Terrain(RasterField dem_field);
    const GridGeo& geo() const noexcept { return dem.geo(); }
};

enum class StopReason { velocity, t_max };
std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& text);

struct SimResult {
    RasterField final_h;
    Mask footprint;
    std::size_t displaced_px = 0;
    double stop_time = 0.0;
    StopReason stop_reason = StopReason::velocity;
    double outflow_volume = 0.0;
    MaterialParams params;
    double volume = 0.0;
    std::size_t steps = 0;
    double max_speed_seen = 0.0;
};

/// Voellmy basal shear stress (Pa): mu * sigma_z + rho g |u|^2 / xi,
/// with sigma_z = rho g h cos(alpha). Acts against the direction of motion.
double voellmy_basal_stress(double speed, double h, const MaterialParams& p, double cos_alpha);

/// Bingham yield deceleration: magnitude c / (rho h) opposing u; zero at rest.
std::array<double, 2> yield_deceleration(std::array<double, 2> u, double h, const MaterialParams& p);

/// CFL-limited step clamped into [dt_min, dt_init]; dt_init when nothing is wet.
double adapt_dt(const FlowState& state, const SolverConfig& cfg, const GridGeo& geo, double gravity_g = 9.81);

/// Thickness strictly above the footprint threshold.
Mask make_footprint(const RasterField& h, double threshold);

/// Footprint cells lying outside the source support.
std::size_t count_displaced(const Mask& footprint, const Mask& support);

/// Reusable scratch buffers for stepping one grid. Not shareable across threads.
class StepWorkspace {
public:
    explicit StepWorkspace(const GridGeo& geo);

    /// Advances `state` in place by dt. Throws NumericalBlowup on NaN/Inf.
    void advance(FlowState& state, const Terrain& terrain, const MaterialParams& p, const SolverConfig& cfg,
                 double dt);

private:
    GridGeo geo_;
    std::vector<double> u_, v_;
    std::vector<double> flux_x_, flux_y_;      // signed thickness transported per face
    std::vector<double> outgoing_;             // total thickness leaving each cell
    std::vector<double> pressure_;             // 0.5 g cos(alpha) h^2 per cell
};

/// One explicit step: upwind advection on a staggered layout, gravity and
/// pressure sources, then the split friction/yield update with stopping.
FlowState step(const FlowState& state, const Terrain& terrain, const MaterialParams& p, const SolverConfig& cfg,
               double dt);

/// Integrates from the pile at rest until motion stops or t_max.
SimResult run(const RasterField& dem, const PileField& pile, const MaterialParams& p, const SolverConfig& cfg);
SimResult run(const Terrain& terrain, const PileField& pile, const MaterialParams& p, const SolverConfig& cfg);

}  // namespace runout
