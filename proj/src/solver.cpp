#include "runout/solver.hpp"

#include "runout/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace runout {

void MaterialParams::validate() const {
    if (!(density_rho > 0.0) || !std::isfinite(density_rho))
        throw ParameterError(fmt::format("density must be positive, got {}", density_rho));
    if (!(cohesion_c >= 0.0) || !std::isfinite(cohesion_c))
        throw ParameterError(fmt::format("cohesion must be non-negative, got {}", cohesion_c));
    if (!(voellmy_mu >= 0.0) || !std::isfinite(voellmy_mu))
        throw ParameterError(fmt::format("mu must be non-negative, got {}", voellmy_mu));
    if (!(voellmy_xi > 0.0) || !std::isfinite(voellmy_xi))
        throw ParameterError(fmt::format("xi must be positive, got {}", voellmy_xi));
    if (!(gravity_g > 0.0)) throw ParameterError(fmt::format("gravity must be positive, got {}", gravity_g));
}

void SolverConfig::validate() const {
    if (!(dt_min > 0.0) || !(dt_min <= dt_init))
        throw ParameterError(fmt::format("need 0 < dt_min <= dt_init, got {} and {}", dt_min, dt_init));
    if (!(cfl_number > 0.0) || cfl_number > 1.0)
        throw ParameterError(fmt::format("cfl number must lie in (0, 1], got {}", cfl_number));
    if (!(h_min > 0.0)) throw ParameterError(fmt::format("h_min must be positive, got {}", h_min));
    if (!(v_stop > 0.0)) throw ParameterError(fmt::format("v_stop must be positive, got {}", v_stop));
    if (!(t_max > 0.0)) throw ParameterError(fmt::format("t_max must be positive, got {}", t_max));
    if (!(footprint_threshold >= 0.0))
        throw ParameterError(fmt::format("footprint threshold must be non-negative, got {}", footprint_threshold));
}

FlowState FlowState::at_rest(const RasterField& thickness) {
    for (double v : thickness.values())
        if (!(v >= 0.0)) throw ParameterError("initial thickness must be non-negative and finite");
    return FlowState{thickness, RasterField(thickness.geo()), RasterField(thickness.geo()), 0.0, 0.0};
}

double FlowState::total_volume() const { return h.sum() * h.geo().cell_area() + outflow_volume; }

double FlowState::max_speed(double h_min) const {
    double m = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i] < h_min) continue;
        const double u = hu[i] / h[i];
        const double v = hv[i] / h[i];
        m = std::max(m, std::sqrt(u * u + v * v));
    }
    return m;
}

Terrain::Terrain(RasterField dem_field) : dem(std::move(dem_field)), deriv(terrain_derivatives(dem)) {}

std::string to_string(StopReason reason) { return reason == StopReason::velocity ? "velocity" : "t_max"; }

StopReason stop_reason_from_string(const std::string& text) {
    if (text == "velocity") return StopReason::velocity;
    if (text == "t_max") return StopReason::t_max;
    throw FormatError(fmt::format("unknown stop reason '{}'", text));
}

double voellmy_basal_stress(double speed, double h, const MaterialParams& p, double cos_alpha) {
    const double sigma_z = p.density_rho * p.gravity_g * h * cos_alpha;
    return p.voellmy_mu * sigma_z + p.density_rho * p.gravity_g * speed * speed / p.voellmy_xi;
}

std::array<double, 2> yield_deceleration(std::array<double, 2> u, double h, const MaterialParams& p) {
    const double speed = std::hypot(u[0], u[1]);
    if (speed == 0.0 || p.cohesion_c == 0.0) return {0.0, 0.0};
    const double magnitude = p.cohesion_c / (p.density_rho * h);
    return {-magnitude * u[0] / speed, -magnitude * u[1] / speed};
}

double adapt_dt(const FlowState& state, const SolverConfig& cfg, const GridGeo& geo, double gravity_g) {
    double max_wave = 0.0;
    const auto& h = state.h;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0)) continue;
        double speed = 0.0;
        if (h[i] >= cfg.h_min) speed = std::hypot(state.hu[i], state.hv[i]) / h[i];
        max_wave = std::max(max_wave, speed + std::sqrt(gravity_g * h[i]));
    }
    if (max_wave == 0.0) return cfg.dt_init;
    return std::clamp(cfg.cfl_number * geo.cell_size / max_wave, cfg.dt_min, cfg.dt_init);
}

Mask make_footprint(const RasterField& h, double threshold) { return Mask::threshold(h, threshold); }

std::size_t count_displaced(const Mask& footprint, const Mask& support) {
    if (!footprint.geo().same_shape(support.geo()))
        throw GeometryError("footprint and source support differ in geometry");
    std::size_t n = 0;
    for (std::size_t i = 0; i < footprint.size(); ++i)
        if (footprint[i] && !support[i]) ++n;
    return n;
}

StepWorkspace::StepWorkspace(const GridGeo& geo)
    : geo_(geo),
      u_(geo.size()),
      v_(geo.size()),
      flux_x_(geo.rows * (geo.cols + 1)),
      flux_y_((geo.rows + 1) * geo.cols),
      outgoing_(geo.size()),
      pressure_(geo.size()) {}

void StepWorkspace::advance(FlowState& state, const Terrain& terrain, const MaterialParams& p,
                            const SolverConfig& cfg, double dt) {
    const std::size_t rows = geo_.rows;
    const std::size_t cols = geo_.cols;
    const std::size_t n = geo_.size();
    const double dx = geo_.cell_size;
    const double courant = dt / dx;
    const double g = p.gravity_g;

    auto& h = state.h.values();
    auto& hu = state.hu.values();
    auto& hv = state.hv.values();
    const auto& sin_x = terrain.deriv.sin_alpha_x.values();
    const auto& sin_y = terrain.deriv.sin_alpha_y.values();
    const auto& cos_a = terrain.deriv.cos_alpha.values();

    for (std::size_t i = 0; i < n; ++i) {
        if (h[i] >= cfg.h_min) {
            u_[i] = hu[i] / h[i];
            v_[i] = hv[i] / h[i];
        } else {
            u_[i] = 0.0;
            v_[i] = 0.0;
        }
        outgoing_[i] = 0.0;
    }

    // Face fluxes (thickness units). Face velocity is the mean of its two cells;
    // the upwind cell donates. Boundary faces only pass outward flow.
    const std::size_t xs = cols + 1;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t row = r * cols;
        for (std::size_t c = 0; c <= cols; ++c) {
            double f = 0.0;
            if (c == 0) {
                const double uf = u_[row];
                if (uf < 0.0) f = uf * courant * h[row];
            } else if (c == cols) {
                const double uf = u_[row + cols - 1];
                if (uf > 0.0) f = uf * courant * h[row + cols - 1];
            } else {
                const double uf = 0.5 * (u_[row + c - 1] + u_[row + c]);
                if (uf > 0.0)
                    f = uf * courant * h[row + c - 1];
                else if (uf < 0.0)
                    f = uf * courant * h[row + c];
            }
            flux_x_[r * xs + c] = f;
            if (f > 0.0)
                outgoing_[row + c - 1] += f;
            else if (f < 0.0)
                outgoing_[row + c] -= f;
        }
    }
    for (std::size_t r = 0; r <= rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double f = 0.0;
            if (r == 0) {
                const double vf = v_[c];
                if (vf < 0.0) f = vf * courant * h[c];
            } else if (r == rows) {
                const std::size_t i = (rows - 1) * cols + c;
                if (v_[i] > 0.0) f = v_[i] * courant * h[i];
            } else {
                const std::size_t top = (r - 1) * cols + c;
                const std::size_t bottom = r * cols + c;
                const double vf = 0.5 * (v_[top] + v_[bottom]);
                if (vf > 0.0)
                    f = vf * courant * h[top];
                else if (vf < 0.0)
                    f = vf * courant * h[bottom];
            }
            flux_y_[r * cols + c] = f;
            if (f > 0.0)
                outgoing_[(r - 1) * cols + c] += f;
            else if (f < 0.0)
                outgoing_[r * cols + c] -= f;
        }
    }

    // No cell may export more than it holds: scale its outgoing faces.
    for (std::size_t i = 0; i < n; ++i) outgoing_[i] = outgoing_[i] > h[i] ? h[i] / outgoing_[i] : 1.0;

    double boundary_out = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c <= cols; ++c) {
            double& f = flux_x_[r * xs + c];
            if (f > 0.0)
                f *= outgoing_[r * cols + c - 1];
            else if (f < 0.0)
                f *= outgoing_[r * cols + c];
            if (c == 0 || c == cols) boundary_out += std::abs(f);
        }
    }
    for (std::size_t r = 0; r <= rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double& f = flux_y_[r * cols + c];
            if (f > 0.0)
                f *= outgoing_[(r - 1) * cols + c];
            else if (f < 0.0)
                f *= outgoing_[r * cols + c];
            if (r == 0 || r == rows) boundary_out += std::abs(f);
        }
    }

    // Transport. Momentum flux = mass flux times donor velocity.
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            const double fl = flux_x_[r * xs + c];
            const double fr = flux_x_[r * xs + c + 1];
            const double ft = flux_y_[r * cols + c];
            const double fb = flux_y_[(r + 1) * cols + c];
            // Donor of each face: positive flux comes from the west/north cell.
            const std::size_t dl = fl > 0.0 ? i - 1 : i;
            const std::size_t dr = fr > 0.0 ? i : i + 1;
            const std::size_t dt_ = ft > 0.0 ? i - cols : i;
            const std::size_t db = fb > 0.0 ? i : i + cols;
            double mu_in = 0.0, mv_in = 0.0;
            if (fl != 0.0) { mu_in += fl * u_[dl]; mv_in += fl * v_[dl]; }
            if (fr != 0.0) { mu_in -= fr * u_[dr]; mv_in -= fr * v_[dr]; }
            if (ft != 0.0) { mu_in += ft * u_[dt_]; mv_in += ft * v_[dt_]; }
            if (fb != 0.0) { mu_in -= fb * u_[db]; mv_in -= fb * v_[db]; }
            const double hn = h[i] + (fl - fr) + (ft - fb);
            h[i] = hn < 0.0 ? 0.0 : hn;  // NaN passes through to the blowup check
            hu[i] += mu_in;
            hv[i] += mv_in;
        }
    }
    state.outflow_volume += boundary_out * geo_.cell_area();

    // Gravity driving and the pressure gradient on the transported thickness.
    // Face pressure is 0.5 g cos(alpha) h_a h_b, which is exact for uniform h and
    // vanishes against a dry neighbour.
    for (std::size_t i = 0; i < n; ++i) pressure_[i] = 0.5 * g * cos_a[i];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            if (h[i] < cfg.h_min) {
                hu[i] = 0.0;
                hv[i] = 0.0;
                continue;
            }
            const double self = pressure_[i] * h[i] * h[i];
            auto face = [&](std::size_t j) { return 0.5 * (pressure_[i] + pressure_[j]) * h[i] * h[j]; };
            const double pw = c == 0 ? self : face(i - 1);
            const double pe = c + 1 == cols ? self : face(i + 1);
            const double pn = r == 0 ? self : face(i - cols);
            const double ps = r + 1 == rows ? self : face(i + cols);
            hu[i] += dt * (g * h[i] * sin_x[i] - (pe - pw) / dx);
            hv[i] += dt * (g * h[i] * sin_y[i] - (ps - pn) / dx);
        }
    }

    // Basal resistance. Constant part (Coulomb + yield) first with the stopping
    // rule, then the quadratic Voellmy drag integrated exactly over dt.
    const double yield_k = p.cohesion_c / p.density_rho;
    for (std::size_t i = 0; i < n; ++i) {
        if (h[i] < cfg.h_min) continue;
        const double speed = std::hypot(hu[i], hv[i]) / h[i];
        if (speed == 0.0) continue;
        const double constant = p.voellmy_mu * g * cos_a[i] + yield_k / h[i];
        double reduced = speed - constant * dt;
        if (reduced <= 0.0) {
            hu[i] = 0.0;
            hv[i] = 0.0;
            continue;
        }
        reduced /= 1.0 + (g / (p.voellmy_xi * h[i])) * reduced * dt;
        const double scale = reduced / speed;
        hu[i] *= scale;
        hv[i] *= scale;
    }

    state.t += dt;

    bool finite = std::isfinite(state.outflow_volume);
    for (std::size_t i = 0; i < n && finite; ++i)
        finite = std::isfinite(h[i]) && std::isfinite(hu[i]) && std::isfinite(hv[i]);
    if (!finite) {
        double max_h = 0.0;
        double max_speed = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isfinite(h[i])) max_h = std::max(max_h, h[i]);
            if (h[i] >= cfg.h_min) {
                const double s = std::hypot(hu[i], hv[i]) / h[i];
                if (std::isfinite(s)) max_speed = std::max(max_speed, s);
            }
        }
        throw NumericalBlowup(fmt::format("non-finite flow state at t={} s (dt={} s, max h={} m, max speed={} m/s)",
                                          state.t, dt, max_h, max_speed),
                              state.t, dt, max_h, max_speed);
    }
}

FlowState step(const FlowState& state, const Terrain& terrain, const MaterialParams& p, const SolverConfig& cfg,
               double dt) {
    if (!state.h.geo().same_shape(terrain.geo())) throw GeometryError("flow state and terrain differ in geometry");
    FlowState next = state;
    StepWorkspace ws(terrain.geo());
    ws.advance(next, terrain, p, cfg, dt);
    return next;
}

SimResult run(const RasterField& dem, const PileField& pile, const MaterialParams& p, const SolverConfig& cfg) {
    return run(Terrain(dem), pile, p, cfg);
}

SimResult run(const Terrain& terrain, const PileField& pile, const MaterialParams& p, const SolverConfig& cfg) {
    p.validate();
    cfg.validate();
    const auto& geo = terrain.geo();
    if (!geo.same_shape(pile.thickness.geo())) throw GeometryError("DEM and source pile differ in geometry");

    FlowState state = FlowState::at_rest(pile.thickness);
    StepWorkspace ws(geo);
    SimResult result;
    result.params = p;
    result.volume = pile.thickness.sum() * geo.cell_area();

    // The velocity criterion arms once some cell has exceeded v_stop; a state
    // with no motion at all ends the run immediately.
    bool armed = false;
    for (;;) {
        const double dt = adapt_dt(state, cfg, geo, p.gravity_g);
        ws.advance(state, terrain, p, cfg, dt);
        ++result.steps;
        const double speed = state.max_speed(cfg.h_min);
        result.max_speed_seen = std::max(result.max_speed_seen, speed);
        if (speed > cfg.v_stop) armed = true;
        if ((armed && speed < cfg.v_stop) || speed == 0.0) {
            result.stop_reason = StopReason::velocity;
            break;
        }
        if (state.t >= cfg.t_max) {
            result.stop_reason = StopReason::t_max;
            break;
        }
    }

    result.stop_time = state.t;
    result.outflow_volume = state.outflow_volume;
    result.footprint = make_footprint(state.h, cfg.footprint_threshold);
    result.displaced_px = count_displaced(result.footprint, pile.support_mask);
    result.final_h = std::move(state.h);
    return result;
}

}  // namespace runout
