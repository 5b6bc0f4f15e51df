#include "runout/ensemble.hpp"

#include "runout/error.hpp"
#include "runout/parallel.hpp"
#include "runout/sim_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace runout {

std::string to_string(Sampler s) { return s == Sampler::sobol ? "sobol" : "lhs"; }

Sampler sampler_from_string(const std::string& text) {
    if (text == "sobol") return Sampler::sobol;
    if (text == "lhs") return Sampler::lhs;
    throw ParameterError(fmt::format("unknown sampler '{}' (expected sobol or lhs)", text));
}

void EnsembleConfig::validate() const {
    if (n_members < 2) throw ParameterError(fmt::format("ensemble needs at least 2 members, got {}", n_members));
    if (worker_count < 1) throw ParameterError("worker_count must be at least 1");
    if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
        throw ParameterError("max failure fraction must lie in [0, 1]");
    ranges.validate();
    solver.validate();
}

MemberOutcome MemberOutcome::from_fields(const ParameterSample& params, const Mask& footprint, const RasterField& h) {
    if (!footprint.geo().same_shape(h.geo())) throw GeometryError("member footprint and thickness differ in geometry");
    MemberOutcome m;
    m.params = params;
    m.ok = true;
    for (std::size_t i = 0; i < footprint.size(); ++i) {
        if (!footprint[i]) continue;
        m.cells.push_back(static_cast<std::uint32_t>(i));
        m.thickness.push_back(h[i]);
    }
    return m;
}

MemberOutcome MemberOutcome::from_result(const ParameterSample& params, const SimResult& result) {
    auto m = from_fields(params, result.footprint, result.final_h);
    m.stop_reason = result.stop_reason;
    m.stop_time = result.stop_time;
    m.displaced_px = result.displaced_px;
    return m;
}

MemberOutcome MemberOutcome::failure(const ParameterSample& params, std::string error) {
    MemberOutcome m;
    m.params = params;
    m.error = std::move(error);
    return m;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw ParameterError("quantile of an empty list");
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError(fmt::format("quantile level {} outside [0, 1]", q));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
    return sorted[idx];
}

namespace {

// Order statistic over `m` values where all but `positives` are zero.
double sparse_quantile(const std::vector<double>& positives, std::size_t m, double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(m - 1)));
    const std::size_t zeros = m - positives.size();
    return idx < zeros ? 0.0 : positives[idx - zeros];
}

}  // namespace

EnsembleProduct reduce_ensemble(const GridGeo& geo, std::span<const MemberOutcome> members,
                                double max_failure_fraction) {
    EnsembleProduct product;
    product.p_reach = RasterField(geo);
    product.q50 = RasterField(geo);
    product.q90 = RasterField(geo);
    product.n_members = members.size();
    std::vector<std::vector<double>> per_cell(geo.size());
    std::size_t ok = 0;
    for (const auto& m : members) {
        product.member_manifest.push_back(m.params);
        if (!m.ok) {
            ++product.n_failed;
            continue;
        }
        ++ok;
        for (std::size_t k = 0; k < m.cells.size(); ++k) {
            if (m.cells[k] >= geo.size()) throw GeometryError("member cell index outside the grid");
            per_cell[m.cells[k]].push_back(m.thickness[k]);
        }
    }
    if (members.empty() ||
        static_cast<double>(product.n_failed) > max_failure_fraction * static_cast<double>(members.size()))
        throw EnsembleError(fmt::format("{} of {} ensemble members failed", product.n_failed, members.size()));

    for (std::size_t i = 0; i < geo.size(); ++i) {
        auto& values = per_cell[i];
        if (values.empty()) continue;
        std::sort(values.begin(), values.end());
        product.p_reach[i] = static_cast<double>(values.size()) / static_cast<double>(ok);
        product.q50[i] = sparse_quantile(values, ok, 0.5);
        product.q90[i] = sparse_quantile(values, ok, 0.9);
    }
    return product;
}

EnsembleProduct run_ensemble(const RasterField& dem, const EnsembleConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const Terrain terrain(dem);
    build_pile(terrain.geo(), cfg.source);  // geometry check before spawning work

    const auto samples = cfg.sampler == Sampler::sobol ? sobol_sample(cfg.n_members, cfg.ranges)
                                                       : lhs_sample(cfg.n_members, cfg.ranges, cfg.seed);
    std::vector<MemberOutcome> members(samples.size());
    parallel_for(samples.size(), cfg.worker_count, [&](std::size_t i) {
        const auto& s = samples[i];
        try {
            SourceSpec spec = cfg.source;
            spec.volume = s.volume;
            const auto pile = build_pile(terrain.geo(), spec);
            MaterialParams material = cfg.material;
            material.density_rho = s.density;
            material.cohesion_c = s.cohesion;
            members[i] = MemberOutcome::from_result(s, run(terrain, pile, material, cfg.solver));
        } catch (const Error& e) {
            members[i] = MemberOutcome::failure(s, e.what());
        }
    });

    auto product = reduce_ensemble(terrain.geo(), members, cfg.max_failure_fraction);
    for (auto& m : members) {
        m.cells.clear();
        m.cells.shrink_to_fit();
        m.thickness.clear();
        m.thickness.shrink_to_fit();
    }
    product.members = std::move(members);
    product.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return product;
}

void write_ensemble(const std::filesystem::path& dir, const EnsembleProduct& product, const EnsembleConfig& cfg) {
    std::filesystem::create_directories(dir);
    write_raster(dir / "p_reach.rfg", product.p_reach);
    write_raster(dir / "q50.rfg", product.q50);
    write_raster(dir / "q90.rfg", product.q90);

    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = 0; i < product.members.size(); ++i) {
        const auto& m = product.members[i];
        nlohmann::json j{{"index", i}, {"params", to_json(m.params)}, {"status", m.ok ? "ok" : "failed"}};
        if (m.ok) {
            j["stop_reason"] = to_string(m.stop_reason);
            j["stop_time_s"] = m.stop_time;
            j["displaced_px"] = m.displaced_px;
        } else {
            j["error"] = m.error;
        }
        members.push_back(std::move(j));
    }
    auto marginal = [](const Marginal& m) {
        return nlohmann::json{{"lo", m.lo}, {"hi", m.hi}, {"scale", m.scale == Scale::log10 ? "log10" : "linear"}};
    };
    const nlohmann::json doc{
        {"config",
         {{"n_members", cfg.n_members},
          {"sampler", to_string(cfg.sampler)},
          {"seed", cfg.seed},
          {"ranges",
           {{"volume_m3", marginal(cfg.ranges.volume)},
            {"density_kg_m3", marginal(cfg.ranges.density)},
            {"cohesion_pa", marginal(cfg.ranges.cohesion)}}},
          {"mu", cfg.material.voellmy_mu},
          {"xi", cfg.material.voellmy_xi},
          {"solver_config", to_json(cfg.solver)}}},
        {"n_members", product.n_members},
        {"n_failed", product.n_failed},
        {"wall_time_s", product.wall_time_s},
        {"members", members}};
    write_json_atomic(dir / "ensemble.json", doc);
}

}  // namespace runout
