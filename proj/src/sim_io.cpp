#include "runout/sim_io.hpp"

#include "runout/error.hpp"

#include <fmt/format.h>

#include <fstream>

namespace runout {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string fnv1a_hex(std::string_view text) { return fmt::format("{:016x}", fnv1a64(text)); }

std::string canonical_string(const SolverConfig& cfg) {
    return fmt::format("dt_init={:.17g};dt_min={:.17g};cfl={:.17g};h_min={:.17g};v_stop={:.17g};t_max={:.17g};"
                       "footprint={:.17g}",
                       cfg.dt_init, cfg.dt_min, cfg.cfl_number, cfg.h_min, cfg.v_stop, cfg.t_max,
                       cfg.footprint_threshold);
}

nlohmann::json to_json(const SolverConfig& cfg) {
    return {{"dt_init_s", cfg.dt_init},         {"dt_min_s", cfg.dt_min}, {"cfl_number", cfg.cfl_number},
            {"h_min_m", cfg.h_min},             {"v_stop_m_s", cfg.v_stop}, {"t_max_s", cfg.t_max},
            {"footprint_threshold_m", cfg.footprint_threshold}};
}

SolverConfig solver_config_from_json(const nlohmann::json& j) {
    try {
        SolverConfig cfg;
        cfg.dt_init = j.at("dt_init_s").get<double>();
        cfg.dt_min = j.at("dt_min_s").get<double>();
        cfg.cfl_number = j.at("cfl_number").get<double>();
        cfg.h_min = j.at("h_min_m").get<double>();
        cfg.v_stop = j.at("v_stop_m_s").get<double>();
        cfg.t_max = j.at("t_max_s").get<double>();
        cfg.footprint_threshold = j.at("footprint_threshold_m").get<double>();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("malformed solver config: {}", e.what()));
    }
}

nlohmann::json sim_manifest(const SimResult& result, const RunInfo& info) {
    return {{"run_id", info.run_id},
            {"dem_id", info.dem_id},
            {"volume_m3", result.volume},
            {"density_kg_m3", result.params.density_rho},
            {"cohesion_pa", result.params.cohesion_c},
            {"mu", result.params.voellmy_mu},
            {"xi", result.params.voellmy_xi},
            {"stop_time_s", result.stop_time},
            {"stop_reason", to_string(result.stop_reason)},
            {"displaced_px", result.displaced_px},
            {"outflow_m3", result.outflow_volume},
            {"steps", result.steps},
            {"solver_config", to_json(info.solver)}};
}

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j, int indent) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
        out << j.dump(indent) << '\n';
        if (!out) throw Error(fmt::format("short write on '{}'", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
}

void write_sim_result(const std::filesystem::path& dir, const SimResult& result, const RunInfo& info,
                      const nlohmann::json& extra) {
    std::filesystem::create_directories(dir);
    write_raster(dir / "h.rfg", result.final_h);
    write_mask(dir / "footprint.rfg", result.footprint);
    auto manifest = sim_manifest(result, info);
    for (const auto& [k, v] : extra.items()) manifest[k] = v;
    write_json_atomic(dir / "manifest.json", manifest);
}

}  // namespace runout
