#pragma once

#include "runout/sampling.hpp"
#include "runout/solver.hpp"
#include "runout/source.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace runout {

enum class Sampler { sobol, lhs };
std::string to_string(Sampler s);
Sampler sampler_from_string(const std::string& text);

struct EnsembleConfig {
    std::size_t n_members = 1024;
    ParamRanges ranges;
    Sampler sampler = Sampler::sobol;
    std::uint64_t seed = 0;  // LHS only
    SolverConfig solver;
    SourceSpec source;        // volume overwritten per member
    MaterialParams material;  // density and cohesion overwritten per member
    std::size_t worker_count = 1;
    double max_failure_fraction = 0.1;

    void validate() const;
};

/// What the reduction needs from one member: its inundated cells and their
/// final thickness. Members that failed carry only the error.
struct MemberOutcome {
    ParameterSample params;
    bool ok = false;
    std::string error;
    StopReason stop_reason = StopReason::velocity;
    double stop_time = 0.0;
    std::size_t displaced_px = 0;
    std::vector<std::uint32_t> cells;  // footprint cell indices, ascending
    std::vector<double> thickness;     // final h on those cells

    static MemberOutcome from_fields(const ParameterSample& params, const Mask& footprint, const RasterField& h);
    static MemberOutcome from_result(const ParameterSample& params, const SimResult& result);
    static MemberOutcome failure(const ParameterSample& params, std::string error);
};

struct EnsembleProduct {
    RasterField p_reach;
    RasterField q50;
    RasterField q90;
    std::size_t n_members = 0;
    std::size_t n_failed = 0;
    std::vector<ParameterSample> member_manifest;
    std::vector<MemberOutcome> members;  // inundation data cleared after reduction
    double wall_time_s = 0.0;
};

/// Lower order statistic: sorted[floor(q * (m - 1))].
double quantile(std::span<const double> values, double q);

/// Pixelwise reach fraction and unconditional thickness quantiles (members that
/// do not inundate a cell count as 0 there) over the successful members.
EnsembleProduct reduce_ensemble(const GridGeo& geo, std::span<const MemberOutcome> members,
                                double max_failure_fraction = 0.1);

/// Samples members, simulates them on a worker pool and reduces.
EnsembleProduct run_ensemble(const RasterField& dem, const EnsembleConfig& cfg);

/// p_reach.rfg, q50.rfg, q90.rfg and ensemble.json in `dir`.
void write_ensemble(const std::filesystem::path& dir, const EnsembleProduct& product, const EnsembleConfig& cfg);

}  // namespace runout
