#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace runout {

using UnitPoint = std::array<double, 3>;

enum class Scale { linear, log10 };

/// One input dimension: maps u in [0,1] to a physical value. `inverse_cdf`, when
/// set, replaces the built-in uniform / log-uniform map.
struct Marginal {
    double lo = 0.0;
    double hi = 1.0;
    Scale scale = Scale::linear;
    std::function<double(double)> inverse_cdf;

    double map(double u) const;
};

struct ParamRanges {
    Marginal volume{1.0e4, 1.0e7, Scale::log10, {}};   // m^3, log-uniform
    Marginal density{917.0, 2650.0, Scale::linear, {}};  // kg m^-3
    Marginal cohesion{5.0e3, 5.0e4, Scale::linear, {}};  // Pa

    void validate() const;
};

struct ParameterSample {
    double volume = 0.0;    // m^3
    double density = 0.0;   // kg m^-3
    double cohesion = 0.0;  // Pa
    UnitPoint unit_point{};

    bool operator==(const ParameterSample&) const = default;
};

ParameterSample map_unit_point(const UnitPoint& u, const ParamRanges& ranges);

/// Latin hypercube: per dimension one point in each stratum [i/n, (i+1)/n),
/// with strata permuted and jittered from a seeded mt19937_64.
std::vector<ParameterSample> lhs_sample(std::size_t n, const ParamRanges& ranges, std::uint64_t seed);

/// First n points of the unscrambled 3-D Sobol sequence, zero point skipped,
/// generated in Gray-code order with Joe-Kuo direction numbers.
std::vector<UnitPoint> sobol_points(std::size_t n);
std::vector<ParameterSample> sobol_sample(std::size_t n, const ParamRanges& ranges);

nlohmann::json to_json(const ParameterSample& s);
ParameterSample sample_from_json(const nlohmann::json& j);

void write_samples_jsonl(std::ostream& out, const std::vector<ParameterSample>& samples);
std::vector<ParameterSample> read_samples_jsonl(std::istream& in);

/// Parses "LO:HI" into a pair of doubles.
std::pair<double, double> parse_range(const std::string& text);

}  // namespace runout
