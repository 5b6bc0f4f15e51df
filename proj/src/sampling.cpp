#include "runout/sampling.hpp"

#include "runout/error.hpp"
#include "runout/random.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace runout {

namespace {

void validate_marginal(const Marginal& m, const char* name) {
    if (!(m.lo < m.hi) || !std::isfinite(m.lo) || !std::isfinite(m.hi))
        throw ParameterError(fmt::format("{} range needs low < high, got [{}, {}]", name, m.lo, m.hi));
    if (m.scale == Scale::log10 && !(m.lo > 0.0))
        throw ParameterError(fmt::format("{} log range needs a positive low bound", name));
}

constexpr unsigned kBits = 32;

struct DirectionSpec {
    unsigned degree;
    unsigned coeffs;  // interior polynomial coefficients a_1..a_{s-1}
    std::vector<std::uint32_t> m_init;
};

std::array<std::array<std::uint32_t, kBits>, 3> direction_numbers() {
    // Joe-Kuo (new-joe-kuo-6.21201) entries for dimensions 2 and 3; dimension 1 is van der Corput.
    const std::array<DirectionSpec, 2> specs{{{1, 0, {1}}, {2, 1, {1, 3}}}};
    std::array<std::array<std::uint32_t, kBits>, 3> v{};
    for (unsigned k = 0; k < kBits; ++k) v[0][k] = 1u << (kBits - 1 - k);
    for (std::size_t d = 0; d < specs.size(); ++d) {
        const auto& spec = specs[d];
        std::vector<std::uint32_t> m(kBits);
        for (unsigned k = 0; k < spec.degree; ++k) m[k] = spec.m_init[k];
        for (unsigned k = spec.degree; k < kBits; ++k) {
            std::uint32_t value = m[k - spec.degree] ^ (m[k - spec.degree] << spec.degree);
            for (unsigned j = 1; j < spec.degree; ++j) {
                if ((spec.coeffs >> (spec.degree - 1 - j)) & 1u) value ^= m[k - j] << j;
            }
            m[k] = value;
        }
        for (unsigned k = 0; k < kBits; ++k) v[d + 1][k] = m[k] << (kBits - 1 - k);
    }
    return v;
}

}  // namespace

double Marginal::map(double u) const {
    if (inverse_cdf) return inverse_cdf(u);
    if (scale == Scale::log10) {
        const double a = std::log10(lo);
        const double b = std::log10(hi);
        return std::pow(10.0, a + (b - a) * u);
    }
    return lo + (hi - lo) * u;
}

void ParamRanges::validate() const {
    validate_marginal(volume, "volume");
    validate_marginal(density, "density");
    validate_marginal(cohesion, "cohesion");
}

ParameterSample map_unit_point(const UnitPoint& u, const ParamRanges& ranges) {
    return {ranges.volume.map(u[0]), ranges.density.map(u[1]), ranges.cohesion.map(u[2]), u};
}

std::vector<ParameterSample> lhs_sample(std::size_t n, const ParamRanges& ranges, std::uint64_t seed) {
    if (n == 0) throw ParameterError("LHS needs at least one sample");
    ranges.validate();
    std::mt19937_64 rng(seed);
    std::vector<UnitPoint> points(n);
    std::vector<std::size_t> strata(n);
    for (std::size_t d = 0; d < 3; ++d) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        shuffle(strata, rng);
        for (std::size_t i = 0; i < n; ++i)
            points[i][d] = (static_cast<double>(strata[i]) + open_unit(rng)) / static_cast<double>(n);
    }
    std::vector<ParameterSample> out;
    out.reserve(n);
    for (const auto& p : points) out.push_back(map_unit_point(p, ranges));
    return out;
}

std::vector<UnitPoint> sobol_points(std::size_t n) {
    static const auto v = direction_numbers();
    if (n >= (std::size_t{1} << kBits)) throw ParameterError("Sobol sequence exhausted");
    std::vector<UnitPoint> out;
    out.reserve(n);
    std::array<std::uint32_t, 3> x{0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        // Gray-code update: flip the direction number at the lowest zero bit of i.
        unsigned c = 0;
        std::size_t k = i;
        while (k & 1u) {
            k >>= 1;
            ++c;
        }
        for (std::size_t d = 0; d < 3; ++d) x[d] ^= v[d][c];
        out.push_back({x[0] * 0x1.0p-32, x[1] * 0x1.0p-32, x[2] * 0x1.0p-32});
    }
    return out;
}

std::vector<ParameterSample> sobol_sample(std::size_t n, const ParamRanges& ranges) {
    ranges.validate();
    std::vector<ParameterSample> out;
    out.reserve(n);
    for (const auto& p : sobol_points(n)) out.push_back(map_unit_point(p, ranges));
    return out;
}

nlohmann::json to_json(const ParameterSample& s) {
    return {{"volume_m3", s.volume},
            {"density_kg_m3", s.density},
            {"cohesion_pa", s.cohesion},
            {"unit_point", s.unit_point}};
}

ParameterSample sample_from_json(const nlohmann::json& j) {
    try {
        ParameterSample s;
        s.volume = j.at("volume_m3").get<double>();
        s.density = j.at("density_kg_m3").get<double>();
        s.cohesion = j.at("cohesion_pa").get<double>();
        s.unit_point = j.at("unit_point").get<UnitPoint>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("malformed parameter sample: {}", e.what()));
    }
}

void write_samples_jsonl(std::ostream& out, const std::vector<ParameterSample>& samples) {
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

std::vector<ParameterSample> read_samples_jsonl(std::istream& in) {
    std::vector<ParameterSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(sample_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(fmt::format("bad JSON line: {}", e.what()));
        }
    }
    return out;
}

std::pair<double, double> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParameterError(fmt::format("range '{}' is not LO:HI", text));
    try {
        std::size_t used_lo = 0, used_hi = 0;
        const auto lo_text = text.substr(0, colon);
        const auto hi_text = text.substr(colon + 1);
        const double lo = std::stod(lo_text, &used_lo);
        const double hi = std::stod(hi_text, &used_hi);
        if (used_lo != lo_text.size() || used_hi != hi_text.size()) throw std::invalid_argument("trailing");
        if (!(lo < hi)) throw ParameterError(fmt::format("range '{}' needs LO < HI", text));
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ParameterError(fmt::format("range '{}' is not LO:HI", text));
    }
}

}  // namespace runout
