#include "runout/raster.hpp"

#include "runout/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace runout {

namespace {

constexpr std::string_view kMagic = "RFG1\n";

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(fmt::format("cannot open raster '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xFF000000u) >> 24) | ((v & 0x00FF0000u) >> 8) | ((v & 0x0000FF00u) << 8) |
            ((v & 0x000000FFu) << 24);
    }
    return v;
}

void check_values(const RasterField& field) {
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (std::isnan(field[i]) && !std::isnan(field.geo().nodata))
            throw FormatError(fmt::format("NaN value at cell {}", i));
    }
}

}  // namespace

void GridGeo::validate() const {
    if (rows < 1 || cols < 1)
        throw GeometryError(fmt::format("grid must have at least one row and column, got {}x{}", rows, cols));
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw GeometryError(fmt::format("cell_size must be positive, got {}", cell_size));
}

bool GridGeo::same_shape(const GridGeo& other) const noexcept {
    return rows == other.rows && cols == other.cols && cell_size == other.cell_size;
}

RasterField::RasterField(GridGeo geo, double fill) : geo_(geo), values_(geo.size(), fill) {
    geo_.validate();
}

RasterField::RasterField(GridGeo geo, std::vector<double> values) : geo_(geo), values_(std::move(values)) {
    geo_.validate();
    if (values_.size() != geo_.size())
        throw GeometryError(fmt::format("raster holds {} values, geometry needs {}", values_.size(), geo_.size()));
}

double RasterField::sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!is_nodata(i)) s += values_[i];
    return s;
}

double RasterField::max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!is_nodata(i)) m = std::max(m, values_[i]);
    return m;
}

Mask::Mask(GridGeo geo, bool fill) : geo_(geo), cells_(geo.size(), fill ? 1 : 0) { geo_.validate(); }

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

RasterField Mask::to_field() const {
    std::vector<double> v(cells_.begin(), cells_.end());
    return RasterField(geo_, std::move(v));
}

Mask Mask::threshold(const RasterField& field, double threshold) {
    Mask m(field.geo());
    for (std::size_t i = 0; i < field.size(); ++i)
        m.cells_[i] = (!field.is_nodata(i) && field[i] > threshold) ? 1 : 0;
    return m;
}

RasterFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".asc" ? RasterFormat::esri_ascii : RasterFormat::rfg;
}

std::string encode_rfg(const RasterField& field) {
    const auto& g = field.geo();
    nlohmann::ordered_json header;
    header["rows"] = g.rows;
    header["cols"] = g.cols;
    header["cell_size"] = g.cell_size;
    header["origin_x"] = g.origin_x;
    header["origin_y"] = g.origin_y;
    header["nodata"] = g.nodata;

    std::string out(kMagic);
    out += header.dump();
    out += '\n';
    const std::size_t offset = out.size();
    out.resize(offset + 4 * field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const auto word = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(field[i])));
        std::memcpy(out.data() + offset + 4 * i, &word, 4);
    }
    return out;
}

RasterField decode_rfg(const std::string& bytes) {
    if (bytes.compare(0, kMagic.size(), kMagic) != 0) throw FormatError("missing RFG1 magic line");
    const auto eol = bytes.find('\n', kMagic.size());
    if (eol == std::string::npos) throw FormatError("unterminated rfg header line");

    GridGeo g;
    try {
        const auto header = nlohmann::json::parse(bytes.substr(kMagic.size(), eol - kMagic.size()));
        const auto rows = header.at("rows").get<long long>();
        const auto cols = header.at("cols").get<long long>();
        if (rows < 1 || cols < 1) throw FormatError("rfg header rows/cols must be positive");
        g.rows = static_cast<std::size_t>(rows);
        g.cols = static_cast<std::size_t>(cols);
        g.cell_size = header.at("cell_size").get<double>();
        g.origin_x = header.at("origin_x").get<double>();
        g.origin_y = header.at("origin_y").get<double>();
        g.nodata = header.at("nodata").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("malformed rfg header: {}", e.what()));
    }
    if (!(g.cell_size > 0.0)) throw FormatError("rfg header cell_size must be positive");

    const std::size_t offset = eol + 1;
    const std::size_t expected = 4 * g.size();
    if (bytes.size() - offset < expected)
        throw TruncationError(fmt::format("rfg payload has {} bytes, header needs {}", bytes.size() - offset, expected));
    if (bytes.size() - offset > expected)
        throw FormatError(fmt::format("rfg payload has {} trailing bytes", bytes.size() - offset - expected));

    std::vector<double> values(g.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t word;
        std::memcpy(&word, bytes.data() + offset + 4 * i, 4);
        values[i] = std::bit_cast<float>(to_little_endian(word));
    }
    RasterField field(g, std::move(values));
    check_values(field);
    return field;
}

RasterField decode_esri_ascii(const std::string& text) {
    std::istringstream in(text);
    std::map<std::string, double> header;
    std::string key;
    // Header keys are case-insensitive and precede the first numeric token.
    while (in >> std::ws && in.peek() != EOF && std::isalpha(in.peek())) {
        in >> key;
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
        double v;
        if (!(in >> v)) throw FormatError(fmt::format("esri header key '{}' has no numeric value", key));
        header[key] = v;
    }
    auto need = [&](const char* k) {
        auto it = header.find(k);
        if (it == header.end()) throw FormatError(fmt::format("esri header missing '{}'", k));
        return it->second;
    };
    const double ncols = need("ncols");
    const double nrows = need("nrows");
    if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows))
        throw FormatError("esri header ncols/nrows must be positive integers");

    GridGeo g;
    g.cols = static_cast<std::size_t>(ncols);
    g.rows = static_cast<std::size_t>(nrows);
    g.cell_size = need("cellsize");
    if (!(g.cell_size > 0.0)) throw FormatError("esri cellsize must be positive");
    double xll, yll;
    if (header.count("xllcorner")) {
        xll = header["xllcorner"];
    } else {
        xll = need("xllcenter") - 0.5 * g.cell_size;
    }
    if (header.count("yllcorner")) {
        yll = header["yllcorner"];
    } else {
        yll = need("yllcenter") - 0.5 * g.cell_size;
    }
    g.origin_x = xll;
    g.origin_y = yll + static_cast<double>(g.rows) * g.cell_size;
    if (header.count("nodata_value")) g.nodata = header["nodata_value"];

    std::vector<double> values;
    values.reserve(g.size());
    double v;
    while (values.size() < g.size() && in >> v) values.push_back(v);
    if (values.size() < g.size()) {
        if (!in.eof()) throw FormatError(fmt::format("non-numeric esri value after {} cells", values.size()));
        throw TruncationError(fmt::format("esri grid has {} values, header needs {}", values.size(), g.size()));
    }
    RasterField field(g, std::move(values));
    check_values(field);
    return field;
}

RasterField read_raster(const std::filesystem::path& path, RasterFormat format) {
    const auto bytes = slurp(path);
    return format == RasterFormat::rfg ? decode_rfg(bytes) : decode_esri_ascii(bytes);
}

RasterField read_raster(const std::filesystem::path& path) { return read_raster(path, format_from_path(path)); }

void write_raster(const std::filesystem::path& path, const RasterField& field) {
    const auto bytes = encode_rfg(field);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write raster '{}'", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(fmt::format("short write on '{}'", path.string()));
}

void write_mask(const std::filesystem::path& path, const Mask& mask) { write_raster(path, mask.to_field()); }

Mask read_mask(const std::filesystem::path& path) {
    const auto field = read_raster(path);
    Mask m(field.geo());
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (field[i] != 0.0 && field[i] != 1.0)
            throw FormatError(fmt::format("mask '{}' holds non-binary value {}", path.string(), field[i]));
        m.set(i, field[i] == 1.0);
    }
    return m;
}

}  // namespace runout
