#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace runout {

/// Grid geometry shared by every raster. Origin is the north-west corner;
/// row 0 is the northernmost row and columns increase eastwards.
struct GridGeo {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double cell_size = 30.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double nodata = -9999.0;

    std::size_t size() const noexcept { return rows * cols; }
    std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * cols + c; }
    double cell_area() const noexcept { return cell_size * cell_size; }

    /// Throws GeometryError unless rows, cols >= 1 and cell_size > 0.
    void validate() const;

    /// Same dimensions and cell size (origins may differ).
    bool same_shape(const GridGeo& other) const noexcept;

    bool operator==(const GridGeo&) const = default;
};

/// Row-major 2-D field of doubles. Files store binary32; values are widened on read.
class RasterField {
public:
    RasterField() = default;
    explicit RasterField(GridGeo geo, double fill = 0.0);
    RasterField(GridGeo geo, std::vector<double> values);

    const GridGeo& geo() const noexcept { return geo_; }
    std::size_t rows() const noexcept { return geo_.rows; }
    std::size_t cols() const noexcept { return geo_.cols; }
    std::size_t size() const noexcept { return values_.size(); }

    double& at(std::size_t r, std::size_t c) { return values_[geo_.index(r, c)]; }
    double at(std::size_t r, std::size_t c) const { return values_[geo_.index(r, c)]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double sum() const;
    double max() const;
    bool is_nodata(std::size_t i) const { return values_[i] == geo_.nodata; }

private:
    GridGeo geo_{};
    std::vector<double> values_;
};

/// Boolean raster (footprints, source supports). Serialized as 0/1 values.
class Mask {
public:
    Mask() = default;
    explicit Mask(GridGeo geo, bool fill = false);

    const GridGeo& geo() const noexcept { return geo_; }
    std::size_t size() const noexcept { return cells_.size(); }

    bool at(std::size_t r, std::size_t c) const { return cells_[geo_.index(r, c)] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { cells_[geo_.index(r, c)] = v ? 1 : 0; }
    bool operator[](std::size_t i) const { return cells_[i] != 0; }
    void set(std::size_t i, bool v) { cells_[i] = v ? 1 : 0; }

    std::size_t count() const;
    RasterField to_field() const;

    /// Cells strictly above `threshold`.
    static Mask threshold(const RasterField& field, double threshold);

    bool operator==(const Mask&) const = default;

private:
    GridGeo geo_{};
    std::vector<std::uint8_t> cells_;
};

enum class RasterFormat { rfg, esri_ascii };

/// Picks the format from the extension: ".asc" is ESRI ASCII, everything else rfg.
RasterFormat format_from_path(const std::filesystem::path& path);

RasterField read_raster(const std::filesystem::path& path, RasterFormat format);
RasterField read_raster(const std::filesystem::path& path);

/// Writes the rfg container. Values are rounded to binary32.
void write_raster(const std::filesystem::path& path, const RasterField& field);
void write_mask(const std::filesystem::path& path, const Mask& mask);
Mask read_mask(const std::filesystem::path& path);

// In-memory codecs backing the file functions.
std::string encode_rfg(const RasterField& field);
RasterField decode_rfg(const std::string& bytes);
RasterField decode_esri_ascii(const std::string& text);

}  // namespace runout
