#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace wsseg {

/// Height x width of a dense 2-D grid. Both extents are at least 1.
struct GridShape {
    int height = 1;
    int width = 1;

    /// Throws InvalidConfig when either extent is < 1.
    static GridShape make(int height, int width);

    std::size_t size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    bool contains(int row, int col) const { return row >= 0 && col >= 0 && row < height && col < width; }
    bool operator==(const GridShape&) const = default;
};

struct Pixel {
    int row = 0;
    int col = 0;
    bool operator==(const Pixel&) const = default;
};

/// Row-major dense grid, origin at the top-left.
template <typename T>
class Grid {
public:
    Grid() = default;
    explicit Grid(GridShape shape, T fill = T{}) : shape_(GridShape::make(shape.height, shape.width)), values_(shape_.size(), fill) {}
    Grid(GridShape shape, std::vector<T> values);

    const GridShape& shape() const { return shape_; }
    int height() const { return shape_.height; }
    int width() const { return shape_.width; }
    std::size_t size() const { return values_.size(); }

    T& operator()(int row, int col) { return values_[index(row, col)]; }
    const T& operator()(int row, int col) const { return values_[index(row, col)]; }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(col);
    }

    GridShape shape_{};
    std::vector<T> values_ = std::vector<T>(1);
};

using RealGrid = Grid<double>;

namespace detail {
void check_size(const GridShape& shape, std::size_t n);
void check_unit_interval(std::span<const double> values, const char* what);
}  // namespace detail

template <typename T>
Grid<T>::Grid(GridShape shape, std::vector<T> values) : shape_(GridShape::make(shape.height, shape.width)), values_(std::move(values)) {
    detail::check_size(shape_, values_.size());
}

namespace detail {

/// Real grid whose values are finite and lie in [0,1]. Tag separates Image from SoftMask.
template <typename Tag>
class UnitIntervalGrid {
public:
    UnitIntervalGrid() = default;
    explicit UnitIntervalGrid(RealGrid grid) : grid_(std::move(grid)) { check_unit_interval(grid_.values(), Tag::name); }
    UnitIntervalGrid(GridShape shape, double fill) : UnitIntervalGrid(RealGrid(shape, fill)) {}
    UnitIntervalGrid(GridShape shape, std::vector<double> values) : UnitIntervalGrid(RealGrid(shape, std::move(values))) {}

    const GridShape& shape() const { return grid_.shape(); }
    int height() const { return grid_.height(); }
    int width() const { return grid_.width(); }
    std::size_t size() const { return grid_.size(); }
    double operator()(int row, int col) const { return grid_(row, col); }
    double operator[](std::size_t i) const { return grid_[i]; }
    std::span<const double> values() const { return grid_.values(); }
    const RealGrid& grid() const { return grid_; }

    bool operator==(const UnitIntervalGrid&) const = default;

private:
    RealGrid grid_;
};

struct ImageTag {
    static constexpr const char* name = "Image";
};
struct SoftMaskTag {
    static constexpr const char* name = "SoftMask";
};

}  // namespace detail

/// Grayscale intensities in [0,1].
using Image = detail::UnitIntervalGrid<detail::ImageTag>;
/// Per-pixel foreground probabilities in [0,1].
using SoftMask = detail::UnitIntervalGrid<detail::SoftMaskTag>;

/// Binary grid; every value is exactly 0 or 1.
class Mask {
public:
    Mask() = default;
    explicit Mask(Grid<std::uint8_t> grid);
    explicit Mask(GridShape shape, bool fill = false);

    static Mask from_pixels(GridShape shape, std::initializer_list<Pixel> pixels);
    static Mask from_pixels(GridShape shape, std::span<const Pixel> pixels);

    const GridShape& shape() const { return grid_.shape(); }
    int height() const { return grid_.height(); }
    int width() const { return grid_.width(); }
    std::size_t size() const { return grid_.size(); }
    bool operator()(int row, int col) const { return grid_(row, col) != 0; }
    bool operator[](std::size_t i) const { return grid_[i] != 0; }
    std::span<const std::uint8_t> values() const { return grid_.values(); }
    const Grid<std::uint8_t>& grid() const { return grid_; }

    /// Copy with one pixel changed.
    Mask with(Pixel p, bool value) const;

    bool operator==(const Mask&) const = default;

private:
    Grid<std::uint8_t> grid_;
};

/// Fraction of pixels in the ROI: (1 / (H*W)) * sum of mask values.
double summary_stat(const Mask& mask);
double summary_stat(const SoftMask& mask);

std::size_t foreground_count(const Mask& mask);

/// Foreground pixel nearest the mean foreground coordinate; ties go to the smallest row, then column.
/// Throws EmptyMask when the mask has no foreground.
Pixel centroid_pixel(const Mask& mask);

/// True when every foreground pixel of `sub` is foreground in `super`. Shapes must match.
bool is_subset(const Mask& sub, const Mask& super);

void require_same_shape(const GridShape& a, const GridShape& b, const char* context);

}  // namespace wsseg
