#include "wsseg/grid.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "wsseg/errors.hpp"

namespace wsseg {

GridShape GridShape::make(int height, int width) {
    if (height < 1 || width < 1) {
        throw InvalidConfig(fmt::format("grid shape must be at least 1x1, got {}x{}", height, width));
    }
    return GridShape{height, width};
}

namespace detail {

void check_size(const GridShape& shape, std::size_t n) {
    if (n != shape.size()) {
        throw ShapeMismatch(fmt::format("grid {}x{} needs {} values, got {}", shape.height, shape.width, shape.size(), n));
    }
}

void check_unit_interval(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw InvalidValue(fmt::format("{} value at index {} is {}, outside [0,1]", what, i, v));
        }
    }
}

}  // namespace detail

Mask::Mask(Grid<std::uint8_t> grid) : grid_(std::move(grid)) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (grid_[i] > 1) {
            throw InvalidValue(fmt::format("Mask value at index {} is {}, not binary", i, int{grid_[i]}));
        }
    }
}

Mask::Mask(GridShape shape, bool fill) : grid_(shape, fill ? 1 : 0) {}

Mask Mask::from_pixels(GridShape shape, std::initializer_list<Pixel> pixels) {
    return from_pixels(shape, std::span<const Pixel>(pixels.begin(), pixels.size()));
}

Mask Mask::from_pixels(GridShape shape, std::span<const Pixel> pixels) {
    Grid<std::uint8_t> g(shape, 0);
    for (const Pixel& p : pixels) {
        if (!shape.contains(p.row, p.col)) {
            throw InvalidValue(fmt::format("pixel ({},{}) outside {}x{} grid", p.row, p.col, shape.height, shape.width));
        }
        g(p.row, p.col) = 1;
    }
    return Mask(std::move(g));
}

Mask Mask::with(Pixel p, bool value) const {
    Grid<std::uint8_t> g = grid_;
    g(p.row, p.col) = value ? 1 : 0;
    return Mask(std::move(g));
}

double summary_stat(const Mask& mask) {
    return static_cast<double>(foreground_count(mask)) / static_cast<double>(mask.size());
}

double summary_stat(const SoftMask& mask) {
    const auto v = mask.values();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::size_t foreground_count(const Mask& mask) {
    std::size_t n = 0;
    for (std::uint8_t v : mask.values()) n += v;
    return n;
}

Pixel centroid_pixel(const Mask& mask) {
    std::int64_t sum_r = 0;
    std::int64_t sum_c = 0;
    std::int64_t n = 0;
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (mask(r, c)) {
                sum_r += r;
                sum_c += c;
                ++n;
            }
        }
    }
    if (n == 0) throw EmptyMask("centroid_pixel: mask has no foreground");

    // Squared distance scaled by n^2 keeps the comparison in exact integers.
    Pixel best{};
    std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
    // Row-major scan with strict < keeps the smallest (row, col) among ties.
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c)) continue;
            const std::int64_t dr = n * r - sum_r;
            const std::int64_t dc = n * c - sum_c;
            const std::int64_t d2 = dr * dr + dc * dc;
            if (d2 < best_d2) {
                best_d2 = d2;
                best = Pixel{r, c};
            }
        }
    }
    return best;
}

bool is_subset(const Mask& sub, const Mask& super) {
    require_same_shape(sub.shape(), super.shape(), "is_subset");
    for (std::size_t i = 0; i < sub.size(); ++i) {
        if (sub[i] && !super[i]) return false;
    }
    return true;
}

void require_same_shape(const GridShape& a, const GridShape& b, const char* context) {
    if (!(a == b)) {
        throw ShapeMismatch(fmt::format("{}: shape {}x{} does not match {}x{}", context, a.height, a.width, b.height, b.width));
    }
}

}  // namespace wsseg
