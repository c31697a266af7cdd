#include "wsseg/morphology.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "wsseg/errors.hpp"

namespace wsseg {

StructuringElement::StructuringElement(std::vector<Offset> offsets) : offsets_(std::move(offsets)) {
    std::sort(offsets_.begin(), offsets_.end());
    offsets_.erase(std::unique(offsets_.begin(), offsets_.end()), offsets_.end());
    if (!std::binary_search(offsets_.begin(), offsets_.end(), Offset{0, 0})) {
        throw InvalidConfig("structuring element must contain (0,0)");
    }
    for (const Offset& o : offsets_) {
        if (!std::binary_search(offsets_.begin(), offsets_.end(), Offset{-o.drow, -o.dcol})) {
            throw InvalidConfig(fmt::format("structuring element is not symmetric: ({},{}) has no mirror", o.drow, o.dcol));
        }
    }
}

StructuringElement StructuringElement::cross() {
    return StructuringElement({{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}});
}

StructuringElement StructuringElement::square(int radius) {
    if (radius < 0) throw InvalidConfig("square structuring element needs radius >= 0");
    std::vector<Offset> o;
    for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) o.push_back({dr, dc});
    }
    return StructuringElement(std::move(o));
}

Mask erode(const Mask& mask, const StructuringElement& se) {
    const GridShape shape = mask.shape();
    Grid<std::uint8_t> out(shape, 0);
    for (int r = 0; r < shape.height; ++r) {
        for (int c = 0; c < shape.width; ++c) {
            if (!mask(r, c)) continue;
            bool keep = true;
            for (const Offset& o : se.offsets()) {
                const int rr = r + o.drow;
                const int cc = c + o.dcol;
                if (!shape.contains(rr, cc) || !mask(rr, cc)) {
                    keep = false;
                    break;
                }
            }
            out(r, c) = keep ? 1 : 0;
        }
    }
    return Mask(std::move(out));
}

Mask weak_mask(const Mask& gt, double coverage, const StructuringElement& se) {
    if (!(coverage > 0.0 && coverage <= 1.0)) {
        throw InvalidConfig(fmt::format("weak mask coverage must lie in (0,1], got {}", coverage));
    }
    const std::size_t total = foreground_count(gt);
    if (total == 0) throw EmptyMask("weak_mask: ground-truth mask has no foreground");

    // The slack absorbs products such as 0.12 * 25 = 3.0000000000000004 that must not round up.
    const double scaled = coverage * static_cast<double>(total);
    const auto target = static_cast<std::size_t>(std::ceil(scaled - 1e-9 * scaled));
    Mask current = gt;
    std::size_t count = total;
    bool eroded_once = false;
    while (count > target) {
        Mask next = erode(current, se);
        const std::size_t next_count = foreground_count(next);
        if (next_count == 0) {
            if (!eroded_once) return Mask::from_pixels(gt.shape(), {centroid_pixel(gt)});
            return current;
        }
        // A symmetric SE that stops shrinking a non-empty mask (e.g. the singleton set) ends here.
        if (next_count == count) return current;
        current = std::move(next);
        count = next_count;
        eroded_once = true;
    }
    return current;
}

}  // namespace wsseg
