#pragma once

#include <span>
#include <vector>

#include "wsseg/grid.hpp"

namespace wsseg {

struct Offset {
    int drow = 0;
    int dcol = 0;
    auto operator<=>(const Offset&) const = default;
};

/// Finite point set containing (0,0) and closed under negation.
class StructuringElement {
public:
    /// Throws InvalidConfig if (0,0) is missing or the set is not symmetric.
    explicit StructuringElement(std::vector<Offset> offsets);

    /// 4-connected cross {(0,0), (+-1,0), (0,+-1)}.
    static StructuringElement cross();
    /// Full (2r+1)x(2r+1) square.
    static StructuringElement square(int radius);

    std::span<const Offset> offsets() const { return offsets_; }

private:
    std::vector<Offset> offsets_;
};

/// Binary erosion; pixels outside the grid count as background.
Mask erode(const Mask& mask, const StructuringElement& se);

/// Simulated partial annotation: erode `gt` until at most ceil(coverage * |gt|) pixels remain.
///
/// Returns the first iterate at or below the target. If that iterate is empty the previous
/// (non-empty) iterate is returned instead, and if a single erosion already empties `gt`
/// the result is the lone centroid pixel. The result is never empty and always a subset of gt.
///
/// Throws EmptyMask if gt has no foreground and InvalidConfig unless 0 < coverage <= 1.
Mask weak_mask(const Mask& gt, double coverage, const StructuringElement& se = StructuringElement::cross());

}  // namespace wsseg
