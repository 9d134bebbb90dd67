#pragma once

#include <span>
#include <vector>

#include "trichome/image.hpp"

namespace trichome {

struct PixelPos {
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

/// Moore-neighbor trace of the outer boundary of the 8-connected region
/// containing start. `start` must be the region's first pixel in raster
/// order. The result runs clockwise on screen (y down) and lists each
/// boundary step once; a single-pixel region yields one point.
template <typename InRegion>
std::vector<PixelPos> trace_outer_boundary(PixelPos start, InRegion&& in_region, std::size_t max_steps);

/// 8-chain length of a closed boundary: 1 per axis step, sqrt(2) per diagonal.
double chain_length(std::span<const PixelPos> boundary);

/// Signed shoelace area of the closed polygon through the boundary pixel
/// centers (positive for clockwise-on-screen order).
double polygon_area(std::span<const PixelPos> boundary);

/// Douglas-Peucker on a closed curve; returns indices into `curve`.
std::vector<std::size_t> simplify_closed(std::span<const PixelPos> curve, double tolerance);

// ---------------------------------------------------------------------------

namespace detail {
inline constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

inline int direction_of(int dx, int dy) {
    for (int d = 0; d < 8; ++d) {
        if (kDx[d] == dx && kDy[d] == dy) {
            return d;
        }
    }
    return -1;
}
}  // namespace detail

template <typename InRegion>
std::vector<PixelPos> trace_outer_boundary(PixelPos start, InRegion&& in_region, std::size_t max_steps) {
    std::vector<PixelPos> contour{start};
    PixelPos cur = start;
    int back = 4;  // came from the west: raster-first pixel has no region pixel there
    for (std::size_t step = 0; step < max_steps; ++step) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (in_region(cur.x + detail::kDx[d], cur.y + detail::kDy[d])) {
                found = k;
                break;
            }
        }
        if (found < 0) {
            return contour;  // isolated pixel
        }
        const int d = (back + found) % 8;
        const int prev = (back + found + 7) % 8;
        const PixelPos next{cur.x + detail::kDx[d], cur.y + detail::kDy[d]};
        const PixelPos behind{cur.x + detail::kDx[prev], cur.y + detail::kDy[prev]};
        if (cur == start && contour.size() > 1 && next == contour[1]) {
            contour.pop_back();
            return contour;
        }
        back = detail::direction_of(behind.x - next.x, behind.y - next.y);
        cur = next;
        contour.push_back(cur);
    }
    return contour;
}

}  // namespace trichome
