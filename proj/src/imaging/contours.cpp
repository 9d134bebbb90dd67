#include <algorithm>
#include <cmath>
#include <numbers>

#include "trichome/error.hpp"
#include "trichome/imaging.hpp"
#include "trichome/stats.hpp"

namespace trichome::imaging {

ContourStats contour_stats(const Region& region) {
    if (region.pixels.empty()) {
        throw InputError("contour_stats: empty region");
    }
    int min_x = region.pixels.front().x;
    int max_x = min_x;
    int min_y = region.pixels.front().y;
    int max_y = min_y;
    PixelPos start = region.pixels.front();
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : region.pixels) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
        if (p.y < start.y || (p.y == start.y && p.x < start.x)) {
            start = p;
        }
        sx += p.x;
        sy += p.y;
    }
    const int bw = max_x - min_x + 1;
    const int bh = max_y - min_y + 1;
    std::vector<char> mask(static_cast<std::size_t>(bw) * bh, 0);
    for (const auto& p : region.pixels) {
        mask[static_cast<std::size_t>(p.y - min_y) * bw + (p.x - min_x)] = 1;
    }
    auto in_region = [&](int x, int y) {
        const int lx = x - min_x;
        const int ly = y - min_y;
        return lx >= 0 && ly >= 0 && lx < bw && ly < bh && mask[static_cast<std::size_t>(ly) * bw + lx] != 0;
    };
    const auto boundary = trace_outer_boundary(start, in_region, 4 * region.pixels.size() + 16);

    ContourStats s;
    const double n = static_cast<double>(region.pixels.size());
    s.centroid = {sx / n, sy / n};
    s.area = n;
    s.perimeter = chain_length(boundary);
    s.polygon_area = std::abs(polygon_area(boundary));
    s.circularity = s.perimeter > 0.0 ? 4.0 * std::numbers::pi * s.polygon_area / (s.perimeter * s.perimeter) : 0.0;
    return s;
}

TrichomeSet extract_and_filter(std::span<const Region> regions, double mm_per_px, int width, int height,
                               const FilterParams& params) {
    if (!(mm_per_px > 0.0) || !std::isfinite(mm_per_px)) {
        throw InputError("extract_and_filter: scale must be positive");
    }
    TrichomeSet out;
    out.width = width;
    out.height = height;

    std::vector<ContourStats> candidates;
    candidates.reserve(regions.size());
    for (const auto& r : regions) {
        if (r.pixels.empty()) {
            continue;
        }
        const ContourStats s = contour_stats(r);
        const double diameter_mm = 2.0 * std::sqrt(s.area / std::numbers::pi) * mm_per_px;
        if (diameter_mm < params.min_size_mm || s.perimeter <= 0.0 || s.polygon_area <= 0.0) {
            ++out.rejected_small;
            continue;
        }
        candidates.push_back(s);
    }

    const auto accept = [&](const ContourStats& s) {
        out.points.push_back(s.centroid);
        out.accepted.push_back(s);
    };

    if (candidates.size() < 4) {
        out.small_sample = true;
        for (const auto& s : candidates) {
            accept(s);
        }
    } else {
        std::vector<double> areas;
        std::vector<double> perimeters;
        std::vector<double> circularities;
        for (const auto& s : candidates) {
            areas.push_back(s.area);
            perimeters.push_back(s.perimeter);
            circularities.push_back(s.circularity);
        }
        const auto fence = [&](const std::vector<double>& v, double& lo, double& hi) {
            const double q1 = stats::quantile_type7(v, 0.25);
            const double q3 = stats::quantile_type7(v, 0.75);
            const double iqr = q3 - q1;
            lo = q1 - params.fence_k * iqr;
            hi = q3 + params.fence_k * iqr;
        };
        Fences& f = out.fences;
        fence(areas, f.area_lo, f.area_hi);
        fence(perimeters, f.perimeter_lo, f.perimeter_hi);
        double unused = 0.0;
        fence(circularities, f.circularity_lo, unused);
        for (const auto& s : candidates) {
            const bool ok = s.area >= f.area_lo && s.area <= f.area_hi && s.perimeter >= f.perimeter_lo &&
                            s.perimeter <= f.perimeter_hi && s.circularity >= f.circularity_lo;
            if (ok) {
                accept(s);
            }
        }
    }
    out.accepted_count = static_cast<int>(out.points.size());
    out.rejected_count = static_cast<int>(regions.size()) - out.accepted_count;
    return out;
}

}  // namespace trichome::imaging
