#include <cmath>

#include "trichome/density.hpp"
#include "trichome/error.hpp"

namespace trichome::density {

double mean_nnd(std::span<const Point2> points) {
    if (points.size() < 2) {
        throw InputError("insufficient points");
    }
    const KdTree tree(points);
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sum += std::sqrt(tree.nearest_other(i).distance_sq);
    }
    return sum / static_cast<double>(points.size());
}

DensityResult to_physical(double nnd_px, double opening_px, double opening_mm, std::size_t n_points) {
    if (!(opening_px > 0.0) || !std::isfinite(opening_px)) {
        throw InputError("opening_px must be positive");
    }
    if (!(opening_mm > 0.0) || !std::isfinite(opening_mm)) {
        throw InputError("opening_mm must be positive");
    }
    if (!(nnd_px >= 0.0) || !std::isfinite(nnd_px)) {
        throw InputError("nnd_px must be finite and non-negative");
    }
    DensityResult r;
    r.nnd_px = nnd_px;
    r.scale_mm_per_px = opening_mm / opening_px;
    r.nnd_mm = nnd_px * r.scale_mm_per_px;
    r.n_points = n_points;
    return r;
}

}  // namespace trichome::density
