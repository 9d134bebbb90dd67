#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trichome/image.hpp"

namespace trichome::density {

/// Static 2-D k-d tree: median split on alternating axes, leaves of at most
/// kLeafSize points. Read-only after construction.
class KdTree {
public:
    static constexpr std::size_t kLeafSize = 16;

    explicit KdTree(std::span<const Point2> points);

    struct Neighbor {
        std::size_t index = 0;
        double distance_sq = 0.0;
    };

    /// Nearest point to points[query] other than itself; ties go to the
    /// smallest index. Requires at least two points.
    Neighbor nearest_other(std::size_t query) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        // Leaf when left < 0: order_[begin, end) are its points.
        int left = -1;
        int right = -1;
        int axis = 0;
        double split = 0.0;
        std::size_t begin = 0;
        std::size_t end = 0;
    };

    int build(std::size_t begin, std::size_t end, int depth);
    void search(int node, std::size_t query, Neighbor& best) const;

    std::vector<Point2> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// (1/N) sum of each point's distance to its nearest other point.
/// Throws InputError("insufficient points") when N < 2.
double mean_nnd(std::span<const Point2> points);

inline constexpr double kOpeningSideMm = 12.0;

struct DensityResult {
    double nnd_px = 0.0;
    double nnd_mm = 0.0;
    std::size_t n_points = 0;
    double scale_mm_per_px = 0.0;
};

/// scale = opening_mm / opening_px; nnd_mm = nnd_px * scale.
DensityResult to_physical(double nnd_px, double opening_px, double opening_mm = kOpeningSideMm,
                          std::size_t n_points = 0);

}  // namespace trichome::density
