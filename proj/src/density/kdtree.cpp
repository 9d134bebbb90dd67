#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "trichome/density.hpp"
#include "trichome/error.hpp"

namespace trichome::density {

namespace {

double coord(const Point2& p, int axis) { return axis == 0 ? p.x : p.y; }

}  // namespace

KdTree::KdTree(std::span<const Point2> points) : points_(points.begin(), points.end()), order_(points.size()) {
    for (const auto& p : points_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw InputError("k-d tree: non-finite coordinate");
        }
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
        nodes_.reserve(2 * (points_.size() / kLeafSize + 1));
        build(0, points_.size(), 0);
    }
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) {
        return id;
    }
    const int axis = depth % 2;
    const std::size_t mid = begin + (end - begin) / 2;
    auto less = [&](std::size_t a, std::size_t b) {
        const double ca = coord(points_[a], axis);
        const double cb = coord(points_[b], axis);
        return ca < cb || (ca == cb && a < b);
    };
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), less);
    const double split = coord(points_[order_[mid]], axis);
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(int node_id, std::size_t query, Neighbor& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    const Point2& q = points_[query];
    if (node.left < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            if (idx == query) {
                continue;
            }
            const double dx = points_[idx].x - q.x;
            const double dy = points_[idx].y - q.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best.distance_sq || (d2 == best.distance_sq && idx < best.index)) {
                best = {idx, d2};
            }
        }
        return;
    }
    // Points with coordinate == split may sit on either side, so the far
    // side is visited whenever the slab distance does not exceed the best.
    const double diff = coord(q, node.axis) - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, query, best);
    if (diff * diff <= best.distance_sq) {
        search(far, query, best);
    }
}

KdTree::Neighbor KdTree::nearest_other(std::size_t query) const {
    if (points_.size() < 2) {
        throw InputError("insufficient points");
    }
    if (query >= points_.size()) {
        throw InputError("k-d tree: query index out of range");
    }
    Neighbor best{points_.size(), std::numeric_limits<double>::infinity()};
    search(0, query, best);
    return best;
}

}  // namespace trichome::density
