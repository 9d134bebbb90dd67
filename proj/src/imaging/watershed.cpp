#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>

#include "trichome/imaging.hpp"

namespace trichome::imaging {

namespace {

bool fg(const GrayImage& img, int x, int y) {
    return img.contains(x, y) && img.at(x, y) > 127.0f;
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<std::size_t> parent_;
};

// Labels 8-connected runs of pixels satisfying `member`, raster order; 0 = none.
template <typename Member>
int label_components(int w, int h, Member&& member, std::vector<int>& labels) {
    labels.assign(static_cast<std::size_t>(w) * h, 0);
    int count = 0;
    std::deque<PixelPos> queue;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (labels[i0] != 0 || !member(x0, y0, x0, y0)) {
                continue;
            }
            labels[i0] = ++count;
            queue.push_back({x0, y0});
            while (!queue.empty()) {
                const PixelPos p = queue.front();
                queue.pop_front();
                for (int d = 0; d < 8; ++d) {
                    const int nx = p.x + detail::kDx[d];
                    const int ny = p.y + detail::kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (labels[ni] == 0 && member(nx, ny, p.x, p.y)) {
                        labels[ni] = count;
                        queue.push_back({nx, ny});
                    }
                }
            }
        }
    }
    return count;
}

std::vector<Region> regions_from_labels(int w, int h, const std::vector<int>& labels, int count) {
    std::vector<Region> regions(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        regions[static_cast<std::size_t>(i)].label = i + 1;
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = labels[static_cast<std::size_t>(y) * w + x];
            if (l > 0) {
                regions[static_cast<std::size_t>(l - 1)].pixels.push_back({x, y});
            }
        }
    }
    return regions;
}

}  // namespace

std::vector<int> chebyshev_distance(const GrayImage& binary) {
    const int w = binary.width();
    const int h = binary.height();
    constexpr int kInf = std::numeric_limits<int>::max() / 2;
    std::vector<int> d(binary.size(), 0);
    const auto get = [&](int x, int y) {
        return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : d[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!fg(binary, x, y)) {
                continue;
            }
            int v = kInf;
            v = std::min({v, get(x - 1, y) + 1, get(x - 1, y - 1) + 1, get(x, y - 1) + 1, get(x + 1, y - 1) + 1});
            d[static_cast<std::size_t>(y) * w + x] = v;
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            int& v = d[static_cast<std::size_t>(y) * w + x];
            if (v == 0) {
                continue;
            }
            v = std::min({v, get(x + 1, y) + 1, get(x + 1, y + 1) + 1, get(x, y + 1) + 1, get(x - 1, y + 1) + 1});
        }
    }
    return d;
}

std::vector<Region> connected_components(const GrayImage& binary) {
    std::vector<int> labels;
    const int count = label_components(
        binary.width(), binary.height(), [&](int x, int y, int, int) { return fg(binary, x, y); }, labels);
    return regions_from_labels(binary.width(), binary.height(), labels, count);
}

std::vector<Region> segment_watershed(const GrayImage& binary, const WatershedParams& params) {
    const int w = binary.width();
    const int h = binary.height();
    const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    const std::vector<int> dist = chebyshev_distance(binary);
    const auto dist_at = [&](int x, int y) {
        return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : dist[idx(x, y)];
    };

    std::vector<int> component;
    label_components(w, h, [&](int x, int y, int, int) { return fg(binary, x, y); }, component);

    // Plateaus: 8-connected runs of equal distance. A plateau is a regional
    // maximum when no pixel in it touches a strictly larger distance.
    std::vector<int> plateau;
    const int n_plateaus = label_components(
        w, h,
        [&](int x, int y, int px, int py) { return dist_at(x, y) > 0 && dist_at(x, y) == dist_at(px, py); },
        plateau);
    std::vector<char> is_max(static_cast<std::size_t>(n_plateaus) + 1, 1);
    is_max[0] = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = plateau[idx(x, y)];
            if (p == 0 || !is_max[static_cast<std::size_t>(p)]) {
                continue;
            }
            for (int k = 0; k < 8; ++k) {
                if (dist_at(x + detail::kDx[k], y + detail::kDy[k]) > dist[idx(x, y)]) {
                    is_max[static_cast<std::size_t>(p)] = 0;
                    break;
                }
            }
        }
    }

    // Merge maxima lying within the radius of each other in one component.
    DisjointSets sets(static_cast<std::size_t>(n_plateaus) + 1);
    const int r = params.seed_merge_radius;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = plateau[idx(x, y)];
            if (!is_max[static_cast<std::size_t>(p)]) {
                continue;
            }
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const int q = plateau[idx(nx, ny)];
                    if (q != p && is_max[static_cast<std::size_t>(q)] &&
                        component[idx(nx, ny)] == component[idx(x, y)]) {
                        sets.unite(static_cast<std::size_t>(p), static_cast<std::size_t>(q));
                    }
                }
            }
        }
    }

    // Seed labels in raster order of the first seed pixel.
    std::vector<int> seed_label(static_cast<std::size_t>(n_plateaus) + 1, 0);
    std::vector<int> labels(binary.size(), 0);
    int n_labels = 0;
    struct Item {
        int dist;
        std::uint64_t order;
        int x;
        int y;
        bool operator<(const Item& o) const {
            if (dist != o.dist) {
                return dist < o.dist;  // larger distance first
            }
            return order > o.order;  // then first in, first out
        }
    };
    std::priority_queue<Item> queue;
    std::uint64_t order = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int p = plateau[idx(x, y)];
            if (!is_max[static_cast<std::size_t>(p)]) {
                continue;
            }
            const std::size_t root = sets.find(static_cast<std::size_t>(p));
            if (seed_label[root] == 0) {
                seed_label[root] = ++n_labels;
            }
            labels[idx(x, y)] = seed_label[root];
            queue.push({dist[idx(x, y)], order++, x, y});
        }
    }
    while (!queue.empty()) {
        const Item it = queue.top();
        queue.pop();
        const int l = labels[idx(it.x, it.y)];
        for (int k = 0; k < 8; ++k) {
            const int nx = it.x + detail::kDx[k];
            const int ny = it.y + detail::kDy[k];
            if (!fg(binary, nx, ny) || labels[idx(nx, ny)] != 0) {
                continue;
            }
            labels[idx(nx, ny)] = l;
            queue.push({dist[idx(nx, ny)], order++, nx, ny});
        }
    }
    return regions_from_labels(w, h, labels, n_labels);
}

}  // namespace trichome::imaging
