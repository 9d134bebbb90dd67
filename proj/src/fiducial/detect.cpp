#include <algorithm>
#include <cmath>
#include <deque>

#include "trichome/contour.hpp"
#include "trichome/fiducial.hpp"

namespace trichome {

double chain_length(std::span<const PixelPos> boundary) {
    if (boundary.size() < 2) {
        return 0.0;
    }
    double len = 0.0;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const PixelPos& a = boundary[i];
        const PixelPos& b = boundary[(i + 1) % boundary.size()];
        const bool diagonal = a.x != b.x && a.y != b.y;
        len += diagonal ? std::sqrt(2.0) : 1.0;
    }
    return len;
}

double polygon_area(std::span<const PixelPos> boundary) {
    double twice = 0.0;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const PixelPos& a = boundary[i];
        const PixelPos& b = boundary[(i + 1) % boundary.size()];
        twice += static_cast<double>(a.x) * b.y - static_cast<double>(b.x) * a.y;
    }
    return 0.5 * twice;
}

namespace {

double point_line_distance(PixelPos p, PixelPos a, PixelPos b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) {
        return std::hypot(p.x - a.x, p.y - a.y);
    }
    return std::abs(dy * (p.x - a.x) - dx * (p.y - a.y)) / len;
}

void douglas_peucker(std::span<const PixelPos> pts, std::size_t first, std::size_t last, double tol,
                     std::vector<std::size_t>& keep) {
    double max_d = -1.0;
    std::size_t idx = first;
    for (std::size_t i = first + 1; i < last; ++i) {
        const double d = point_line_distance(pts[i % pts.size()], pts[first % pts.size()], pts[last % pts.size()]);
        if (d > max_d) {
            max_d = d;
            idx = i;
        }
    }
    if (max_d > tol) {
        douglas_peucker(pts, first, idx, tol, keep);
        keep.push_back(idx % pts.size());
        douglas_peucker(pts, idx, last, tol, keep);
    }
}

}  // namespace

std::vector<std::size_t> simplify_closed(std::span<const PixelPos> curve, double tolerance) {
    const std::size_t n = curve.size();
    if (n < 3) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) {
            all[i] = i;
        }
        return all;
    }
    // Anchor on the point farthest from the centroid (a true vertex of any
    // convex shape), then split at the point farthest from the anchor.
    double cx = 0.0;
    double cy = 0.0;
    for (const auto& p : curve) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    std::size_t anchor = 0;
    double anchor_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::hypot(curve[i].x - cx, curve[i].y - cy);
        if (d > anchor_d) {
            anchor_d = d;
            anchor = i;
        }
    }
    std::size_t far = anchor;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::hypot(curve[i].x - curve[anchor].x, curve[i].y - curve[anchor].y);
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    // Work in indices relative to the anchor; douglas_peucker wraps mod n.
    const std::size_t far_rel = (far + n - anchor) % n;
    std::vector<std::size_t> keep_rel{0};
    std::vector<PixelPos> rotated(n);
    for (std::size_t i = 0; i < n; ++i) {
        rotated[i] = curve[(anchor + i) % n];
    }
    douglas_peucker(rotated, 0, far_rel, tolerance, keep_rel);
    keep_rel.push_back(far_rel);
    douglas_peucker(rotated, far_rel, n, tolerance, keep_rel);
    std::vector<std::size_t> keep;
    keep.reserve(keep_rel.size());
    for (std::size_t k : keep_rel) {
        keep.push_back((k + anchor) % n);
    }
    return keep;
}

}  // namespace trichome

namespace trichome::fiducial {

namespace {

struct Line {
    // n . p = c with unit normal n
    double nx = 0.0;
    double ny = 0.0;
    double c = 0.0;
};

std::optional<Line> fit_line(std::span<const PixelPos> pts) {
    if (pts.size() < 2) {
        return std::nullopt;
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (const auto& p : pts) {
        sxx += (p.x - mx) * (p.x - mx);
        syy += (p.y - my) * (p.y - my);
        sxy += (p.x - mx) * (p.y - my);
    }
    // Direction of largest spread; the normal is perpendicular.
    const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const double nx = -std::sin(angle);
    const double ny = std::cos(angle);
    return Line{nx, ny, nx * mx + ny * my};
}

std::optional<Point2> intersect(const Line& a, const Line& b) {
    const double det = a.nx * b.ny - a.ny * b.nx;
    if (std::abs(det) < 1e-9) {
        return std::nullopt;
    }
    return Point2{(a.c * b.ny - a.ny * b.c) / det, (a.nx * b.c - a.c * b.nx) / det};
}

double signed_area(const std::array<Point2, 4>& q) {
    double twice = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point2& a = q[i];
        const Point2& b = q[(i + 1) % 4];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

bool strictly_convex(const std::array<Point2, 4>& q) {
    int sign = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point2& a = q[i];
        const Point2& b = q[(i + 1) % 4];
        const Point2& c = q[(i + 2) % 4];
        const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
        const int s = cross > 0 ? 1 : (cross < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign)) {
            return false;
        }
        sign = s;
    }
    return true;
}

/// Refines DP corners by intersecting lines fitted to each side. The
/// boundary pixels sit inside the dark region, on average half a pixel
/// step from the true edge, so each line is pushed outward by that much.
std::array<Point2, 4> refine_corners(std::span<const PixelPos> contour, const std::array<std::size_t, 4>& idx) {
    const std::size_t n = contour.size();
    std::array<Point2, 4> coarse;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        coarse[k] = {static_cast<double>(contour[idx[k]].x), static_cast<double>(contour[idx[k]].y)};
        cx += coarse[k].x / 4.0;
        cy += coarse[k].y / 4.0;
    }

    std::array<std::optional<Line>, 4> lines;
    for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t a = idx[k];
        const std::size_t b = idx[(k + 1) % 4];
        const std::size_t len = (b + n - a) % n;
        const std::size_t trim = std::max<std::size_t>(1, len * 15 / 100);
        std::vector<PixelPos> side;
        for (std::size_t s = trim; s + trim <= len; ++s) {
            side.push_back(contour[(a + s) % n]);
        }
        auto line = fit_line(side);
        if (!line) {
            continue;
        }
        // Orient the normal away from the quad center.
        if (line->nx * cx + line->ny * cy > line->c) {
            line->nx = -line->nx;
            line->ny = -line->ny;
            line->c = -line->c;
        }
        line->c += 0.5 * std::max(std::abs(line->nx), std::abs(line->ny));
        lines[k] = line;
    }

    std::array<Point2, 4> refined = coarse;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& before = lines[(k + 3) % 4];
        const auto& after = lines[k];
        if (!before || !after) {
            continue;
        }
        if (auto p = intersect(*before, *after)) {
            if (std::hypot(p->x - coarse[k].x, p->y - coarse[k].y) < 3.0) {
                refined[k] = *p;
            }
        }
    }
    return refined;
}

/// Reads the 6x6 cell grid; bit set = white cell.
std::array<std::array<bool, 6>, 6> sample_cells(const GrayImage& binary, const Homography& marker_to_image) {
    std::array<std::array<bool, 6>, 6> cells{};
    constexpr int kSamples = 5;
    for (int row = 0; row < 6; ++row) {
        for (int col = 0; col < 6; ++col) {
            double sum = 0.0;
            for (int sy = 0; sy < kSamples; ++sy) {
                for (int sx = 0; sx < kSamples; ++sx) {
                    const double u = col + 1.0 / 3.0 + (sx + 0.5) / (3.0 * kSamples);
                    const double v = row + 1.0 / 3.0 + (sy + 0.5) / (3.0 * kSamples);
                    const Point2 p = marker_to_image.apply({u, v});
                    sum += binary.sample_bilinear(p.x, p.y);
                }
            }
            cells[row][col] = sum / (kSamples * kSamples) > 128.0;
        }
    }
    return cells;
}

}  // namespace

std::vector<MarkerDetection> detect_markers(const GrayImage& binary, const MarkerDictionary& dict,
                                            const DetectorParams& params) {
    const int w = binary.width();
    const int h = binary.height();
    std::vector<int> labels(binary.size(), 0);
    auto is_dark = [&](int x, int y) { return binary.at(x, y) < 128.0f; };

    std::vector<MarkerDetection> out;
    int next_label = 0;
    std::deque<PixelPos> queue;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (!is_dark(x0, y0) || labels[static_cast<std::size_t>(y0) * w + x0] != 0) {
                continue;
            }
            const int label = ++next_label;
            int area = 0;
            bool touches_border = false;
            labels[static_cast<std::size_t>(y0) * w + x0] = label;
            queue.push_back({x0, y0});
            while (!queue.empty()) {
                const PixelPos p = queue.front();
                queue.pop_front();
                ++area;
                if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) {
                    touches_border = true;
                }
                for (int d = 0; d < 8; ++d) {
                    const int nx = p.x + detail::kDx[d];
                    const int ny = p.y + detail::kDy[d];
                    if (!binary.contains(nx, ny) || !is_dark(nx, ny)) {
                        continue;
                    }
                    int& l = labels[static_cast<std::size_t>(ny) * w + nx];
                    if (l == 0) {
                        l = label;
                        queue.push_back({nx, ny});
                    }
                }
            }
            if (touches_border || area < params.min_component_area) {
                continue;
            }

            auto in_region = [&](int x, int y) {
                return binary.contains(x, y) && labels[static_cast<std::size_t>(y) * w + x] == label;
            };
            const auto contour =
                trace_outer_boundary({x0, y0}, in_region, static_cast<std::size_t>(4 * area + 16));
            const double perimeter = chain_length(contour);
            auto keep = simplify_closed(contour, params.polygon_tolerance * perimeter);
            if (keep.size() != 4) {
                continue;
            }
            std::sort(keep.begin(), keep.end());
            std::array<Point2, 4> quad =
                refine_corners(contour, {keep[0], keep[1], keep[2], keep[3]});
            if (signed_area(quad) < 0.0) {
                std::swap(quad[1], quad[3]);
            }
            if (!strictly_convex(quad)) {
                continue;
            }
            bool small = false;
            for (std::size_t k = 0; k < 4; ++k) {
                const Point2& a = quad[k];
                const Point2& b = quad[(k + 1) % 4];
                if (std::hypot(b.x - a.x, b.y - a.y) < params.min_side_px) {
                    small = true;
                }
            }
            if (small) {
                continue;
            }

            const std::array<Point2, 4> unit = {Point2{0, 0}, Point2{6, 0}, Point2{6, 6}, Point2{0, 6}};
            Homography marker_to_image;
            try {
                marker_to_image = estimate_homography(unit, quad);
            } catch (const std::exception&) {
                continue;
            }
            const auto cells = sample_cells(binary, marker_to_image);
            bool border_ok = true;
            for (int i = 0; i < 6; ++i) {
                if (cells[0][i] || cells[5][i] || cells[i][0] || cells[i][5]) {
                    border_ok = false;
                }
            }
            if (!border_ok) {
                continue;
            }
            MarkerCode observed = 0;
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    if (cells[r + 1][c + 1]) {
                        observed = static_cast<MarkerCode>(observed | (1U << (15 - (r * 4 + c))));
                    }
                }
            }
            const auto match = dict.match(observed, params.max_correction_bits);
            if (!match) {
                continue;
            }
            MarkerDetection det;
            det.id = match->id;
            for (int i = 0; i < 4; ++i) {
                det.corners[static_cast<std::size_t>(i)] = quad[static_cast<std::size_t>((match->rotation + i) % 4)];
            }
            out.push_back(det);
        }
    }
    return out;
}

namespace {

struct PointLine {
    Point2 p;  // a point on the line
    Point2 d;  // unit direction
};

std::optional<PointLine> fit_points(std::span<const Point2> pts) {
    if (pts.size() < 2) {
        return std::nullopt;
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (const auto& p : pts) {
        sxx += (p.x - mx) * (p.x - mx);
        syy += (p.y - my) * (p.y - my);
        sxy += (p.x - mx) * (p.y - my);
    }
    const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    return PointLine{{mx, my}, {std::cos(angle), std::sin(angle)}};
}

std::optional<Point2> intersect_lines(const PointLine& a, const PointLine& b) {
    const double det = a.d.x * b.d.y - a.d.y * b.d.x;
    if (std::abs(det) < 1e-9) {
        return std::nullopt;
    }
    const double t = ((b.p.x - a.p.x) * b.d.y - (b.p.y - a.p.y) * b.d.x) / det;
    return Point2{a.p.x + t * a.d.x, a.p.y + t * a.d.y};
}

}  // namespace

void refine_corners_gray(const GrayImage& gray, std::span<MarkerDetection> markers, double max_shift_px) {
    constexpr int kProfiles = 40;
    constexpr double kReach = 3.0;  // px on either side of the edge
    constexpr double kStep = 0.1;
    const int steps = static_cast<int>(std::lround(2.0 * kReach / kStep));
    for (auto& m : markers) {
        Point2 center{0.0, 0.0};
        for (const auto& c : m.corners) {
            center.x += c.x / 4.0;
            center.y += c.y / 4.0;
        }
        std::array<std::optional<PointLine>, 4> sides;
        for (std::size_t k = 0; k < 4; ++k) {
            const Point2 a = m.corners[k];
            const Point2 b = m.corners[(k + 1) % 4];
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            if (len < 4.0 * kReach) {
                continue;
            }
            Point2 normal{-(b.y - a.y) / len, (b.x - a.x) / len};
            const Point2 mid{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
            if (normal.x * (center.x - mid.x) + normal.y * (center.y - mid.y) > 0.0) {
                normal = {-normal.x, -normal.y};  // point outward, from dark to bright
            }
            std::vector<Point2> edge;
            std::vector<double> profile(static_cast<std::size_t>(steps) + 1);
            for (int i = 0; i < kProfiles; ++i) {
                const double t = 0.15 + 0.7 * (i + 0.5) / kProfiles;
                const Point2 base{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
                for (int s = 0; s <= steps; ++s) {
                    const double o = -kReach + s * kStep;
                    profile[static_cast<std::size_t>(s)] = gray.sample_bilinear(base.x + o * normal.x, base.y + o * normal.y);
                }
                const double lo = profile.front();
                const double hi = profile.back();
                if (!(hi - lo > 20.0)) {
                    continue;
                }
                const double level = 0.5 * (lo + hi);
                for (int s = 0; s < steps; ++s) {
                    const double v0 = profile[static_cast<std::size_t>(s)];
                    const double v1 = profile[static_cast<std::size_t>(s) + 1];
                    if (v0 < level && v1 >= level) {
                        const double o = -kReach + (s + (level - v0) / (v1 - v0)) * kStep;
                        edge.push_back({base.x + o * normal.x, base.y + o * normal.y});
                        break;
                    }
                }
            }
            if (edge.size() >= kProfiles / 2) {
                sides[k] = fit_points(edge);
            }
        }
        std::array<Point2, 4> refined = m.corners;
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& before = sides[(k + 3) % 4];
            const auto& after = sides[k];
            if (!before || !after) {
                continue;
            }
            if (auto p = intersect_lines(*before, *after)) {
                if (std::hypot(p->x - m.corners[k].x, p->y - m.corners[k].y) <= max_shift_px) {
                    refined[k] = *p;
                }
            }
        }
        m.corners = refined;
    }
}

}  // namespace trichome::fiducial
