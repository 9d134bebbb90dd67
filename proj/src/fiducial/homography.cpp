#include <cmath>

#include "trichome/error.hpp"
#include "trichome/fiducial.hpp"
#include "trichome/linalg.hpp"

namespace trichome::fiducial {

namespace {

using Mat3 = std::array<double, 9>;

Mat3 mul(const Mat3& a, const Mat3& b) {
    Mat3 out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                s += a[r * 3 + k] * b[k * 3 + c];
            }
            out[r * 3 + c] = s;
        }
    }
    return out;
}

double det3(const Mat3& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 normalize_scale(Mat3 m) {
    if (std::abs(m[8]) < 1e-300) {
        throw InputError("homography maps the origin to infinity");
    }
    const double s = m[8];
    for (double& v : m) {
        v /= s;
    }
    return m;
}

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Mat3 hartley_transform(std::span<const Point2> pts) {
    double cx = 0.0;
    double cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) {
        mean_dist += std::hypot(p.x - cx, p.y - cy);
    }
    mean_dist /= static_cast<double>(pts.size());
    if (mean_dist <= 0.0) {
        throw InputError("estimate_homography: all points coincide");
    }
    const double s = std::sqrt(2.0) / mean_dist;
    return {s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0};
}

Point2 apply_raw(const Mat3& m, Point2 p) {
    const double w = m[6] * p.x + m[7] * p.y + m[8];
    return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

double triangle_area2(Point2 a, Point2 b, Point2 c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

}  // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& m) : m_(normalize_scale(m)) {}

Point2 Homography::apply(Point2 p) const {
    return apply_raw(m_, p);
}

double Homography::determinant() const {
    return det3(m_);
}

Homography Homography::inverse() const {
    const Mat3& m = m_;
    const double d = det3(m);
    if (std::abs(d) < 1e-12) {
        throw InputError("homography is singular");
    }
    Mat3 inv = {
        (m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d, (m[1] * m[5] - m[2] * m[4]) / d,
        (m[5] * m[6] - m[3] * m[8]) / d, (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
        (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d, (m[0] * m[4] - m[1] * m[3]) / d,
    };
    return Homography(inv);
}

Homography Homography::then(const Homography& next) const {
    return Homography(mul(next.m_, m_));
}

Homography estimate_homography(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size()) {
        throw InputError("estimate_homography: point count mismatch");
    }
    if (src.size() < 4) {
        throw InputError("estimate_homography: need at least 4 correspondences");
    }
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!std::isfinite(src[i].x) || !std::isfinite(src[i].y) || !std::isfinite(dst[i].x) ||
            !std::isfinite(dst[i].y)) {
            throw InputError("estimate_homography: non-finite coordinate");
        }
    }
    if (src.size() == 4) {
        double extent = 0.0;
        for (const auto& p : src) {
            for (const auto& q : src) {
                extent = std::max(extent, std::hypot(p.x - q.x, p.y - q.y));
            }
        }
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i + 1; j < 4; ++j) {
                for (std::size_t k = j + 1; k < 4; ++k) {
                    if (std::abs(triangle_area2(src[i], src[j], src[k])) <= 1e-9 * extent * extent) {
                        throw InputError("estimate_homography: degenerate configuration (collinear source points)");
                    }
                }
            }
        }
    }

    const Mat3 ts = hartley_transform(src);
    const Mat3 td = hartley_transform(dst);

    linalg::Matrix ata(9, 9);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Point2 p = apply_raw(ts, src[i]);
        const Point2 q = apply_raw(td, dst[i]);
        const std::array<double, 9> r1 = {-p.x, -p.y, -1.0, 0.0, 0.0, 0.0, q.x * p.x, q.x * p.y, q.x};
        const std::array<double, 9> r2 = {0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y};
        for (int a = 0; a < 9; ++a) {
            for (int b = 0; b < 9; ++b) {
                ata(a, b) += r1[a] * r1[b] + r2[a] * r2[b];
            }
        }
    }
    const auto eig = linalg::eigen_symmetric(ata);
    if (eig.values[1] <= 1e-10 * eig.values[8]) {
        throw InputError("estimate_homography: degenerate configuration (rank deficient system)");
    }
    Mat3 hn{};
    for (int k = 0; k < 9; ++k) {
        hn[k] = eig.vectors(k, 0);
    }
    if (std::abs(det3(hn)) < 1e-12) {
        throw InputError("estimate_homography: degenerate configuration (singular solution)");
    }
    const Homography td_inv = Homography(td).inverse();
    return Homography(mul(td_inv.matrix(), mul(hn, ts)));
}

}  // namespace trichome::fiducial
