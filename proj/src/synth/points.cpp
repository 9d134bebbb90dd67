#include <cmath>
#include <random>

#include "trichome/error.hpp"
#include "trichome/synth.hpp"

namespace trichome::synth {

std::vector<Point2> poisson_points(double lambda, const Region& region, std::uint64_t seed) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InputError("poisson_points: lambda must be positive");
    }
    if (!(region.width() > 0.0) || !(region.height() > 0.0)) {
        throw InputError("poisson_points: empty region");
    }
    std::mt19937_64 rng(seed);
    std::poisson_distribution<long> count(lambda);
    std::uniform_real_distribution<double> ux(region.x0, region.x1);
    std::uniform_real_distribution<double> uy(region.y0, region.y1);
    const long n = count(rng);
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        pts.push_back({x, y});
    }
    return pts;
}

std::vector<Point2> enforce_min_separation(std::vector<Point2> points, const Region& region, double min_sep,
                                          std::uint64_t seed) {
    if (!(min_sep >= 0.0)) {
        throw InputError("enforce_min_separation: negative separation");
    }
    if (min_sep == 0.0) {
        return points;
    }
    constexpr int kMaxAttempts = 10000;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(region.x0, region.x1);
    std::uniform_real_distribution<double> uy(region.y0, region.y1);
    const double min_sq = min_sep * min_sep;
    std::vector<Point2> kept;
    kept.reserve(points.size());
    auto clear = [&](Point2 p) {
        for (const auto& q : kept) {
            const double dx = p.x - q.x;
            const double dy = p.y - q.y;
            if (dx * dx + dy * dy < min_sq) {
                return false;
            }
        }
        return true;
    };
    for (auto p : points) {
        int attempts = 0;
        while (!clear(p)) {
            if (++attempts > kMaxAttempts) {
                throw InputError("enforce_min_separation: region too crowded for the separation");
            }
            p = {ux(rng), uy(rng)};
        }
        kept.push_back(p);
    }
    return kept;
}

std::vector<Point2> simulate_damage(std::span<const Point2> points, double damage_x) {
    std::vector<Point2> out;
    for (const auto& p : points) {
        if (p.x <= damage_x) {
            out.push_back(p);
        }
    }
    return out;
}

}  // namespace trichome::synth
