#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "trichome/density.hpp"
#include "trichome/error.hpp"
#include "trichome/metadata.hpp"
#include "trichome/random.hpp"
#include "trichome/synth.hpp"

namespace trichome::synth {

using fiducial::Homography;
using fiducial::MarkerCode;

void SceneParams::validate() const {
    layout.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InputError("scene: lambda must be positive");
    }
    if (!(std::abs(tilt_h) < 60.0) || !(std::abs(tilt_v) < 60.0)) {
        throw InputError("scene: tilt must be within +-60 degrees");
    }
    if (!(distance_mm > 0.0) || !(focal_px > 0.0) || !(frame_factor >= 1.0)) {
        throw InputError("scene: distance, focal length and frame factor must be positive");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw InputError("scene: noise_sigma must be non-negative");
    }
    if (!(std::abs(illum_gradient) < 1.0)) {
        throw InputError("scene: illum_gradient must lie in (-1, 1)");
    }
    if (!(blob_size_cv >= 0.0) || blob_size_cv > 0.5) {
        throw InputError("scene: blob_size_cv must lie in [0, 0.5]");
    }
    if (!(min_separation_mm >= 0.0)) {
        throw InputError("scene: min_separation_mm must be non-negative");
    }
    if (!(blob_sigma_mm > 0.0) || !(guard_mm >= 0.0) || 2.0 * guard_mm >= layout.opening_side_mm) {
        throw InputError("scene: invalid blob or guard size");
    }
    const double frame = frame_factor * layout.paper_side_mm * focal_px / distance_mm;
    if (frame > 8000.0) {
        throw InputError("scene: frame too large to render");
    }
}

SceneParams sample_envelope_pose(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> th(kTiltHMin, kTiltHMax);
    std::uniform_real_distribution<double> tv(kTiltVMin, kTiltVMax);
    std::uniform_real_distribution<double> dist(kDistanceMin, kDistanceMax);
    SceneParams p;
    p.tilt_h = th(rng);
    p.tilt_v = tv(rng);
    p.distance_mm = dist(rng);
    p.seed = seed;
    return p;
}

Homography camera_homography(const SceneParams& params, int frame) {
    const double a = params.tilt_h * std::numbers::pi / 180.0;
    const double b = params.tilt_v * std::numbers::pi / 180.0;
    // R = Ry(a) * Rx(b); paper plane z = 0 centered on the optical axis.
    const double ca = std::cos(a);
    const double sa = std::sin(a);
    const double cb = std::cos(b);
    const double sb = std::sin(b);
    const double r[3][3] = {{ca, sa * sb, sa * cb}, {0.0, cb, -sb}, {-sa, ca * sb, ca * cb}};
    const double f = params.focal_px;
    const double c = (frame - 1) / 2.0;
    const double half = params.layout.paper_side_mm / 2.0;
    // Columns r1, r2, t (t = (0, 0, d)), then K, then the shift to center.
    std::array<double, 9> m{};
    for (int row = 0; row < 3; ++row) {
        const double x = r[row][0];
        const double y = r[row][1];
        const double t = row == 2 ? params.distance_mm : 0.0;
        m[row * 3 + 0] = x;
        m[row * 3 + 1] = y;
        m[row * 3 + 2] = t - x * half - y * half;
    }
    std::array<double, 9> k = {f, 0.0, c, 0.0, f, c, 0.0, 0.0, 1.0};
    std::array<double, 9> h{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int q = 0; q < 3; ++q) {
                h[i * 3 + j] += k[i * 3 + q] * m[q * 3 + j];
            }
        }
    }
    return Homography(h);
}

namespace {

bool marker_cell_white(MarkerCode code, int row, int col) {
    if (row <= 0 || row >= 5 || col <= 0 || col >= 5) {
        return false;
    }
    const int bit = (row - 1) * 4 + (col - 1);
    return ((code >> (15 - bit)) & 1U) != 0;
}

double pixel_average_gauss(double center, double sigma, int pixel) {
    // Mean of exp(-(t - center)^2 / (2 sigma^2)) over [pixel - 0.5, pixel + 0.5].
    const double s = sigma * std::sqrt(2.0);
    const double hi = (pixel + 0.5 - center) / s;
    const double lo = (pixel - 0.5 - center) / s;
    return sigma * std::sqrt(std::numbers::pi / 2.0) * (std::erf(hi) - std::erf(lo));
}

// Local isotropic scale (px per mm) of H at paper point p.
double local_scale(const Homography& h, Point2 p) {
    const double eps = 1e-3;
    const Point2 a = h.apply(p);
    const Point2 bx = h.apply({p.x + eps, p.y});
    const Point2 by = h.apply({p.x, p.y + eps});
    const double j00 = (bx.x - a.x) / eps;
    const double j10 = (bx.y - a.y) / eps;
    const double j01 = (by.x - a.x) / eps;
    const double j11 = (by.y - a.y) / eps;
    return std::sqrt(std::abs(j00 * j11 - j01 * j10));
}

}  // namespace

GrayImage render_marker(MarkerCode code, const std::array<Point2, 4>& corners, int width, int height,
                        int supersample) {
    if (supersample < 1) {
        throw InputError("render_marker: supersample must be positive");
    }
    const std::array<Point2, 4> unit = {Point2{0, 0}, Point2{6, 0}, Point2{6, 6}, Point2{0, 6}};
    const Homography image_to_marker = fiducial::estimate_homography(corners, unit);
    GrayImage img(width, height, 255.0f);
    const double step = 1.0 / supersample;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            for (int sy = 0; sy < supersample; ++sy) {
                for (int sx = 0; sx < supersample; ++sx) {
                    const Point2 q = image_to_marker.apply(
                        {x - 0.5 + (sx + 0.5) * step, y - 0.5 + (sy + 0.5) * step});
                    double v = 255.0;
                    if (q.x >= 0.0 && q.x < 6.0 && q.y >= 0.0 && q.y < 6.0) {
                        v = marker_cell_white(code, static_cast<int>(q.y), static_cast<int>(q.x)) ? 255.0 : 0.0;
                    }
                    sum += v;
                }
            }
            img.at(x, y) = static_cast<float>(sum / (supersample * supersample));
        }
    }
    return img;
}

Scene render_scene(const SceneParams& params) {
    params.validate();
    const auto& layout = params.layout;
    const int frame = static_cast<int>(
        std::ceil(params.frame_factor * layout.paper_side_mm * params.focal_px / params.distance_mm));
    const Homography to_image = camera_homography(params, frame);
    const Homography to_paper = to_image.inverse();
    const auto& dict = fiducial::default_dictionary();

    Scene scene;
    SceneTruth& truth = scene.truth;
    truth.paper_to_image = to_image;
    const double half = layout.paper_side_mm / 2.0;
    truth.px_per_mm_center = local_scale(to_image, {half, half});

    // Trichome positions in opening coordinates; density matches lambda over
    // the full opening, restricted to the guarded interior.
    const double side = layout.opening_side_mm;
    const Region interior{params.guard_mm, params.guard_mm, side - params.guard_mm, side - params.guard_mm};
    const double area_fraction = interior.width() * interior.height() / (side * side);
    if (params.render_trichomes) {
        truth.points_mm = enforce_min_separation(
            poisson_points(params.lambda * area_fraction, interior, derive_seed(params.seed, {1})), interior,
            params.min_separation_mm, derive_seed(params.seed, {4}));
    }
    if (truth.points_mm.size() >= 2) {
        truth.true_nnd_mm = density::mean_nnd(truth.points_mm);
    }
    const double rho = params.lambda / (side * side);
    truth.merge_warning = 0.5 / std::sqrt(rho) < 2.0 * params.blob_sigma_mm;

    const Point2 origin = layout.opening_origin_mm();
    std::array<std::array<Point2, 4>, 4> marker_mm{};
    for (int id = 0; id < 4; ++id) {
        marker_mm[static_cast<std::size_t>(id)] = layout.marker_corners_mm(id);
        for (int k = 0; k < 4; ++k) {
            truth.marker_corners_px[static_cast<std::size_t>(id)][static_cast<std::size_t>(k)] =
                to_image.apply(marker_mm[static_cast<std::size_t>(id)][static_cast<std::size_t>(k)]);
        }
    }
    {
        const Point2 a = to_image.apply(origin);
        const Point2 b = to_image.apply({origin.x + side, origin.y});
        const Point2 c = to_image.apply({origin.x + side, origin.y + side});
        const Point2 d = to_image.apply({origin.x, origin.y + side});
        auto len = [](Point2 p, Point2 q) { return std::hypot(p.x - q.x, p.y - q.y); };
        truth.opening_side_px = (len(a, b) + len(b, c) + len(c, d) + len(d, a)) / 4.0;
    }

    // Base layer: paper, opening, markers and surroundings.
    auto base_level = [&](Point2 p) -> double {
        if (p.x < 0.0 || p.y < 0.0 || p.x >= layout.paper_side_mm || p.y >= layout.paper_side_mm) {
            return params.background_level;
        }
        if (p.x >= origin.x && p.x < origin.x + side && p.y >= origin.y && p.y < origin.y + side) {
            return params.opening_level;
        }
        const double cell = layout.marker_side_mm / 6.0;
        for (int id = 0; id < 4; ++id) {
            const Point2 tl = marker_mm[static_cast<std::size_t>(id)][0];
            const double u = (p.x - tl.x) / cell;
            const double v = (p.y - tl.y) / cell;
            if (u >= 0.0 && u < 6.0 && v >= 0.0 && v < 6.0) {
                return marker_cell_white(dict.code(id), static_cast<int>(v), static_cast<int>(u)) ? params.paper_level
                                                                                                   : 0.0;
            }
        }
        return params.paper_level;
    };

    // Pixels whose four corners agree are uniform (every feature spans many
    // pixels); the rest are averaged over an 8x8 grid of subsamples.
    constexpr int kEdgeSamples = 8;
    const std::size_t stride = static_cast<std::size_t>(frame) + 1;
    std::vector<double> corner_level(stride * stride);
    for (int y = 0; y <= frame; ++y) {
        for (int x = 0; x <= frame; ++x) {
            corner_level[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x)] =
                base_level(to_paper.apply({x - 0.5, y - 0.5}));
        }
    }
    GrayImage img(frame, frame, 0.0f);
    for (int y = 0; y < frame; ++y) {
        for (int x = 0; x < frame; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x);
            const double v = corner_level[i];
            if (corner_level[i + 1] == v && corner_level[i + stride] == v && corner_level[i + stride + 1] == v) {
                img.at(x, y) = static_cast<float>(v);
                continue;
            }
            double sum = 0.0;
            for (int sy = 0; sy < kEdgeSamples; ++sy) {
                for (int sx = 0; sx < kEdgeSamples; ++sx) {
                    const double px = x - 0.5 + (sx + 0.5) / kEdgeSamples;
                    const double py = y - 0.5 + (sy + 0.5) / kEdgeSamples;
                    sum += base_level(to_paper.apply({px, py}));
                }
            }
            img.at(x, y) = static_cast<float>(sum / (kEdgeSamples * kEdgeSamples));
        }
    }

    // Trichome blobs: isotropic Gaussians at the local image scale,
    // integrated over each pixel.
    const double amplitude = params.blob_peak - params.opening_level;
    std::mt19937_64 size_rng(derive_seed(params.seed, {3}));
    std::normal_distribution<double> size_noise(0.0, 1.0);
    for (const auto& p : truth.points_mm) {
        const Point2 paper{origin.x + p.x, origin.y + p.y};
        const Point2 c = to_image.apply(paper);
        const double factor = std::clamp(1.0 + params.blob_size_cv * size_noise(size_rng), 0.5, 1.5);
        const double sigma = factor * params.blob_sigma_mm * local_scale(to_image, paper);
        const int r = static_cast<int>(std::ceil(4.0 * sigma)) + 1;
        const int cx = static_cast<int>(std::lround(c.x));
        const int cy = static_cast<int>(std::lround(c.y));
        std::vector<double> gx(static_cast<std::size_t>(2 * r + 1));
        for (int i = -r; i <= r; ++i) {
            gx[static_cast<std::size_t>(i + r)] = pixel_average_gauss(c.x, sigma, cx + i);
        }
        for (int j = -r; j <= r; ++j) {
            const int y = cy + j;
            if (y < 0 || y >= frame) {
                continue;
            }
            const double gy = pixel_average_gauss(c.y, sigma, y);
            for (int i = -r; i <= r; ++i) {
                const int x = cx + i;
                if (x < 0 || x >= frame) {
                    continue;
                }
                img.at(x, y) += static_cast<float>(amplitude * gx[static_cast<std::size_t>(i + r)] * gy);
            }
        }
    }

    // Illumination, noise and 8-bit quantization.
    std::mt19937_64 rng(derive_seed(params.seed, {2}));
    std::normal_distribution<double> noise(0.0, params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);
    const double c0 = (frame - 1) / 2.0;
    double total = 0.0;
    for (int y = 0; y < frame; ++y) {
        for (int x = 0; x < frame; ++x) {
            const double light = 1.0 + params.illum_gradient * (x - c0) / frame;
            double v = img.at(x, y) * light;
            if (params.noise_sigma > 0.0) {
                v += noise(rng);
            }
            v = std::clamp(std::round(v), 0.0, 255.0);
            img.at(x, y) = static_cast<float>(v);
            total += v;
        }
    }
    truth.mean_luminance = total / (static_cast<double>(frame) * frame);

    // Auto-exposure: ISO steps up with distance (less light reaches the
    // sensor from afar), exposure time compensates for scene brightness.
    static constexpr int kIsoLadder[] = {50, 100, 200, 400, 800};
    const double u = std::clamp((params.distance_mm - kDistanceMin) / (kDistanceMax - kDistanceMin), 0.0, 0.999);
    truth.iso = kIsoLadder[static_cast<int>(u * 5.0)];
    const double raw = 0.01 * (params.distance_mm / 100.0) * (128.0 / std::max(truth.mean_luminance, 1.0)) *
                       (100.0 / truth.iso);
    truth.exposure_time = std::max(1.0, std::round(raw * 1e6)) / 1e6;

    metadata::CaptureMeta meta;
    meta.exposure_time = truth.exposure_time;
    meta.iso = truth.iso;
    meta.width = frame;
    meta.height = frame;
    meta.byte_order = metadata::ByteOrder::little;
    scene.exif = metadata::encode_exif(meta);
    scene.image = std::move(img);
    return scene;
}

std::string truth_json_text(const SceneParams& params, const SceneTruth& truth) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["params"] = {
        {"lambda", params.lambda},           {"tilt_h_deg", params.tilt_h},
        {"tilt_v_deg", params.tilt_v},       {"distance_mm", params.distance_mm},
        {"illum_gradient", params.illum_gradient}, {"noise_sigma", params.noise_sigma},
        {"seed", params.seed},               {"focal_px", params.focal_px},
        {"blob_sigma_mm", params.blob_sigma_mm},   {"blob_size_cv", params.blob_size_cv},
        {"min_separation_mm", params.min_separation_mm},
    };
    j["layout"] = nlohmann::json::parse(params.layout.to_json_text());
    j["n_points"] = truth.points_mm.size();
    j["true_nnd_mm"] = truth.true_nnd_mm ? nlohmann::json(*truth.true_nnd_mm) : nlohmann::json(nullptr);
    j["merge_warning"] = truth.merge_warning;
    j["px_per_mm_center"] = truth.px_per_mm_center;
    j["opening_side_px"] = truth.opening_side_px;
    j["exposure_time_s"] = truth.exposure_time;
    j["iso"] = truth.iso;
    j["mean_luminance"] = truth.mean_luminance;
    j["homography"] = truth.paper_to_image.matrix();
    auto corners = nlohmann::json::array();
    for (const auto& marker : truth.marker_corners_px) {
        auto m = nlohmann::json::array();
        for (const auto& p : marker) {
            m.push_back({p.x, p.y});
        }
        corners.push_back(m);
    }
    j["marker_corners_px"] = corners;
    auto pts = nlohmann::json::array();
    for (const auto& p : truth.points_mm) {
        pts.push_back({p.x, p.y});
    }
    j["points_mm"] = pts;
    return j.dump(2) + "\n";
}

}  // namespace trichome::synth
