#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trichome/dataset.hpp"
#include "trichome/fiducial.hpp"
#include "trichome/image.hpp"
#include "trichome/stats.hpp"

namespace trichome::synth {

struct Region {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

/// N ~ Poisson(lambda), points i.i.d. uniform over the region.
std::vector<Point2> poisson_points(double lambda, const Region& region, std::uint64_t seed);

/// Sequential inhibition: each point closer than min_sep to an earlier kept
/// point is redrawn uniformly over the region until it clears. Count is kept.
std::vector<Point2> enforce_min_separation(std::vector<Point2> points, const Region& region, double min_sep,
                                          std::uint64_t seed);

inline constexpr double kDamageX = 500.0;

/// Keeps the points with x <= damage_x, in order.
std::vector<Point2> simulate_damage(std::span<const Point2> points, double damage_x = kDamageX);

// ---------------------------------------------------------------------------
// Scene rendering
// ---------------------------------------------------------------------------

/// Capture envelope of the hand-held acquisitions.
inline constexpr double kTiltHMin = -12.52;
inline constexpr double kTiltHMax = 10.62;
inline constexpr double kTiltVMin = -9.04;
inline constexpr double kTiltVMax = 8.13;
inline constexpr double kDistanceMin = 79.0;
inline constexpr double kDistanceMax = 218.0;

struct SceneParams {
    double lambda = 150.0;        // expected trichome count in the opening
    double tilt_h = 0.0;          // degrees, rotation about the vertical axis
    double tilt_v = 0.0;          // degrees, rotation about the horizontal axis
    double distance_mm = 150.0;   // camera to paper center
    double illum_gradient = 0.0;  // fractional luminance change across the frame
    double noise_sigma = 0.0;     // luminance std
    std::uint64_t seed = 0;
    fiducial::PaperLayout layout;

    double focal_px = 10000.0;
    double frame_factor = 1.4;       // frame side relative to the paper's image
    double blob_sigma_mm = 0.02;     // head diameter ~ 3 sigma
    double blob_size_cv = 0.1;       // per-trichome spread of sigma
    double min_separation_mm = 0.08;  // heads cannot overlap
    double blob_peak = 200.0;
    double opening_level = 30.0;
    double paper_level = 230.0;
    double background_level = 20.0;
    double guard_mm = 0.3;  // trichomes keep this clearance from the opening edge
    bool render_trichomes = true;

    void validate() const;
};

/// Draws tilt and distance uniformly over the capture envelope.
SceneParams sample_envelope_pose(std::uint64_t seed);

struct SceneTruth {
    std::vector<Point2> points_mm;  // opening coordinates, origin at its top-left
    std::optional<double> true_nnd_mm;
    std::array<std::array<Point2, 4>, 4> marker_corners_px{};  // by id, clockwise from top-left
    fiducial::Homography paper_to_image;  // paper mm -> image px
    double px_per_mm_center = 0.0;        // local scale at the paper center
    double opening_side_px = 0.0;         // mean opening side length in the image
    bool merge_warning = false;
    double mean_luminance = 0.0;
    double exposure_time = 0.0;
    int iso = 0;
};

struct Scene {
    GrayImage image;
    std::vector<std::uint8_t> exif;
    SceneTruth truth;
};

Scene render_scene(const SceneParams& params);

/// Homography of a pinhole camera at distance_mm from the paper center with
/// the given tilts, mapping paper mm to image pixels of a frame x frame image.
fiducial::Homography camera_homography(const SceneParams& params, int frame);

/// Marker `code` drawn into a white width x height image with its 6x6 cell
/// grid mapped onto the quad (clockwise from the canonical top-left).
GrayImage render_marker(fiducial::MarkerCode code, const std::array<Point2, 4>& corners, int width, int height,
                        int supersample = 4);

std::string truth_json_text(const SceneParams& params, const SceneTruth& truth);

// ---------------------------------------------------------------------------
// Point-loss robustness study
// ---------------------------------------------------------------------------

struct StudyParams {
    double lambda = 1000.0;
    int replicates = 200;
    std::uint64_t seed = 0;
    bool damage = true;
    double region_side = 1000.0;
    double damage_x = kDamageX;
};

struct ReplicateRow {
    int replicate = 0;
    std::size_t n_before = 0;
    std::size_t n_after = 0;
    double nnd_before = 0.0;
    double nnd_after = 0.0;
    double rate_count = 0.0;  // |n_after - n_before| / n_before
    double rate_nnd = 0.0;
};

struct StudyReport {
    StudyParams params;
    std::vector<ReplicateRow> rows;
    int dropped = 0;  // replicates with < 2 points before or after
    double median_rate_count = 0.0;
    double median_rate_nnd = 0.0;
    /// Signed-rank test on rate_count - rate_nnd; p = 1 when all zero.
    stats::TestResult two_sided;
    stats::TestResult greater;

    std::string to_csv() const;
    std::string summary_json() const;
};

/// Paired signed-rank comparison of two rate samples. Identical samples
/// give statistic 0 and p = 1 rather than an error.
stats::TestResult paired_rate_test(std::span<const double> a, std::span<const double> b, stats::Alternative alt);

StudyReport appendix_study(const StudyParams& params);

// ---------------------------------------------------------------------------
// Tabular datasets
// ---------------------------------------------------------------------------

struct TabularParams {
    int plants = 4;
    int leaves_per_plant = 6;
    int leaflets_per_leaf = 3;
    int images_per_leaflet = 8;
    double nitrate_lo = 1200.0;
    double nitrate_hi = 2400.0;
    double nnd_base_mm = 0.45;         // at nitrate_lo
    double nnd_per_ppm = -1.0e-4;      // density rises with nitrate
    double nnd_noise_mm = 0.02;
    double resolution_effect = 0.0;    // extra nnd slope per megapixel
    bool with_fertilizer_level = true;
    std::uint64_t seed = 0;
};

/// Leaf-structured dataset with per-leaf nitrate, AE-coupled exposure/ISO
/// and resolution from a camera-distance draw.
ml::Dataset make_tabular_dataset(const TabularParams& params);

}  // namespace trichome::synth
