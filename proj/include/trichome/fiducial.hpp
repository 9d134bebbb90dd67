#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trichome/image.hpp"

namespace trichome::fiducial {

// ---------------------------------------------------------------------------
// Global binarization
// ---------------------------------------------------------------------------

/// Histogram bin of a luminance value (rounded, clamped to 0..255).
int luminance_bin(float value);

struct OtsuResult {
    int threshold = 0;
    GrayImage binary;  // 255 where bin(pixel) > threshold, else 0
};

/// Otsu's method over the 256-bin histogram. The smallest maximizing
/// threshold wins ties. A constant image yields threshold = its value and
/// an all-zero binary.
OtsuResult otsu_threshold(const GrayImage& img);

// ---------------------------------------------------------------------------
// Marker dictionary
// ---------------------------------------------------------------------------

/// 4x4 payload, row-major, most significant bit = top-left cell. A set bit
/// is a white cell.
using MarkerCode = std::uint16_t;

/// Payload of the pattern rotated 90 degrees clockwise.
MarkerCode rotate_code(MarkerCode code);
int hamming(MarkerCode a, MarkerCode b);
/// Minimum Hamming distance between a and any rotation of b.
int rotational_distance(MarkerCode a, MarkerCode b);
/// Minimum distance between code and its own non-trivial rotations.
int self_rotational_distance(MarkerCode code);

struct CodeMatch {
    int id = -1;
    int rotation = 0;  // observed == rotate_code^rotation(code[id])
    int distance = 0;
};

class MarkerDictionary {
public:
    static constexpr int kSize = 250;
    static constexpr int kMinDistance = 4;

    explicit MarkerDictionary(std::vector<MarkerCode> codes);

    const std::vector<MarkerCode>& codes() const { return codes_; }
    MarkerCode code(int id) const { return codes_.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(codes_.size()); }

    /// Best match within max_correction bit errors, if unique.
    std::optional<CodeMatch> match(MarkerCode observed, int max_correction = 1) const;

    friend bool operator==(const MarkerDictionary&, const MarkerDictionary&) = default;

private:
    std::vector<MarkerCode> codes_;
};

/// Deterministic 250-code dictionary drawn from the rotation-invariant
/// [16, 11, 4] Reed-Muller code. Throws Error if the bounded search cannot
/// fill the dictionary.
MarkerDictionary generate_dictionary(std::uint64_t seed);

/// The dictionary every tool in this project agrees on.
const MarkerDictionary& default_dictionary();

// ---------------------------------------------------------------------------
// Homography
// ---------------------------------------------------------------------------

class Homography {
public:
    Homography();
    explicit Homography(const std::array<double, 9>& m);  // normalized so m[8] == 1

    const std::array<double, 9>& matrix() const { return m_; }
    double operator()(int r, int c) const { return m_[static_cast<std::size_t>(r * 3 + c)]; }

    Point2 apply(Point2 p) const;
    Homography inverse() const;
    Homography then(const Homography& next) const;  // next * this
    double determinant() const;

private:
    std::array<double, 9> m_;
};

/// Normalized DLT over >= 4 correspondences (least squares beyond 4).
/// Throws InputError on degenerate geometry.
Homography estimate_homography(std::span<const Point2> src, std::span<const Point2> dst);

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

struct MarkerDetection {
    int id = -1;
    /// Clockwise from the marker's canonical top-left corner.
    std::array<Point2, 4> corners;
};

struct DetectorParams {
    int min_component_area = 64;
    double polygon_tolerance = 0.02;  // fraction of the contour perimeter
    double min_side_px = 8.0;
    int max_correction_bits = 1;
};

/// Finds and decodes markers in a {0, 255} image. Markers are 6x6 cell
/// grids: a black one-cell border around the 4x4 payload.
std::vector<MarkerDetection> detect_markers(const GrayImage& binary, const MarkerDictionary& dict,
                                            const DetectorParams& params = {});

/// Re-locates each marker side on the grayscale image at the mid-level
/// crossing of intensity profiles taken across it, then moves every corner to
/// the intersection of its two refitted sides. Corners that would move more
/// than max_shift_px are left alone.
void refine_corners_gray(const GrayImage& gray, std::span<MarkerDetection> markers, double max_shift_px = 2.0);

// ---------------------------------------------------------------------------
// Measurement paper
// ---------------------------------------------------------------------------

/// Physical layout of the measurement paper. Paper coordinates are in mm
/// with the origin at the paper's top-left corner, x right, y down. Marker
/// ids 0..3 sit at the top-left, top-right, bottom-right and bottom-left
/// corners, each inset by marker_margin_mm and upright.
struct PaperLayout {
    double marker_side_mm = 3.5;
    double paper_side_mm = 21.0;
    double opening_side_mm = 12.0;
    double marker_margin_mm = 0.5;

    void validate() const;
    /// Corners of marker id in paper mm, clockwise from its top-left.
    std::array<Point2, 4> marker_corners_mm(int id) const;
    /// Top-left corner of the centered opening.
    Point2 opening_origin_mm() const;

    static PaperLayout from_json_text(const std::string& text);
    static PaperLayout load(const std::string& path);
    std::string to_json_text() const;
};

struct Rectified {
    GrayImage image;              // canvas x canvas view of the paper
    double opening_px = 0.0;      // opening side length on the canvas
    double px_per_mm = 0.0;       // canvas scale
    Homography paper_to_image;    // paper mm -> source pixels
    double reprojection_rms = 0.0;  // marker-corner fit residual, source px
};

inline constexpr int kCanvasSize = 1000;

/// Warps the paper to a square canvas using all 16 marker corners.
/// Throws DetectionError naming the first missing or duplicated id.
Rectified rectify(const GrayImage& img, std::span<const MarkerDetection> markers, const PaperLayout& layout,
                  int canvas = kCanvasSize);

}  // namespace trichome::fiducial
