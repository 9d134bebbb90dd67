#pragma once

#include <span>
#include <vector>

#include "trichome/contour.hpp"
#include "trichome/image.hpp"

namespace trichome::imaging {

/// Mean filter over a kw x kh window (offsets -k/2..k/2 inclusive) that
/// averages only the in-bounds pixels.
GrayImage box_mean(const GrayImage& img, int kw, int kh);

inline constexpr int kFlatFieldSize = 1000;
inline constexpr int kFlatFieldKernel = 50;

/// C = R * m / F on the image resized to size x size, where F is the box
/// mean and m the mean luminance of R. Pixels with F == 0 become m; the
/// result is clamped to [0, 255].
GrayImage flat_field_correct(const GrayImage& img, int size = kFlatFieldSize, int kernel = kFlatFieldKernel);

/// 3x3 square erosion / dilation of a {0, 255} image; outside is background.
GrayImage erode3x3(const GrayImage& binary);
GrayImage dilate3x3(const GrayImage& binary);
/// Erosion followed by dilation, one iteration each.
GrayImage morph_open(const GrayImage& binary);

/// Chessboard distance of each foreground pixel to the nearest background
/// pixel, counting everything outside the image as background.
std::vector<int> chebyshev_distance(const GrayImage& binary);

struct Region {
    int label = 0;
    std::vector<PixelPos> pixels;  // raster order
};

struct WatershedParams {
    int seed_merge_radius = 2;
};

/// Marker-controlled watershed of the foreground (value > 127). Seeds are
/// regional maxima of the chessboard distance, merged within
/// seed_merge_radius inside each connected component; flooding proceeds by
/// descending distance with first-in-first-out ties, 8-connected.
std::vector<Region> segment_watershed(const GrayImage& binary, const WatershedParams& params = {});

/// 8-connected components of the foreground, in raster order of first pixel.
std::vector<Region> connected_components(const GrayImage& binary);

struct ContourStats {
    Point2 centroid;
    double area = 0.0;         // pixel count
    double perimeter = 0.0;    // 8-chain length of the outer boundary
    double polygon_area = 0.0; // area enclosed by the boundary chain
    double circularity = 0.0;  // 4 pi polygon_area / perimeter^2
};

ContourStats contour_stats(const Region& region);

struct Fences {
    double area_lo = 0.0;
    double area_hi = 0.0;
    double perimeter_lo = 0.0;
    double perimeter_hi = 0.0;
    double circularity_lo = 0.0;
};

struct FilterParams {
    double min_size_mm = 0.010;  // equivalent diameter
    double fence_k = 1.5;
};

struct TrichomeSet {
    std::vector<Point2> points;  // accepted centroids, input order
    std::vector<ContourStats> accepted;
    int width = 0;
    int height = 0;
    int accepted_count = 0;
    int rejected_count = 0;
    int rejected_small = 0;      // below min size or degenerate, before fences
    bool small_sample = false;   // < 4 candidates: fences skipped
    Fences fences;
};

/// Tukey-fence filtering of region shape statistics over the image's own
/// population: area and perimeter two-sided, circularity lower fence only.
TrichomeSet extract_and_filter(std::span<const Region> regions, double mm_per_px, int width, int height,
                               const FilterParams& params = {});

}  // namespace trichome::imaging
