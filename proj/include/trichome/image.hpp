#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trichome {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Row-major luminance grid. Pixel centers sit at integer coordinates, so
/// pixel (x, y) covers [x - 0.5, x + 0.5] x [y - 0.5, y + 0.5].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, float fill = 0.0f);
    GrayImage(int width, int height, std::vector<float> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    float& at(int x, int y) { return pixels_[index(x, y)]; }
    float at(int x, int y) const { return pixels_[index(x, y)]; }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    /// Bilinear sample at continuous coordinates; points outside the grid
    /// clamp to the nearest edge pixel.
    double sample_bilinear(double x, double y) const;

    std::span<float> pixels() { return pixels_; }
    std::span<const float> pixels() const { return pixels_; }

    double mean() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> pixels_;
};

/// Validates the GrayImage invariants (positive dims, finite values in [0, 255]).
void check_image(const GrayImage& img);

/// Bilinear resize with pixel-center alignment. Identity when the size matches.
GrayImage resize_bilinear(const GrayImage& img, int width, int height);

/// Copy of the rectangle [x0, x0 + w) x [y0, y0 + h); must lie inside img.
GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h);

}  // namespace trichome
