#include "trichome/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trichome/error.hpp"

namespace trichome {

GrayImage::GrayImage(int width, int height, float fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw InputError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                         std::to_string(height));
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw InputError("image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InputError("pixel count does not match image dimensions");
    }
}

double GrayImage::sample_bilinear(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = std::min(static_cast<int>(x), width_ - 1);
    const int y0 = std::min(static_cast<int>(y), height_ - 1);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

double GrayImage::mean() const {
    if (pixels_.empty()) {
        return 0.0;
    }
    const double sum = std::accumulate(pixels_.begin(), pixels_.end(), 0.0);
    return sum / static_cast<double>(pixels_.size());
}

void check_image(const GrayImage& img) {
    if (img.empty()) {
        throw InputError("image is empty");
    }
    for (float v : img.pixels()) {
        if (!std::isfinite(v) || v < 0.0f || v > 255.0f) {
            throw InputError("pixel value outside [0, 255]");
        }
    }
}

GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
    if (img.width() == width && img.height() == height) {
        return img;
    }
    GrayImage out(width, height);
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < width; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            out.at(x, y) = static_cast<float>(img.sample_bilinear(src_x, src_y));
        }
    }
    return out;
}

GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > img.width() || y0 + h > img.height()) {
        throw InputError("crop rectangle outside image");
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.at(x, y) = img.at(x0 + x, y0 + y);
        }
    }
    return out;
}

}  // namespace trichome
