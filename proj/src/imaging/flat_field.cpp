#include <algorithm>
#include <vector>

#include "trichome/error.hpp"
#include "trichome/imaging.hpp"

namespace trichome::imaging {

GrayImage box_mean(const GrayImage& img, int kw, int kh) {
    if (img.empty() || kw < 1 || kh < 1) {
        throw InputError("box_mean: empty image or kernel");
    }
    const int w = img.width();
    const int h = img.height();
    // (w + 1) x (h + 1) summed-area table
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h + 1), 0.0);
    const auto at = [&](int x, int y) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += img.at(x, y);
            at(x + 1, y + 1) = at(x + 1, y) + row;
        }
    }
    const int rx = kw / 2;
    const int ry = kh / 2;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - ry);
        const int y1 = std::min(h - 1, y + ry);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - rx);
            const int x1 = std::min(w - 1, x + rx);
            const double sum = at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
            const double count = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1);
            out.at(x, y) = static_cast<float>(sum / count);
        }
    }
    return out;
}

GrayImage flat_field_correct(const GrayImage& img, int size, int kernel) {
    if (img.empty()) {
        throw InputError("flat_field_correct: empty image");
    }
    const GrayImage resized = resize_bilinear(img, size, size);
    const GrayImage field = box_mean(resized, kernel, kernel);
    const double m = resized.mean();
    GrayImage out(size, size);
    auto r = resized.pixels();
    auto f = field.pixels();
    auto c = out.pixels();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = f[i] > 0.0f ? r[i] * m / f[i] : m;
        c[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

}  // namespace trichome::imaging
