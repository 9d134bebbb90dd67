#include <algorithm>
#include <array>
#include <cmath>

#include "trichome/error.hpp"
#include "trichome/fiducial.hpp"

namespace trichome::fiducial {

int luminance_bin(float value) {
    return std::clamp(static_cast<int>(std::lround(value)), 0, 255);
}

OtsuResult otsu_threshold(const GrayImage& img) {
    if (img.empty()) {
        throw InputError("otsu_threshold: empty image");
    }
    std::array<double, 256> hist{};
    for (float v : img.pixels()) {
        hist[static_cast<std::size_t>(luminance_bin(v))] += 1.0;
    }
    const double total = static_cast<double>(img.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) {
        sum_all += i * hist[static_cast<std::size_t>(i)];
    }

    int best_t = 0;
    double best_var = -1.0;
    double w0 = 0.0;
    double sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[static_cast<std::size_t>(t)];
        sum0 += t * hist[static_cast<std::size_t>(t)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) {
            continue;
        }
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double var = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    if (best_var < 0.0) {
        // single occupied bin
        best_t = luminance_bin(img.pixels()[0]);
    }

    OtsuResult out{best_t, GrayImage(img.width(), img.height())};
    auto src = img.pixels();
    auto dst = out.binary.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = luminance_bin(src[i]) > best_t ? 255.0f : 0.0f;
    }
    return out;
}

}  // namespace trichome::fiducial
