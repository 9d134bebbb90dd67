#include "trichome/imaging.hpp"

namespace trichome::imaging {

namespace {

bool is_on(const GrayImage& img, int x, int y) {
    return img.contains(x, y) && img.at(x, y) > 127.0f;
}

}  // namespace

GrayImage erode3x3(const GrayImage& binary) {
    GrayImage out(binary.width(), binary.height());
    for (int y = 0; y < binary.height(); ++y) {
        for (int x = 0; x < binary.width(); ++x) {
            bool all = true;
            for (int dy = -1; dy <= 1 && all; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!is_on(binary, x + dx, y + dy)) {
                        all = false;
                        break;
                    }
                }
            }
            out.at(x, y) = all ? 255.0f : 0.0f;
        }
    }
    return out;
}

GrayImage dilate3x3(const GrayImage& binary) {
    GrayImage out(binary.width(), binary.height());
    for (int y = 0; y < binary.height(); ++y) {
        for (int x = 0; x < binary.width(); ++x) {
            bool any = false;
            for (int dy = -1; dy <= 1 && !any; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (is_on(binary, x + dx, y + dy)) {
                        any = true;
                        break;
                    }
                }
            }
            out.at(x, y) = any ? 255.0f : 0.0f;
        }
    }
    return out;
}

GrayImage morph_open(const GrayImage& binary) {
    return dilate3x3(erode3x3(binary));
}

}  // namespace trichome::imaging
