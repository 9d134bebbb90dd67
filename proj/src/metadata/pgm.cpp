#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "trichome/metadata.hpp"

namespace trichome::metadata {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') {
                    ++pos_;
                }
            } else if (std::isspace(c) != 0) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long number(const char* what) {
        skip_space_and_comments();
        long v = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]) != 0) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000L) {
                throw InputError(std::string("pgm: ") + what + " too large");
            }
            ++pos_;
            ++digits;
        }
        if (digits == 0) {
            throw InputError(std::string("pgm: expected ") + what);
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space() {
        if (pos_ >= bytes_.size() || std::isspace(bytes_[pos_]) == 0) {
            throw InputError("pgm: missing whitespace before raster");
        }
        ++pos_;
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw InputError("pgm: unsupported format (expected P5 magic)");
    }
    HeaderReader h(bytes);
    h.advance(2);
    const long w = h.number("width");
    const long ht = h.number("height");
    const long maxval = h.number("maxval");
    if (w <= 0 || ht <= 0 || w > 100000 || ht > 100000) {
        throw InputError("pgm: invalid dimensions");
    }
    if (maxval <= 0 || maxval > 255) {
        throw InputError("pgm: unsupported format (maxval " + std::to_string(maxval) + ")");
    }
    h.single_space();
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(ht);
    if (bytes.size() - h.pos() < n) {
        throw InputError("pgm: truncated raster");
    }
    std::vector<float> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = bytes[h.pos() + i];
        if (v > maxval) {
            throw InputError("pgm: sample exceeds maxval");
        }
        px[i] = maxval == 255 ? static_cast<float>(v)
                              : static_cast<float>(std::round(static_cast<double>(v) * 255.0 / maxval));
    }
    return GrayImage(static_cast<int>(w), static_cast<int>(ht), std::move(px));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    check_image(img);
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.size());
    for (float v : img.pixels()) {
        out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 255.0))));
    }
    return out;
}

GrayImage load_pgm(const std::string& path) { return decode_pgm(read_file(path)); }

void save_pgm(const GrayImage& img, const std::string& path) { write_file(path, encode_pgm(img)); }

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("failed writing " + path);
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace trichome::metadata
