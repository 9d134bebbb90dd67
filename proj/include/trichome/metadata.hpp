#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trichome/error.hpp"
#include "trichome/image.hpp"

namespace trichome::metadata {

enum class ByteOrder { little, big };

struct CaptureMeta {
    double exposure_time = 0.0;  // s
    int iso = 0;
    int width = 0;
    int height = 0;
    ByteOrder byte_order = ByteOrder::little;

    double resolution() const { return static_cast<double>(width) * static_cast<double>(height); }

    /// Byte order describes the encoding, not the capture, so it is not
    /// part of equality.
    friend bool operator==(const CaptureMeta& a, const CaptureMeta& b) {
        return a.exposure_time == b.exposure_time && a.iso == b.iso && a.width == b.width && a.height == b.height;
    }
};

/// Malformed or incomplete EXIF data. tag/offset identify the culprit when
/// known.
class ExifError : public InputError {
public:
    ExifError(const std::string& what, std::optional<std::uint16_t> tag = std::nullopt,
              std::optional<std::size_t> offset = std::nullopt);

    std::optional<std::uint16_t> tag() const { return tag_; }
    std::optional<std::size_t> offset() const { return offset_; }

private:
    std::optional<std::uint16_t> tag_;
    std::optional<std::size_t> offset_;
};

namespace tags {
inline constexpr std::uint16_t kImageWidth = 0x0100;
inline constexpr std::uint16_t kImageLength = 0x0101;
inline constexpr std::uint16_t kExposureTime = 0x829A;
inline constexpr std::uint16_t kExifIfd = 0x8769;
inline constexpr std::uint16_t kIsoSpeed = 0x8827;
inline constexpr std::uint16_t kPixelXDimension = 0xA002;
inline constexpr std::uint16_t kPixelYDimension = 0xA003;
}  // namespace tags

/// Parses a TIFF-structured EXIF blob, optionally prefixed by "Exif\0\0".
/// Reads IFD0 and the Exif sub-IFD; dimensions fall back to IFD0's
/// ImageWidth/ImageLength when the Exif pixel dimensions are absent.
CaptureMeta parse_exif(std::span<const std::uint8_t> blob);

/// Serializes meta as a minimal TIFF blob (IFD0 + Exif sub-IFD).
std::vector<std::uint8_t> encode_exif(const CaptureMeta& meta);

/// Payload of the first APP1 "Exif\0\0" segment with the prefix stripped.
std::vector<std::uint8_t> scan_jpeg_app1(std::span<const std::uint8_t> file);

/// Binary PGM (P5, maxval <= 255). Values are rescaled to 0..255 when the
/// file's maxval is lower.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::string& path, const std::string& text);

/// Sidecar JSON with exposure_time_s, iso, width, height.
CaptureMeta parse_meta_json(const std::string& text);
std::string meta_json_text(const CaptureMeta& meta);

struct Capture {
    GrayImage image;
    std::optional<CaptureMeta> meta;
    std::string meta_source;  // "exif", "jpeg", "json" or "none"
};

/// Loads `<stem>.pgm` plus capture metadata from `<stem>.exif` (raw TIFF
/// blob), `<stem>.jpg`/`<stem>.jpeg` (APP1 scan) or `<stem>.meta.json`, in
/// that order of precedence.
Capture load_capture(const std::string& image_path);

}  // namespace trichome::metadata
