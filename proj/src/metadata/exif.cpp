#include <cmath>
#include <cstring>
#include <sstream>

#include "trichome/metadata.hpp"

namespace trichome::metadata {

namespace {

std::string hex(std::uint32_t v, int width) {
    std::ostringstream os;
    os << "0x" << std::hex << std::uppercase;
    os.width(width);
    os.fill('0');
    os << v;
    return os.str();
}

std::string describe(const std::string& what, std::optional<std::uint16_t> tag, std::optional<std::size_t> offset) {
    std::string s = what;
    if (tag) {
        s += " (tag " + hex(*tag, 4) + ")";
    }
    if (offset) {
        s += " (offset " + std::to_string(*offset) + ")";
    }
    return s;
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> data, ByteOrder order) : data_(data), order_(order) {}

    std::size_t size() const { return data_.size(); }

    void need(std::size_t offset, std::size_t n, std::optional<std::uint16_t> tag = std::nullopt) const {
        if (offset > data_.size() || n > data_.size() - offset) {
            throw ExifError("offset out of bounds", tag, offset);
        }
    }

    std::uint16_t u16(std::size_t off) const {
        need(off, 2);
        const std::uint16_t a = data_[off];
        const std::uint16_t b = data_[off + 1];
        return order_ == ByteOrder::little ? static_cast<std::uint16_t>(a | (b << 8))
                                           : static_cast<std::uint16_t>((a << 8) | b);
    }

    std::uint32_t u32(std::size_t off) const {
        need(off, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint32_t byte = data_[off + static_cast<std::size_t>(i)];
            v |= order_ == ByteOrder::little ? byte << (8 * i) : byte << (8 * (3 - i));
        }
        return v;
    }

private:
    std::span<const std::uint8_t> data_;
    ByteOrder order_;
};

struct Entry {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_offset = 0;  // where the value bytes start
};

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case 1:  // BYTE
        case 2:  // ASCII
        case 6:  // SBYTE
        case 7:  // UNDEFINED
            return 1;
        case 3:  // SHORT
        case 8:  // SSHORT
            return 2;
        case 4:   // LONG
        case 9:   // SLONG
        case 11:  // FLOAT
            return 4;
        case 5:   // RATIONAL
        case 10:  // SRATIONAL
        case 12:  // DOUBLE
            return 8;
        default:
            return 0;
    }
}

std::vector<Entry> read_ifd(const Reader& r, std::size_t offset) {
    const std::uint16_t count = r.u16(offset);
    r.need(offset + 2, static_cast<std::size_t>(count) * 12);
    std::vector<Entry> entries;
    entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = offset + 2 + i * 12;
        Entry e;
        e.tag = r.u16(at);
        e.type = r.u16(at + 2);
        e.count = r.u32(at + 4);
        const std::size_t unit = type_size(e.type);
        // Unknown types are skipped; their payload is never touched.
        if (unit != 0) {
            const std::uint64_t bytes = static_cast<std::uint64_t>(unit) * e.count;
            e.value_offset = bytes <= 4 ? at + 8 : r.u32(at + 8);
        }
        entries.push_back(e);
    }
    return entries;
}

const Entry* find(const std::vector<Entry>& entries, std::uint16_t tag) {
    for (const auto& e : entries) {
        if (e.tag == tag) {
            return &e;
        }
    }
    return nullptr;
}

std::uint32_t read_integer(const Reader& r, const Entry& e) {
    if (e.count < 1) {
        throw ExifError("empty value", e.tag);
    }
    switch (e.type) {
        case 3:
            r.need(e.value_offset, 2, e.tag);
            return r.u16(e.value_offset);
        case 4:
            r.need(e.value_offset, 4, e.tag);
            return r.u32(e.value_offset);
        default:
            throw ExifError("unexpected type " + std::to_string(e.type), e.tag);
    }
}

double read_rational(const Reader& r, const Entry& e) {
    if (e.type != 5 || e.count < 1) {
        throw ExifError("expected an unsigned rational", e.tag);
    }
    r.need(e.value_offset, 8, e.tag);
    const std::uint32_t num = r.u32(e.value_offset);
    const std::uint32_t den = r.u32(e.value_offset + 4);
    if (den == 0) {
        throw ExifError("zero denominator", e.tag, e.value_offset);
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ExifError::ExifError(const std::string& what, std::optional<std::uint16_t> tag, std::optional<std::size_t> offset)
    : InputError("exif: " + describe(what, tag, offset)), tag_(tag), offset_(offset) {}

CaptureMeta parse_exif(std::span<const std::uint8_t> blob) {
    static constexpr std::uint8_t kExifPrefix[6] = {'E', 'x', 'i', 'f', 0, 0};
    if (blob.size() >= 6 && std::memcmp(blob.data(), kExifPrefix, 6) == 0) {
        blob = blob.subspan(6);
    }
    if (blob.size() < 8) {
        throw ExifError("truncated TIFF header", std::nullopt, blob.size());
    }
    ByteOrder order;
    if (blob[0] == 'I' && blob[1] == 'I') {
        order = ByteOrder::little;
    } else if (blob[0] == 'M' && blob[1] == 'M') {
        order = ByteOrder::big;
    } else {
        throw ExifError("bad byte-order mark", std::nullopt, std::size_t{0});
    }
    const Reader r(blob, order);
    if (r.u16(2) != 42) {
        throw ExifError("bad TIFF magic", std::nullopt, std::size_t{2});
    }
    const std::size_t ifd0 = r.u32(4);
    const auto entries0 = read_ifd(r, ifd0);

    std::vector<Entry> exif_entries;
    if (const Entry* ptr = find(entries0, tags::kExifIfd)) {
        const std::size_t sub = read_integer(r, *ptr);
        if (sub == ifd0) {
            throw ExifError("Exif IFD loops back to IFD0", tags::kExifIfd, sub);
        }
        exif_entries = read_ifd(r, sub);
    }

    auto lookup = [&](std::uint16_t tag) -> const Entry* {
        if (const Entry* e = find(exif_entries, tag)) {
            return e;
        }
        return find(entries0, tag);
    };

    CaptureMeta meta;
    meta.byte_order = order;
    const Entry* exposure = lookup(tags::kExposureTime);
    if (exposure == nullptr) {
        throw ExifError("missing ExposureTime", tags::kExposureTime);
    }
    meta.exposure_time = read_rational(r, *exposure);
    if (!(meta.exposure_time > 0.0) || !std::isfinite(meta.exposure_time)) {
        throw ExifError("ExposureTime must be positive", tags::kExposureTime);
    }
    const Entry* iso = lookup(tags::kIsoSpeed);
    if (iso == nullptr) {
        throw ExifError("missing ISOSpeedRatings", tags::kIsoSpeed);
    }
    meta.iso = static_cast<int>(read_integer(r, *iso));
    if (meta.iso <= 0) {
        throw ExifError("ISOSpeedRatings must be positive", tags::kIsoSpeed);
    }

    auto dimension = [&](std::uint16_t primary, std::uint16_t fallback, const char* name) {
        const Entry* e = find(exif_entries, primary);
        if (e == nullptr) {
            e = find(entries0, primary);
        }
        if (e == nullptr) {
            e = find(entries0, fallback);
        }
        if (e == nullptr) {
            throw ExifError(std::string("missing ") + name, primary);
        }
        const std::uint32_t v = read_integer(r, *e);
        if (v == 0 || v > 1'000'000) {
            throw ExifError(std::string(name) + " out of range", e->tag);
        }
        return static_cast<int>(v);
    };
    meta.width = dimension(tags::kPixelXDimension, tags::kImageWidth, "PixelXDimension");
    meta.height = dimension(tags::kPixelYDimension, tags::kImageLength, "PixelYDimension");
    return meta;
}

std::vector<std::uint8_t> encode_exif(const CaptureMeta& meta) {
    if (!(meta.exposure_time > 0.0) || meta.iso <= 0 || meta.width <= 0 || meta.height <= 0) {
        throw InputError("encode_exif: invalid capture metadata");
    }
    std::vector<std::uint8_t> out;
    const bool le = meta.byte_order == ByteOrder::little;
    auto put16 = [&](std::uint32_t v) {
        if (le) {
            out.push_back(static_cast<std::uint8_t>(v & 0xFF));
            out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        } else {
            out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
            out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        }
    };
    auto put32 = [&](std::uint32_t v) {
        if (le) {
            put16(v & 0xFFFF);
            put16(v >> 16);
        } else {
            put16(v >> 16);
            put16(v & 0xFFFF);
        }
    };
    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
        put16(tag);
        put16(type);
        put32(count);
        if (type == 3 && count == 1) {
            put16(value);
            put16(0);
        } else {
            put32(value);
        }
    };

    // Exposure time as 1/N when that is exact, else micro-second units.
    std::uint32_t num = 1;
    std::uint32_t den = 1;
    const double inv = 1.0 / meta.exposure_time;
    if (std::abs(inv - std::round(inv)) < 1e-9 && inv >= 1.0 && inv < 4.0e9) {
        den = static_cast<std::uint32_t>(std::round(inv));
    } else {
        num = static_cast<std::uint32_t>(std::llround(meta.exposure_time * 1e6));
        den = 1'000'000;
        if (num == 0) {
            throw InputError("encode_exif: exposure time below 1 microsecond");
        }
    }

    // Layout: header(8) | IFD0 (3 entries) | Exif IFD (4 entries) | rational
    const std::uint32_t ifd0 = 8;
    const std::uint32_t ifd0_size = 2 + 3 * 12 + 4;
    const std::uint32_t exif_ifd = ifd0 + ifd0_size;
    const std::uint32_t exif_size = 2 + 4 * 12 + 4;
    const std::uint32_t rational_at = exif_ifd + exif_size;

    out.push_back(le ? 'I' : 'M');
    out.push_back(le ? 'I' : 'M');
    put16(42);
    put32(ifd0);

    put16(3);
    entry(tags::kImageWidth, 4, 1, static_cast<std::uint32_t>(meta.width));
    entry(tags::kImageLength, 4, 1, static_cast<std::uint32_t>(meta.height));
    entry(tags::kExifIfd, 4, 1, exif_ifd);
    put32(0);

    put16(4);
    entry(tags::kExposureTime, 5, 1, rational_at);
    entry(tags::kIsoSpeed, 3, 1, static_cast<std::uint32_t>(meta.iso));
    entry(tags::kPixelXDimension, 4, 1, static_cast<std::uint32_t>(meta.width));
    entry(tags::kPixelYDimension, 4, 1, static_cast<std::uint32_t>(meta.height));
    put32(0);

    put32(num);
    put32(den);
    return out;
}

}  // namespace trichome::metadata
