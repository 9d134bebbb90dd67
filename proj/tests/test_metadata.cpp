#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "trichome/metadata.hpp"

using namespace trichome;
using namespace trichome::metadata;

namespace {

// Writes TIFF structures by hand from the layout rules, independent of encode_exif.
class TiffWriter {
public:
    explicit TiffWriter(bool little) : little_(little) {}

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        if (little_) {
            u8(v & 0xFF);
            u8(v >> 8);
        } else {
            u8(v >> 8);
            u8(v & 0xFF);
        }
    }
    void u32(std::uint32_t v) {
        if (little_) {
            u16(v & 0xFFFF);
            u16(v >> 16);
        } else {
            u16(v >> 16);
            u16(v & 0xFFFF);
        }
    }
    // Entry whose SHORT value sits left-justified in the 4-byte field.
    void short_entry(std::uint16_t tag, std::uint16_t v) {
        u16(tag);
        u16(3);
        u32(1);
        u16(v);
        u16(0);
    }
    void long_entry(std::uint16_t tag, std::uint32_t v) {
        u16(tag);
        u16(4);
        u32(1);
        u32(v);
    }
    void rational_entry(std::uint16_t tag, std::uint32_t offset) {
        u16(tag);
        u16(5);
        u32(1);
        u32(offset);
    }

    std::vector<std::uint8_t> bytes;

private:
    bool little_;
};

// IFD0 at 8: width, length, Exif pointer. Exif IFD at 50: exposure, ISO,
// PixelX, PixelY. Rational at 104.
std::vector<std::uint8_t> crafted_blob(bool little, std::uint32_t num = 1, std::uint32_t den = 50) {
    TiffWriter w(little);
    w.u8(little ? 'I' : 'M');
    w.u8(little ? 'I' : 'M');
    w.u16(42);
    w.u32(8);
    w.u16(3);
    w.long_entry(tags::kImageWidth, 640);
    w.long_entry(tags::kImageLength, 480);
    w.long_entry(tags::kExifIfd, 50);
    w.u32(0);
    EXPECT_EQ(w.bytes.size(), 50u);
    w.u16(4);
    w.rational_entry(tags::kExposureTime, 104);
    w.short_entry(tags::kIsoSpeed, 200);
    w.long_entry(tags::kPixelXDimension, 4032);
    w.short_entry(tags::kPixelYDimension, 3024);
    w.u32(0);
    EXPECT_EQ(w.bytes.size(), 104u);
    w.u32(num);
    w.u32(den);
    return w.bytes;
}

std::vector<std::uint8_t> jpeg_with(const std::vector<std::vector<std::uint8_t>>& segments) {
    std::vector<std::uint8_t> f{0xFF, 0xD8};
    for (const auto& s : segments) {
        f.insert(f.end(), s.begin(), s.end());
    }
    f.insert(f.end(), {0xFF, 0xDA, 0x00, 0x02, 0x12, 0x34, 0xFF, 0xD9});
    return f;
}

std::vector<std::uint8_t> segment(std::uint8_t marker, const std::vector<std::uint8_t>& payload) {
    const std::size_t len = payload.size() + 2;
    std::vector<std::uint8_t> s{0xFF, marker, static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len & 0xFF)};
    s.insert(s.end(), payload.begin(), payload.end());
    return s;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(ParseExif, LittleEndianFixture) {
    const auto m = parse_exif(crafted_blob(true));
    EXPECT_DOUBLE_EQ(m.exposure_time, 0.02);
    EXPECT_EQ(m.iso, 200);
    EXPECT_EQ(m.width, 4032);
    EXPECT_EQ(m.height, 3024);
    EXPECT_EQ(m.byte_order, ByteOrder::little);
    EXPECT_DOUBLE_EQ(m.resolution(), 4032.0 * 3024.0);
}

TEST(ParseExif, BigEndianFixtureParsesToTheSameMeta) {
    const auto le = parse_exif(crafted_blob(true));
    const auto be = parse_exif(crafted_blob(false));
    EXPECT_EQ(be.byte_order, ByteOrder::big);
    EXPECT_EQ(le, be);
}

TEST(ParseExif, AcceptsTheApp1Prefix) {
    auto blob = bytes_of(std::string("Exif\0\0", 6));
    const auto tiff = crafted_blob(false);
    blob.insert(blob.end(), tiff.begin(), tiff.end());
    EXPECT_EQ(parse_exif(blob), parse_exif(tiff));
}

TEST(ParseExif, TruncatedMidIfdIsOutOfBounds) {
    auto blob = crafted_blob(true);
    blob.resize(60);
    try {
        parse_exif(blob);
        FAIL() << "expected an exif error";
    } catch (const ExifError& e) {
        EXPECT_NE(std::string(e.what()).find("offset out of bounds"), std::string::npos) << e.what();
    }
}

TEST(ParseExif, MissingTagIsNamed) {
    auto blob = crafted_blob(true);
    // Rename the ISO entry's tag so the required field is absent.
    blob[50 + 2 + 12] = 0x01;
    blob[50 + 2 + 13] = 0x01;
    try {
        parse_exif(blob);
        FAIL() << "expected an exif error";
    } catch (const ExifError& e) {
        ASSERT_TRUE(e.tag().has_value());
        EXPECT_EQ(*e.tag(), tags::kIsoSpeed);
    }
}

TEST(ParseExif, BadHeadersAndZeroDenominatorAreRejected) {
    EXPECT_THROW(parse_exif(bytes_of("XX*")), ExifError);
    auto blob = crafted_blob(true);
    blob[2] = 43;
    EXPECT_THROW(parse_exif(blob), ExifError);
    EXPECT_THROW(parse_exif(crafted_blob(true, 1, 0)), ExifError);
}

TEST(ParseExif, EncodeRoundTripsInBothByteOrders) {
    for (auto order : {ByteOrder::little, ByteOrder::big}) {
        const CaptureMeta m{0.004, 400, 3000, 2000, order};
        const auto back = parse_exif(encode_exif(m));
        EXPECT_EQ(back, m);
        EXPECT_EQ(back.byte_order, order);
    }
}

TEST(ParseExif, MutationFuzzReturnsValueOrError) {
    const auto base = crafted_blob(true);
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_int_distribution<int> byte(0, 255);
    int parsed = 0;
    int rejected = 0;
    for (int i = 0; i < 100000; ++i) {
        auto blob = base;
        std::uniform_int_distribution<std::size_t> pos(0, blob.size() - 1);
        switch (kind(rng)) {
            case 0:
                for (int k = 0; k < 1 + i % 4; ++k) {
                    blob[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
                }
                break;
            case 1:
                blob.resize(pos(rng));
                break;
            case 2:
                blob[pos(rng)] ^= static_cast<std::uint8_t>(1u << (i % 8));
                break;
            default:
                blob.insert(blob.begin() + static_cast<std::ptrdiff_t>(pos(rng)), static_cast<std::uint8_t>(byte(rng)));
                break;
        }
        blob.shrink_to_fit();
        try {
            parse_exif(blob);
            ++parsed;
        } catch (const InputError&) {
            ++rejected;
        }
    }
    EXPECT_EQ(parsed + rejected, 100000);
    EXPECT_GT(parsed, 0);
    EXPECT_GT(rejected, 0);
}

TEST(ScanJpeg, ReturnsTheExifPayload) {
    const auto tiff = crafted_blob(true);
    auto payload = bytes_of(std::string("Exif\0\0", 6));
    payload.insert(payload.end(), tiff.begin(), tiff.end());
    const auto file = jpeg_with({segment(0xE0, bytes_of("JFIF")), segment(0xE1, payload)});
    EXPECT_EQ(scan_jpeg_app1(file), tiff);
}

TEST(ScanJpeg, App0OnlyHasNoExif) {
    try {
        scan_jpeg_app1(jpeg_with({segment(0xE0, bytes_of("JFIF"))}));
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("no Exif segment"), std::string::npos);
    }
}

TEST(ScanJpeg, LengthPastEndIsAnError) {
    auto file = jpeg_with({segment(0xE1, bytes_of("Exif"))});
    file.resize(8);
    file[4] = 0x7F;
    EXPECT_THROW(scan_jpeg_app1(file), InputError);
    EXPECT_THROW(scan_jpeg_app1(bytes_of("not a jpeg")), InputError);
}

TEST(Pgm, SmallImageRoundTripsByteExact) {
    const GrayImage img(2, 2, std::vector<float>{0, 128, 200, 255});
    const auto bytes = encode_pgm(img);
    EXPECT_EQ(decode_pgm(bytes), img);
    EXPECT_EQ(encode_pgm(decode_pgm(bytes)), bytes);
    const auto path = (std::filesystem::temp_directory_path() / "trichome_pgm_roundtrip.pgm").string();
    save_pgm(img, path);
    EXPECT_EQ(load_pgm(path), img);
    EXPECT_EQ(read_file(path), bytes);
    std::filesystem::remove(path);
}

TEST(Pgm, SixteenBitIsUnsupported) {
    auto bytes = bytes_of("P5\n1 1\n65535\n");
    bytes.push_back(0);
    bytes.push_back(0);
    try {
        decode_pgm(bytes);
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("unsupported format"), std::string::npos);
    }
    EXPECT_THROW(decode_pgm(bytes_of("P2\n1 1\n255\n0")), InputError);
}

TEST(Pgm, CommentsInHeaderAreTolerated) {
    auto bytes = bytes_of("P5\n# made by hand\n2 # width\n1\n# max\n255\n");
    bytes.push_back(10);
    bytes.push_back(250);
    const auto img = decode_pgm(bytes);
    EXPECT_EQ(img.width(), 2);
    EXPECT_EQ(img.at(0, 0), 10.0f);
    EXPECT_EQ(img.at(1, 0), 250.0f);
}

TEST(Pgm, TruncatedRasterIsAnError) {
    auto bytes = bytes_of("P5\n3 3\n255\n");
    bytes.resize(bytes.size() + 5, 1);
    EXPECT_THROW(decode_pgm(bytes), InputError);
}

TEST(MetaJson, RoundTripsAndRejectsMissingFields) {
    const CaptureMeta m{0.01, 100, 1920, 1080, ByteOrder::little};
    EXPECT_EQ(parse_meta_json(meta_json_text(m)), m);
    EXPECT_THROW(parse_meta_json(R"({"iso": 100})"), InputError);
    EXPECT_THROW(parse_meta_json("not json"), InputError);
}

TEST(LoadCapture, ExifSidecarTakesPrecedenceOverJson) {
    const auto dir = std::filesystem::temp_directory_path() / "trichome_capture_test";
    std::filesystem::create_directories(dir);
    const auto stem = (dir / "scene").string();
    save_pgm(GrayImage(3, 2, 50.0f), stem + ".pgm");
    write_text_file(stem + ".meta.json", meta_json_text({0.5, 800, 3, 2, ByteOrder::little}));
    auto c = load_capture(stem + ".pgm");
    EXPECT_EQ(c.meta_source, "json");
    EXPECT_EQ(c.meta->iso, 800);
    write_file(stem + ".exif", crafted_blob(false));
    c = load_capture(stem + ".pgm");
    EXPECT_EQ(c.meta_source, "exif");
    EXPECT_EQ(c.meta->iso, 200);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(load_capture(stem + ".pgm"), InputError);
}
