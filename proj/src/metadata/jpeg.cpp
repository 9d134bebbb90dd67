#include <cstring>

#include "trichome/metadata.hpp"

namespace trichome::metadata {

std::vector<std::uint8_t> scan_jpeg_app1(std::span<const std::uint8_t> file) {
    if (file.size() < 2 || file[0] != 0xFF || file[1] != 0xD8) {
        throw InputError("jpeg: missing SOI marker");
    }
    std::size_t pos = 2;
    while (pos < file.size()) {
        if (file[pos] != 0xFF) {
            throw InputError("jpeg: expected marker at offset " + std::to_string(pos));
        }
        while (pos < file.size() && file[pos] == 0xFF) {
            ++pos;  // fill bytes
        }
        if (pos >= file.size()) {
            break;
        }
        const std::uint8_t marker = file[pos++];
        if (marker == 0xD9 || marker == 0xDA) {
            break;  // end of image or start of entropy-coded data
        }
        if (marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
            continue;  // standalone markers carry no length
        }
        if (file.size() - pos < 2) {
            throw InputError("jpeg: truncated segment length at offset " + std::to_string(pos));
        }
        const std::size_t length = (static_cast<std::size_t>(file[pos]) << 8) | file[pos + 1];
        if (length < 2 || length > file.size() - pos) {
            throw InputError("jpeg: segment length " + std::to_string(length) + " at offset " + std::to_string(pos) +
                             " exceeds the file");
        }
        const std::size_t payload = pos + 2;
        const std::size_t payload_len = length - 2;
        static constexpr std::uint8_t kExif[6] = {'E', 'x', 'i', 'f', 0, 0};
        if (marker == 0xE1 && payload_len >= 6 && std::memcmp(file.data() + payload, kExif, 6) == 0) {
            return {file.begin() + static_cast<std::ptrdiff_t>(payload + 6),
                    file.begin() + static_cast<std::ptrdiff_t>(payload + payload_len)};
        }
        pos += length;
    }
    throw InputError("jpeg: no Exif segment");
}

}  // namespace trichome::metadata
