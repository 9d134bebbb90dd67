#include <filesystem>

#include "json.hpp"
#include "trichome/metadata.hpp"

namespace trichome::metadata {

namespace fs = std::filesystem;

CaptureMeta parse_meta_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("meta json: ") + e.what());
    }
    auto field = [&](const char* key) -> const nlohmann::json& {
        if (!j.is_object() || !j.contains(key) || !j[key].is_number()) {
            throw InputError(std::string("meta json: missing numeric field ") + key);
        }
        return j[key];
    };
    CaptureMeta m;
    m.exposure_time = field("exposure_time_s").get<double>();
    m.iso = field("iso").get<int>();
    m.width = field("width").get<int>();
    m.height = field("height").get<int>();
    if (!(m.exposure_time > 0.0) || m.iso <= 0 || m.width <= 0 || m.height <= 0) {
        throw InputError("meta json: values must be positive");
    }
    return m;
}

std::string meta_json_text(const CaptureMeta& meta) {
    nlohmann::ordered_json j;
    j["exposure_time_s"] = meta.exposure_time;
    j["iso"] = meta.iso;
    j["width"] = meta.width;
    j["height"] = meta.height;
    return j.dump(2) + "\n";
}

Capture load_capture(const std::string& image_path) {
    Capture c;
    c.image = load_pgm(image_path);
    const fs::path p(image_path);
    const fs::path stem = p.parent_path() / p.stem();
    auto sibling = [&](const char* ext) { return fs::path(stem.string() + ext); };

    if (fs::exists(sibling(".exif"))) {
        c.meta = parse_exif(read_file(sibling(".exif").string()));
        c.meta_source = "exif";
        return c;
    }
    for (const char* ext : {".jpg", ".jpeg", ".JPG"}) {
        if (fs::exists(sibling(ext))) {
            const auto file = read_file(sibling(ext).string());
            c.meta = parse_exif(scan_jpeg_app1(file));
            c.meta_source = "jpeg";
            return c;
        }
    }
    if (fs::exists(sibling(".meta.json"))) {
        const auto bytes = read_file(sibling(".meta.json").string());
        c.meta = parse_meta_json(std::string(bytes.begin(), bytes.end()));
        c.meta_source = "json";
        return c;
    }
    c.meta_source = "none";
    return c;
}

}  // namespace trichome::metadata
