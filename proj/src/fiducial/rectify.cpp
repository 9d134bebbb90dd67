#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trichome/error.hpp"
#include "trichome/fiducial.hpp"

namespace trichome::fiducial {

void PaperLayout::validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(marker_side_mm) || !positive(paper_side_mm) || !positive(opening_side_mm) ||
        !std::isfinite(marker_margin_mm) || marker_margin_mm < 0.0) {
        throw InputError("paper layout: dimensions must be positive");
    }
    if (opening_side_mm >= paper_side_mm) {
        throw InputError("paper layout: opening does not fit on the paper");
    }
    // The marker squares must stay clear of the opening along the diagonal.
    const double gap = (paper_side_mm - opening_side_mm) / 2.0;
    if (marker_margin_mm + marker_side_mm >= gap) {
        throw InputError("paper layout: markers overlap the opening");
    }
}

std::array<Point2, 4> PaperLayout::marker_corners_mm(int id) const {
    const double lo = marker_margin_mm;
    const double hi = paper_side_mm - marker_margin_mm - marker_side_mm;
    double x0 = 0.0;
    double y0 = 0.0;
    switch (id) {
        case 0: x0 = lo; y0 = lo; break;
        case 1: x0 = hi; y0 = lo; break;
        case 2: x0 = hi; y0 = hi; break;
        case 3: x0 = lo; y0 = hi; break;
        default: throw InputError("paper layout: marker id " + std::to_string(id) + " is not a corner marker");
    }
    const double s = marker_side_mm;
    return {Point2{x0, y0}, Point2{x0 + s, y0}, Point2{x0 + s, y0 + s}, Point2{x0, y0 + s}};
}

Point2 PaperLayout::opening_origin_mm() const {
    const double o = (paper_side_mm - opening_side_mm) / 2.0;
    return {o, o};
}

PaperLayout PaperLayout::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("paper layout: ") + e.what());
    }
    PaperLayout layout;
    const auto read = [&](const char* key, double& field) {
        if (j.contains(key)) {
            if (!j[key].is_number()) {
                throw InputError(std::string("paper layout: ") + key + " must be a number");
            }
            field = j[key].get<double>();
        }
    };
    read("marker_side_mm", layout.marker_side_mm);
    read("paper_side_mm", layout.paper_side_mm);
    read("opening_side_mm", layout.opening_side_mm);
    read("marker_margin_mm", layout.marker_margin_mm);
    layout.validate();
    return layout;
}

PaperLayout PaperLayout::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open layout file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string PaperLayout::to_json_text() const {
    nlohmann::ordered_json j;
    j["marker_side_mm"] = marker_side_mm;
    j["paper_side_mm"] = paper_side_mm;
    j["opening_side_mm"] = opening_side_mm;
    j["marker_margin_mm"] = marker_margin_mm;
    return j.dump(2);
}

Rectified rectify(const GrayImage& img, std::span<const MarkerDetection> markers, const PaperLayout& layout,
                  int canvas) {
    layout.validate();
    if (canvas < 1) {
        throw InputError("rectify: canvas must be positive");
    }
    std::array<const MarkerDetection*, 4> by_id{};
    for (const auto& m : markers) {
        if (m.id < 0 || m.id > 3) {
            continue;
        }
        if (by_id[static_cast<std::size_t>(m.id)] != nullptr) {
            throw DetectionError("marker " + std::to_string(m.id) + " detected more than once");
        }
        by_id[static_cast<std::size_t>(m.id)] = &m;
    }
    std::vector<Point2> paper_pts;
    std::vector<Point2> image_pts;
    for (int id = 0; id < 4; ++id) {
        const MarkerDetection* m = by_id[static_cast<std::size_t>(id)];
        if (m == nullptr) {
            throw DetectionError("marker " + std::to_string(id) + " not found");
        }
        const auto mm = layout.marker_corners_mm(id);
        for (std::size_t k = 0; k < 4; ++k) {
            paper_pts.push_back(mm[k]);
            image_pts.push_back(m->corners[k]);
        }
    }

    Rectified out;
    out.paper_to_image = estimate_homography(paper_pts, image_pts);
    double sq = 0.0;
    for (std::size_t i = 0; i < paper_pts.size(); ++i) {
        const Point2 p = out.paper_to_image.apply(paper_pts[i]);
        sq += (p.x - image_pts[i].x) * (p.x - image_pts[i].x) + (p.y - image_pts[i].y) * (p.y - image_pts[i].y);
    }
    out.reprojection_rms = std::sqrt(sq / static_cast<double>(paper_pts.size()));
    out.px_per_mm = canvas / layout.paper_side_mm;
    out.opening_px = layout.opening_side_mm * out.px_per_mm;

    out.image = GrayImage(canvas, canvas);
    const double mm_per_px = 1.0 / out.px_per_mm;
    for (int v = 0; v < canvas; ++v) {
        for (int u = 0; u < canvas; ++u) {
            const Point2 src = out.paper_to_image.apply({(u + 0.5) * mm_per_px, (v + 0.5) * mm_per_px});
            out.image.at(u, v) = static_cast<float>(img.sample_bilinear(src.x, src.y));
        }
    }
    return out;
}

}  // namespace trichome::fiducial
