#include <cmath>
#include <filesystem>

#include "trichome/error.hpp"
#include "trichome/metadata.hpp"
#include "trichome/pipeline.hpp"

namespace trichome {

namespace {

void dump(const AnalysisOptions& o, const char* name, const GrayImage& img) {
    if (o.dump_dir) {
        std::filesystem::create_directories(*o.dump_dir);
        metadata::save_pgm(img, (std::filesystem::path(*o.dump_dir) / name).string());
    }
}

}  // namespace

AnalysisResult analyze_image(const GrayImage& img, const AnalysisOptions& options) {
    check_image(img);
    options.layout.validate();
    if (!(options.crop_inset_mm >= 0.0) || 2.0 * options.crop_inset_mm >= options.layout.opening_side_mm) {
        throw InputError("analyze: invalid crop inset");
    }
    AnalysisResult out;

    const auto source = fiducial::otsu_threshold(img);
    out.source_threshold = source.threshold;
    dump(options, "01_binary.pgm", source.binary);
    out.markers = fiducial::detect_markers(source.binary, fiducial::default_dictionary());
    fiducial::refine_corners_gray(img, out.markers);
    const auto rect = fiducial::rectify(img, out.markers, options.layout);
    out.canvas_opening_px = rect.opening_px;
    out.reprojection_rms = rect.reprojection_rms;
    dump(options, "02_rectified.pgm", rect.image);

    // Integer crop of the opening, inset to keep the paper edge out.
    const Point2 origin = options.layout.opening_origin_mm();
    const double s = rect.px_per_mm;
    const int x0 = static_cast<int>(std::ceil((origin.x + options.crop_inset_mm) * s));
    const int y0 = static_cast<int>(std::ceil((origin.y + options.crop_inset_mm) * s));
    const int x1 = static_cast<int>(std::floor((origin.x + options.layout.opening_side_mm - options.crop_inset_mm) * s));
    const int y1 = static_cast<int>(std::floor((origin.y + options.layout.opening_side_mm - options.crop_inset_mm) * s));
    const int side = std::min(x1 - x0, y1 - y0);
    if (side < 8) {
        throw InputError("analyze: opening too small on the canvas");
    }
    const GrayImage opening = crop(rect.image, x0, y0, side, side);
    out.crop_mm = side / s;

    const GrayImage corrected = imaging::flat_field_correct(opening);
    dump(options, "03_corrected.pgm", corrected);

    auto objects = fiducial::otsu_threshold(corrected);
    out.object_threshold = objects.threshold;
    if (options.polarity == Polarity::dark_objects) {
        for (auto& v : objects.binary.pixels()) {
            v = 255.0f - v;
        }
    }
    const GrayImage clean = imaging::morph_open(objects.binary);
    dump(options, "04_clean.pgm", clean);

    const auto regions = imaging::segment_watershed(clean, options.watershed);
    out.regions = static_cast<int>(regions.size());
    const double analysis_px = static_cast<double>(corrected.width());
    out.opening_px = analysis_px * options.layout.opening_side_mm / out.crop_mm;
    const double mm_per_px = options.layout.opening_side_mm / out.opening_px;
    out.trichomes = imaging::extract_and_filter(regions, mm_per_px, corrected.width(), corrected.height(), options.filter);

    const double nnd_px = density::mean_nnd(out.trichomes.points);
    out.density = density::to_physical(nnd_px, out.opening_px, options.layout.opening_side_mm, out.trichomes.points.size());
    return out;
}

}  // namespace trichome
