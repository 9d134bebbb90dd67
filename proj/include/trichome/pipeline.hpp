#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trichome/density.hpp"
#include "trichome/fiducial.hpp"
#include "trichome/image.hpp"
#include "trichome/imaging.hpp"

namespace trichome {

enum class Polarity { bright_objects, dark_objects };

struct AnalysisOptions {
    fiducial::PaperLayout layout;
    Polarity polarity = Polarity::bright_objects;
    double crop_inset_mm = 0.15;  // trims the opening edge before analysis
    imaging::FilterParams filter;
    imaging::WatershedParams watershed;
    /// When set, intermediate images are written here as PGM.
    std::optional<std::string> dump_dir;
};

struct AnalysisResult {
    std::vector<fiducial::MarkerDetection> markers;
    int source_threshold = 0;
    int object_threshold = 0;
    double canvas_opening_px = 0.0;  // opening side on the rectified paper canvas
    double crop_mm = 0.0;            // side of the analyzed square
    double opening_px = 0.0;         // opening side in analysis pixels
    double reprojection_rms = 0.0;
    int regions = 0;
    imaging::TrichomeSet trichomes;
    density::DensityResult density;
};

/// Otsu -> marker detection -> rectification -> opening crop -> flat-field
/// correction -> Otsu -> opening -> watershed -> shape filtering -> mean
/// NND. Throws DetectionError when markers are missing and InputError when
/// fewer than two trichomes survive.
AnalysisResult analyze_image(const GrayImage& img, const AnalysisOptions& options = {});

}  // namespace trichome
