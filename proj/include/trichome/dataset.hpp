#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace trichome::ml {

/// One analyzed image plus its leaf metadata and nitrate label.
struct SampleRecord {
    std::string plant_id;
    std::string compound_leaf_id;
    std::string leaflet_id;
    double nnd = 0.0;            // mm
    double resolution = 0.0;     // total source pixels
    double exposure_time = 0.0;  // s
    double iso = 0.0;
    double nitrate_ppm = 0.0;
    std::optional<std::string> fertilizer_level;

    /// Model features in fixed order: nnd, resolution, exposure_time.
    std::array<double, 3> features() const { return {nnd, resolution, exposure_time}; }
    /// Compound leaves are identified within their plant.
    std::string leaf_key() const { return plant_id + "/" + compound_leaf_id; }
    std::string leaflet_key() const { return plant_id + "/" + compound_leaf_id + "/" + leaflet_id; }
};

inline constexpr std::array<const char*, 3> kFeatureNames = {"nnd_mm", "resolution_px", "exposure_time_s"};

inline constexpr const char* kDatasetHeader =
    "plant_id,compound_leaf_id,leaflet_id,nnd_mm,resolution_px,exposure_time_s,iso,nitrate_ppm";

struct Dataset {
    std::vector<SampleRecord> records;
    bool has_fertilizer_level = false;

    /// Throws InputError on invalid values or nitrate varying within a
    /// compound leaf.
    void validate() const;

    /// Parses the CSV schema above (columns in any order, optional
    /// fertilizer_level). Errors cite the 1-based line and column name.
    static Dataset from_csv_text(const std::string& text);
    static Dataset load(const std::string& path);
    std::string to_csv_text() const;
    void save(const std::string& path) const;

    /// Distinct compound-leaf keys in first-appearance order.
    std::vector<std::string> leaf_keys() const;
};

/// Formats a double so it parses back to the same value.
std::string format_number(double v);

}  // namespace trichome::ml
