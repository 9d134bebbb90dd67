#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "trichome/dataset.hpp"
#include "trichome/error.hpp"
#include "trichome/metadata.hpp"

namespace trichome::ml {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& column, const std::string& what) {
    throw InputError("dataset line " + std::to_string(line) + ", column " + column + ": " + what);
}

double parse_double(const std::string& text, std::size_t line, const std::string& column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        fail(line, column, "not a finite number: '" + text + "'");
    }
    return v;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) {
        throw Error("format_number failed");
    }
    return std::string(buf, ptr);
}

void Dataset::validate() const {
    std::map<std::string, double> nitrate;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::size_t line = i + 2;
        if (r.plant_id.empty()) {
            fail(line, "plant_id", "empty identifier");
        }
        if (r.compound_leaf_id.empty()) {
            fail(line, "compound_leaf_id", "empty identifier");
        }
        if (r.leaflet_id.empty()) {
            fail(line, "leaflet_id", "empty identifier");
        }
        if (!(r.nnd > 0.0)) {
            fail(line, "nnd_mm", "must be positive");
        }
        if (!(r.resolution > 0.0)) {
            fail(line, "resolution_px", "must be positive");
        }
        if (!(r.exposure_time > 0.0)) {
            fail(line, "exposure_time_s", "must be positive");
        }
        if (!(r.iso > 0.0)) {
            fail(line, "iso", "must be positive");
        }
        if (!(r.nitrate_ppm >= 0.0)) {
            fail(line, "nitrate_ppm", "must be non-negative");
        }
        const auto [it, inserted] = nitrate.emplace(r.leaf_key(), r.nitrate_ppm);
        if (!inserted && it->second != r.nitrate_ppm) {
            fail(line, "nitrate_ppm", "differs within compound leaf " + r.leaf_key());
        }
    }
}

Dataset Dataset::from_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("dataset: empty file");
    }
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        if (!col.emplace(name, i).second) {
            fail(1, name, "duplicate column");
        }
    }
    static const char* kRequired[] = {"plant_id",        "compound_leaf_id", "leaflet_id", "nnd_mm", "resolution_px",
                                      "exposure_time_s", "iso",              "nitrate_ppm"};
    for (const char* name : kRequired) {
        if (col.count(name) == 0) {
            fail(1, name, "missing column");
        }
    }
    Dataset ds;
    ds.has_fertilizer_level = col.count("fertilizer_level") != 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            fail(line_no, "*", "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
        }
        auto cell = [&](const char* name) { return trim(cells[col.at(name)]); };
        SampleRecord r;
        r.plant_id = cell("plant_id");
        r.compound_leaf_id = cell("compound_leaf_id");
        r.leaflet_id = cell("leaflet_id");
        r.nnd = parse_double(cell("nnd_mm"), line_no, "nnd_mm");
        r.resolution = parse_double(cell("resolution_px"), line_no, "resolution_px");
        r.exposure_time = parse_double(cell("exposure_time_s"), line_no, "exposure_time_s");
        r.iso = parse_double(cell("iso"), line_no, "iso");
        r.nitrate_ppm = parse_double(cell("nitrate_ppm"), line_no, "nitrate_ppm");
        if (ds.has_fertilizer_level) {
            r.fertilizer_level = cell("fertilizer_level");
        }
        ds.records.push_back(std::move(r));
    }
    // validate() reports record i as line i + 2, exact unless blank lines
    // were skipped.
    ds.validate();
    return ds;
}

Dataset Dataset::load(const std::string& path) {
    const auto bytes = metadata::read_file(path);
    return from_csv_text(std::string(bytes.begin(), bytes.end()));
}

std::string Dataset::to_csv_text() const {
    std::string out = kDatasetHeader;
    if (has_fertilizer_level) {
        out += ",fertilizer_level";
    }
    out += "\n";
    for (const auto& r : records) {
        out += r.plant_id + "," + r.compound_leaf_id + "," + r.leaflet_id + "," + format_number(r.nnd) + "," +
               format_number(r.resolution) + "," + format_number(r.exposure_time) + "," + format_number(r.iso) + "," +
               format_number(r.nitrate_ppm);
        if (has_fertilizer_level) {
            out += "," + r.fertilizer_level.value_or("");
        }
        out += "\n";
    }
    return out;
}

void Dataset::save(const std::string& path) const { metadata::write_text_file(path, to_csv_text()); }

std::vector<std::string> Dataset::leaf_keys() const {
    std::vector<std::string> keys;
    std::map<std::string, bool> seen;
    for (const auto& r : records) {
        if (seen.emplace(r.leaf_key(), true).second) {
            keys.push_back(r.leaf_key());
        }
    }
    return keys;
}

}  // namespace trichome::ml
