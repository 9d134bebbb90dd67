#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trichome/dataset.hpp"
#include "trichome/error.hpp"
#include "trichome/metadata.hpp"
#include "trichome/ml.hpp"
#include "trichome/pipeline.hpp"
#include "trichome/random.hpp"
#include "trichome/stats.hpp"
#include "trichome/synth.hpp"
#include "trichome/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace trichome;

namespace {

// ---------------------------------------------------------------------------
// JSON config files: nested objects address subcommands, flags override.
// ---------------------------------------------------------------------------

class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, "", {}, items);
        return items;
    }

private:
    static std::string scalar_text(const nlohmann::json& v) {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>() ? "true" : "false";
        }
        return v.dump();
    }

    static void collect(const nlohmann::json& j, const std::string& name, std::vector<std::string> prefix,
                        std::vector<CLI::ConfigItem>& items) {
        if (j.is_object()) {
            if (!name.empty()) {
                prefix.push_back(name);
            }
            for (const auto& [key, value] : j.items()) {
                collect(value, key, prefix, items);
            }
            return;
        }
        if (name.empty()) {
            return;
        }
        CLI::ConfigItem item;
        item.name = name;
        item.parents = prefix;
        if (j.is_array()) {
            for (const auto& v : j) {
                item.inputs.push_back(scalar_text(v));
            }
        } else {
            item.inputs.push_back(scalar_text(j));
        }
        items.push_back(std::move(item));
    }
};

// ---------------------------------------------------------------------------
// Report envelope
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json envelope(const std::string& command, std::optional<std::uint64_t> seed, const json& config) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["tool"] = "trichome";
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    if (seed) {
        j["seed"] = *seed;
    } else {
        j["seed"] = nullptr;
    }
    j["config_hash"] = hex64(fnv1a64(config.dump()));
    j["config"] = config;
    return j;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw InputError("cannot create output directory " + dir);
    }
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void emit(const std::optional<std::string>& path, const std::string& text) {
    if (path) {
        metadata::write_text_file(*path, text);
    } else {
        std::cout << text;
    }
}

fiducial::PaperLayout load_layout(const std::string& path) {
    return path.empty() ? fiducial::PaperLayout{} : fiducial::PaperLayout::load(path);
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::vector<std::string> images;
    std::string layout;
    std::optional<std::string> out;
    std::optional<std::string> dump_dir;
    bool dark_objects = false;
    double crop_inset_mm = 0.15;
    double min_size_mm = 0.010;
    int jobs = 1;
    std::optional<std::string> append;
    std::string plant;
    std::string leaf;
    std::string leaflet;
    std::optional<double> nitrate;
    std::optional<std::string> fertilizer_level;
    std::string nnd_unit = "mm";            // unit of the appended nnd column
    std::optional<double> resolution;       // replaces the metadata pixel count
};

struct ImageOutcome {
    std::optional<AnalysisResult> result;
    std::optional<metadata::CaptureMeta> meta;
    std::string meta_source;
    int width = 0;
    int height = 0;
    std::string error;
    bool detection_failure = false;
};

ImageOutcome analyze_one(const std::string& path, const AnalysisOptions& base, std::size_t index, std::size_t count) {
    ImageOutcome out;
    try {
        auto capture = metadata::load_capture(path);
        out.meta = capture.meta;
        out.meta_source = capture.meta_source;
        out.width = capture.image.width();
        out.height = capture.image.height();
        AnalysisOptions opts = base;
        if (opts.dump_dir && count > 1) {
            opts.dump_dir = join(*opts.dump_dir, fs::path(path).stem().string() + "_" + std::to_string(index));
        }
        if (opts.dump_dir) {
            ensure_dir(*opts.dump_dir);
        }
        out.result = analyze_image(capture.image, opts);
    } catch (const DetectionError& e) {
        out.error = e.what();
        out.detection_failure = true;
    } catch (const InputError& e) {
        out.error = e.what();
    }
    return out;
}

int cmd_analyze(const AnalyzeArgs& a) {
    if (a.append && (a.plant.empty() || a.leaf.empty() || a.leaflet.empty() || !a.nitrate)) {
        throw InputError("--append needs --plant, --leaf, --leaflet and --nitrate");
    }
    AnalysisOptions opts;
    opts.layout = load_layout(a.layout);
    opts.polarity = a.dark_objects ? Polarity::dark_objects : Polarity::bright_objects;
    opts.crop_inset_mm = a.crop_inset_mm;
    opts.filter.min_size_mm = a.min_size_mm;
    opts.dump_dir = a.dump_dir;

    std::vector<ImageOutcome> outcomes(a.images.size());
    const int workers = std::clamp(a.jobs, 1, static_cast<int>(std::max<std::size_t>(1, a.images.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < a.images.size(); i = next++) {
            outcomes[i] = analyze_one(a.images[i], opts, i, a.images.size());
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    json config;
    config["images"] = a.images;
    config["layout"] = json::parse(opts.layout.to_json_text());
    config["polarity"] = a.dark_objects ? "dark_objects" : "bright_objects";
    config["crop_inset_mm"] = a.crop_inset_mm;
    config["min_size_mm"] = a.min_size_mm;
    config["nnd_unit"] = a.nnd_unit;
    config["resolution_override"] = a.resolution ? json(*a.resolution) : json(nullptr);
    json report = envelope("analyze", std::nullopt, config);
    json rows = json::array();
    ml::Dataset appended;
    int failures = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        json r;
        r["image"] = a.images[i];
        if (!o.result) {
            ++failures;
            r["error"] = o.error;
            rows.push_back(r);
            std::cerr << "error: " << a.images[i] << ": " << o.error << "\n";
            continue;
        }
        const auto& res = *o.result;
        const double resolution = a.resolution ? *a.resolution
                                  : o.meta     ? o.meta->resolution()
                                               : static_cast<double>(o.width) * o.height;
        r["nnd_mm"] = res.density.nnd_mm;
        r["nnd_px"] = res.density.nnd_px;
        r["n_points"] = res.density.n_points;
        r["opening_px"] = res.opening_px;
        r["exposure_time"] = o.meta ? json(o.meta->exposure_time) : json(nullptr);
        r["iso"] = o.meta ? json(o.meta->iso) : json(nullptr);
        r["resolution"] = resolution;
        r["metadata_source"] = o.meta_source;
        r["regions"] = res.regions;
        r["rejected"] = res.trichomes.rejected_count;
        r["small_sample"] = res.trichomes.small_sample;
        r["reprojection_rms_px"] = res.reprojection_rms;
        rows.push_back(r);
        if (a.append) {
            if (!o.meta) {
                throw InputError(a.images[i] + ": --append needs capture metadata (.exif, .jpg or .meta.json)");
            }
            ml::SampleRecord rec;
            rec.plant_id = a.plant;
            rec.compound_leaf_id = a.leaf;
            rec.leaflet_id = a.leaflet;
            rec.nnd = a.nnd_unit == "px" ? res.density.nnd_px : res.density.nnd_mm;
            rec.resolution = resolution;
            rec.exposure_time = o.meta->exposure_time;
            rec.iso = o.meta->iso;
            rec.nitrate_ppm = *a.nitrate;
            rec.fertilizer_level = a.fertilizer_level;
            appended.records.push_back(rec);
        }
    }
    report["images"] = rows;
    emit(a.out, dump(report));

    if (a.append && !appended.records.empty()) {
        appended.has_fertilizer_level = a.fertilizer_level.has_value();
        appended.validate();
        const bool exists = fs::exists(*a.append) && fs::file_size(*a.append) > 0;
        std::string text = appended.to_csv_text();
        if (exists) {
            const std::string header = text.substr(0, text.find('\n') + 1);
            std::ifstream in(*a.append);
            std::string first;
            std::getline(in, first);
            if (first + "\n" != header) {
                throw InputError(*a.append + ": existing header does not match " + header.substr(0, header.size() - 1));
            }
            text.erase(0, header.size());
        }
        std::ofstream f(*a.append, std::ios::binary | std::ios::app);
        if (!f) {
            throw InputError("cannot open " + *a.append);
        }
        f << text;
    }
    return failures > 0 ? 2 : 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    double lambda = 150.0;
    double tilt_h = 0.0;
    double tilt_v = 0.0;
    double distance = 150.0;
    double noise = 2.0;
    double illum = 0.0;
    std::uint64_t seed = 1;
    std::string layout;
    int count = 1;
    bool envelope = false;
    bool dataset = false;
    synth::TabularParams tabular;
};

int cmd_synth(const SynthArgs& a) {
    ensure_dir(a.out);
    if (a.dataset) {
        auto tp = a.tabular;
        tp.seed = a.seed;
        const auto ds = synth::make_tabular_dataset(tp);
        ds.save(join(a.out, "dataset.csv"));
        json config;
        config["plants"] = tp.plants;
        config["leaves_per_plant"] = tp.leaves_per_plant;
        config["leaflets_per_leaf"] = tp.leaflets_per_leaf;
        config["images_per_leaflet"] = tp.images_per_leaflet;
        config["nitrate_lo"] = tp.nitrate_lo;
        config["nitrate_hi"] = tp.nitrate_hi;
        config["nnd_base_mm"] = tp.nnd_base_mm;
        config["nnd_per_ppm"] = tp.nnd_per_ppm;
        config["nnd_noise_mm"] = tp.nnd_noise_mm;
        config["with_fertilizer_level"] = tp.with_fertilizer_level;
        json report = envelope("synth", a.seed, config);
        report["rows"] = ds.records.size();
        metadata::write_text_file(join(a.out, "dataset.json"), dump(report));
        std::cout << "wrote " << ds.records.size() << " rows to " << join(a.out, "dataset.csv") << "\n";
        return 0;
    }
    if (a.count < 1) {
        throw InputError("--count must be at least 1");
    }
    const auto layout = load_layout(a.layout);
    json manifest = json::array();
    for (int i = 0; i < a.count; ++i) {
        const std::uint64_t seed = a.count == 1 ? a.seed : derive_seed(a.seed, {static_cast<std::uint64_t>(i)});
        synth::SceneParams p = a.envelope ? synth::sample_envelope_pose(seed) : synth::SceneParams{};
        if (!a.envelope) {
            p.tilt_h = a.tilt_h;
            p.tilt_v = a.tilt_v;
            p.distance_mm = a.distance;
        }
        p.seed = seed;
        p.lambda = a.lambda;
        p.noise_sigma = a.noise;
        p.illum_gradient = a.illum;
        p.layout = layout;
        const auto scene = synth::render_scene(p);
        char stem[32];
        if (a.count == 1) {
            std::snprintf(stem, sizeof stem, "scene");
        } else {
            std::snprintf(stem, sizeof stem, "scene_%04d", i);
        }
        const std::string base = join(a.out, stem);
        metadata::save_pgm(scene.image, base + ".pgm");
        metadata::write_file(base + ".exif", scene.exif);
        const std::string truth_name = a.count == 1 ? "truth.json" : std::string(stem) + ".truth.json";
        metadata::write_text_file(join(a.out, truth_name), synth::truth_json_text(p, scene.truth));
        json entry;
        entry["image"] = std::string(stem) + ".pgm";
        entry["truth"] = truth_name;
        entry["n_points"] = scene.truth.points_mm.size();
        entry["true_nnd_mm"] = optional_number(scene.truth.true_nnd_mm);
        entry["merge_warning"] = scene.truth.merge_warning;
        manifest.push_back(entry);
        if (scene.truth.merge_warning) {
            std::cerr << "warning: " << stem << ": expected spacing below two blob widths, blobs will merge\n";
        }
    }
    json config;
    config["lambda"] = a.lambda;
    config["noise_sigma"] = a.noise;
    config["illum_gradient"] = a.illum;
    config["envelope"] = a.envelope;
    if (!a.envelope) {
        config["tilt_h"] = a.tilt_h;
        config["tilt_v"] = a.tilt_v;
        config["distance_mm"] = a.distance;
    }
    config["count"] = a.count;
    config["layout"] = json::parse(layout.to_json_text());
    json report = envelope("synth", a.seed, config);
    report["scenes"] = manifest;
    metadata::write_text_file(join(a.out, "synth.json"), dump(report));
    std::cout << "wrote " << a.count << (a.count == 1 ? " scene" : " scenes") << " to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train-eval and sweep
// ---------------------------------------------------------------------------

struct ModelArgs {
    std::string dataset;
    std::string out;
    std::uint64_t seed = 1;
    int rounds = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int min_samples_leaf = 20;
    int smote_k = 5;
    std::string polarity = "below_is_zero";

    ml::GbdtParams gbdt() const {
        ml::GbdtParams g;
        g.rounds = rounds;
        g.learning_rate = learning_rate;
        g.max_leaves = max_leaves;
        g.min_samples_leaf = min_samples_leaf;
        return g;
    }

    ml::ClassifyParams classify(double threshold, int n_images) const {
        ml::ClassifyParams c;
        c.threshold_ppm = threshold;
        c.n_images = n_images;
        c.seed = seed;
        c.polarity = polarity == "below_is_one" ? ml::Polarity::below_is_one : ml::Polarity::below_is_zero;
        c.smote_k = smote_k;
        c.gbdt = gbdt();
        return c;
    }

    json config() const {
        json c;
        c["dataset"] = dataset;
        c["rounds"] = rounds;
        c["learning_rate"] = learning_rate;
        c["max_leaves"] = max_leaves;
        c["min_samples_leaf"] = min_samples_leaf;
        c["smote_k"] = smote_k;
        c["polarity"] = polarity;
        return c;
    }
};

struct TrainEvalArgs {
    ModelArgs model;
    std::string mode = "classify";
    std::optional<double> threshold;
    double threshold_quantile = 0.75;
    int n_images = 25;
    int max_background = 100;
};

json metrics_json(const ml::BinaryMetrics& m) {
    json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["roc_auc"] = optional_number(m.roc_auc);
    j["pr_auc"] = optional_number(m.pr_auc);
    j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}};
    return j;
}

std::string curve_csv(const std::vector<ml::CurvePoint>& pts, const char* x, const char* y) {
    std::string out = std::string("threshold,") + x + "," + y + "\n";
    for (const auto& p : pts) {
        out += ml::format_number(p.threshold) + "," + ml::format_number(p.x) + "," + ml::format_number(p.y) + "\n";
    }
    return out;
}

double leaf_quantile(const ml::Dataset& ds, double q) {
    std::map<std::string, double> leaf_nitrate;
    for (const auto& r : ds.records) {
        leaf_nitrate[r.leaf_key()] = r.nitrate_ppm;
    }
    std::vector<double> v;
    for (const auto& [k, n] : leaf_nitrate) {
        v.push_back(n);
    }
    return stats::quantile_type7(v, q);
}

int cmd_train_eval(const TrainEvalArgs& a) {
    const auto ds = ml::Dataset::load(a.model.dataset);
    ensure_dir(a.model.out);
    json config = a.model.config();
    config["mode"] = a.mode;

    if (a.mode == "regress") {
        const auto res = ml::loocv_regress(ds, a.model.gbdt());
        json report = envelope("train-eval", a.model.seed, config);
        report["folds"] = res.folds;
        report["rmse"] = res.rmse;
        report["r2"] = res.r2;
        report["pearson_r"] = res.pearson_r;
        metadata::write_text_file(join(a.model.out, "metrics.json"), dump(report));
        std::string csv = "truth_nnd_mm,predicted_nnd_mm\n";
        for (std::size_t i = 0; i < res.truth.size(); ++i) {
            csv += ml::format_number(res.truth[i]) + "," + ml::format_number(res.predicted[i]) + "\n";
        }
        metadata::write_text_file(join(a.model.out, "predictions.csv"), csv);
        std::cout << "regress: folds " << res.folds << "  rmse " << res.rmse << "  r2 " << res.r2 << "  pearson_r "
                  << res.pearson_r << "\n";
        return 0;
    }

    const double threshold = a.threshold ? *a.threshold : leaf_quantile(ds, a.threshold_quantile);
    const auto params = a.model.classify(threshold, a.n_images);
    const auto res = ml::loocv_classify(ds, params);
    config["threshold_ppm"] = threshold;
    config["threshold_source"] = a.threshold ? "flag" : "leaf nitrate quantile " + ml::format_number(a.threshold_quantile);
    config["n_images"] = a.n_images;
    config["max_background"] = a.max_background;

    std::vector<int> truth;
    std::vector<double> prob;
    std::string pred_csv = "leaf,truth,probability,label\n";
    for (const auto& f : res.folds) {
        truth.push_back(f.truth);
        prob.push_back(f.probability);
        pred_csv += f.leaf + "," + std::to_string(f.truth) + "," + ml::format_number(f.probability) + "," +
                    std::to_string(f.label) + "\n";
    }
    metadata::write_text_file(join(a.model.out, "predictions.csv"), pred_csv);
    const auto& c = res.metrics.confusion;
    metadata::write_text_file(join(a.model.out, "confusion.csv"),
                              "actual,predicted_0,predicted_1\n0," + std::to_string(c.tn) + "," + std::to_string(c.fp) +
                                  "\n1," + std::to_string(c.fn) + "," + std::to_string(c.tp) + "\n");
    const bool two_classes = res.metrics.roc_auc.has_value();
    metadata::write_text_file(join(a.model.out, "roc.csv"),
                              curve_csv(two_classes ? ml::roc_curve(truth, prob) : std::vector<ml::CurvePoint>{},
                                        "fpr", "tpr"));
    metadata::write_text_file(join(a.model.out, "pr.csv"),
                              curve_csv(two_classes ? ml::pr_curve(truth, prob) : std::vector<ml::CurvePoint>{},
                                        "recall", "precision"));

    const auto fit = ml::fit_full_classifier(ds, params);
    const auto lc = ml::learning_curve(fit);
    std::string lc_csv = "round,train_loss,train_pr_auc\n";
    for (const auto& p : lc) {
        lc_csv += std::to_string(p.round) + "," + ml::format_number(p.train_loss) + "," +
                  ml::format_number(p.train_pr_auc) + "\n";
    }
    metadata::write_text_file(join(a.model.out, "learning_curve.csv"), lc_csv);
    const auto phi = ml::shap_summary(fit, ds, static_cast<std::size_t>(std::max(1, a.max_background)),
                                      derive_seed(a.model.seed, {4}));
    std::string shap_csv = "feature,mean_abs_shap\n";
    for (std::size_t k = 0; k < phi.size(); ++k) {
        shap_csv += std::string(ml::kFeatureNames[k]) + "," + ml::format_number(phi[k]) + "\n";
    }
    metadata::write_text_file(join(a.model.out, "shap_summary.csv"), shap_csv);

    json report = envelope("train-eval", a.model.seed, config);
    report["evaluated_folds"] = res.folds.size();
    report["skipped_folds"] = res.skipped_folds;
    report["metrics"] = metrics_json(res.metrics);
    metadata::write_text_file(join(a.model.out, "metrics.json"), dump(report));

    std::cout << "classify: threshold " << threshold << " ppm  n_images " << a.n_images << "  folds "
              << res.folds.size() << "\n";
    std::cout << "  precision " << res.metrics.precision << "  recall " << res.metrics.recall << "  f1 "
              << res.metrics.f1 << "\n";
    std::cout << "  roc_auc " << (res.metrics.roc_auc ? std::to_string(*res.metrics.roc_auc) : "n/a") << "  pr_auc "
              << (res.metrics.pr_auc ? std::to_string(*res.metrics.pr_auc) : "n/a") << "\n";
    return 0;
}

struct SweepArgs {
    ModelArgs model;
    double lo = 1600.0;
    double hi = 1900.0;
    int count = 10;
    std::vector<int> n_images{25};
};

int cmd_sweep(const SweepArgs& a) {
    const auto ds = ml::Dataset::load(a.model.dataset);
    ensure_dir(a.model.out);
    const auto thresholds = ml::linspace(a.lo, a.hi, a.count);
    const auto rep = ml::sweep(ds, thresholds, a.n_images, a.model.classify(0.0, a.n_images.front()));

    json config = a.model.config();
    config["threshold_lo"] = a.lo;
    config["threshold_hi"] = a.hi;
    config["threshold_count"] = a.count;
    config["n_images"] = a.n_images;
    json report = envelope("sweep", a.model.seed, config);
    json summaries = json::array();
    for (const auto& s : rep.summaries) {
        summaries.push_back({{"n_images", s.n_images},
                             {"mroc", optional_number(s.mroc)},
                             {"mpr", optional_number(s.mpr)},
                             {"models", s.models},
                             {"degenerate", s.degenerate}});
    }
    report["summaries"] = summaries;
    json cells = json::array();
    std::string csv = "threshold_ppm,n_images,degenerate,reason,roc_auc,pr_auc,precision,recall,f1\n";
    for (const auto& c : rep.cells) {
        json cj;
        cj["threshold_ppm"] = c.threshold_ppm;
        cj["n_images"] = c.n_images;
        cj["degenerate"] = c.degenerate;
        if (c.degenerate) {
            cj["reason"] = c.reason;
        }
        csv += ml::format_number(c.threshold_ppm) + "," + std::to_string(c.n_images) + "," +
               (c.degenerate ? "1" : "0") + "," + c.reason + ",";
        if (c.result) {
            const auto& m = c.result->metrics;
            cj["metrics"] = metrics_json(m);
            csv += (m.roc_auc ? ml::format_number(*m.roc_auc) : "") + "," +
                   (m.pr_auc ? ml::format_number(*m.pr_auc) : "") + "," + ml::format_number(m.precision) + "," +
                   ml::format_number(m.recall) + "," + ml::format_number(m.f1) + "\n";
        } else {
            csv += ",,,,\n";
        }
        cells.push_back(cj);
    }
    report["cells"] = cells;
    metadata::write_text_file(join(a.model.out, "sweep.json"), dump(report));
    metadata::write_text_file(join(a.model.out, "sweep_cells.csv"), csv);
    for (const auto& s : rep.summaries) {
        std::cout << "n_images " << s.n_images << ": mROC " << (s.mroc ? std::to_string(*s.mroc) : "n/a") << "  mPR "
                  << (s.mpr ? std::to_string(*s.mpr) : "n/a") << "  over " << s.models << " thresholds ("
                  << s.degenerate << " degenerate)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// appendix
// ---------------------------------------------------------------------------

struct AppendixArgs {
    std::string out;
    synth::StudyParams params;
};

int cmd_appendix(const AppendixArgs& a) {
    const auto rep = synth::appendix_study(a.params);
    ensure_dir(a.out);
    json config;
    config["lambda"] = a.params.lambda;
    config["replicates"] = a.params.replicates;
    config["damage"] = a.params.damage;
    json report = envelope("appendix", a.params.seed, config);
    report["summary"] = json::parse(rep.summary_json());
    metadata::write_text_file(join(a.out, "appendix.csv"), rep.to_csv());
    metadata::write_text_file(join(a.out, "appendix.json"), dump(report));
    std::cout << "replicates " << rep.rows.size() << "  median count change " << rep.median_rate_count
              << "  median nnd change " << rep.median_rate_nnd << "\n";
    std::cout << "signed-rank W " << rep.two_sided.statistic << "  p two-sided " << rep.two_sided.p_value
              << "  p (count > nnd) " << rep.greater.p_value << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string dataset;
    std::optional<std::string> out;
    std::string iso = "both";
    std::vector<double> cuts{15.0, 85.0};
};

json test_json(const stats::TestResult& t) {
    return {{"method", stats::method_name(t.method)},
            {"statistic", t.statistic},
            {"p_value", t.p_value},
            {"adjusted_p", t.adjusted_p},
            {"n", t.n}};
}

json vif_table(const ml::Dataset& ds, bool with_iso) {
    std::vector<std::string> names{"nnd_mm", "resolution_px", "exposure_time_s"};
    std::vector<std::vector<double>> cols(3);
    for (const auto& r : ds.records) {
        cols[0].push_back(r.nnd);
        cols[1].push_back(r.resolution);
        cols[2].push_back(r.exposure_time);
    }
    if (with_iso) {
        names.emplace_back("iso");
        cols.emplace_back();
        for (const auto& r : ds.records) {
            cols.back().push_back(r.iso);
        }
    }
    const auto res = stats::vif(cols);
    json t = json::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
        t.push_back({{"feature", names[k]}, {"vif", res.vif[k]}, {"capped", static_cast<bool>(res.capped[k])}});
    }
    return t;
}

int cmd_stats(const StatsArgs& a) {
    const auto ds = ml::Dataset::load(a.dataset);
    json config;
    config["dataset"] = a.dataset;
    config["iso"] = a.iso;
    config["percentile_cuts"] = a.cuts;
    json report = envelope("stats", std::nullopt, config);

    if (!ds.has_fertilizer_level) {
        report["group_tests"] = {{"skipped", "dataset has no fertilizer_level column"}};
        std::cerr << "notice: no fertilizer_level column, group tests skipped\n";
    } else {
        // One value per compound leaf so repeated images do not inflate n.
        std::map<std::string, std::pair<std::string, std::vector<double>>> leaf_nnd;
        std::map<std::string, double> leaf_nitrate;
        std::vector<std::string> leaf_order;
        for (const auto& r : ds.records) {
            auto [it, inserted] = leaf_nnd.try_emplace(r.leaf_key());
            if (inserted) {
                leaf_order.push_back(r.leaf_key());
                it->second.first = r.fertilizer_level.value_or("");
            }
            it->second.second.push_back(r.nnd);
            leaf_nitrate[r.leaf_key()] = r.nitrate_ppm;
        }
        std::vector<std::string> levels;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
        for (const auto& key : leaf_order) {
            const auto& [level, values] = leaf_nnd[key];
            if (!groups.count(level)) {
                levels.push_back(level);
            }
            double sum = 0.0;
            for (double v : values) {
                sum += v;
            }
            groups[level].first.push_back(sum / static_cast<double>(values.size()));
            groups[level].second.push_back(leaf_nitrate[key]);
        }
        json g;
        g["unit"] = "compound leaf";
        g["levels"] = levels;
        for (int which = 0; which < 2; ++which) {
            const char* var = which == 0 ? "nnd_mm" : "nitrate_ppm";
            std::vector<std::vector<double>> samples;
            for (const auto& lv : levels) {
                samples.push_back(which == 0 ? groups[lv].first : groups[lv].second);
            }
            json v;
            try {
                v["kruskal_wallis"] = test_json(stats::kruskal_wallis(samples));
            } catch (const InputError& e) {
                v["kruskal_wallis"] = {{"error", e.what()}};
            }
            std::vector<stats::SamplePair> pairs;
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                for (std::size_t j = i + 1; j < levels.size(); ++j) {
                    pairs.push_back({samples[i], samples[j]});
                    labels.push_back(levels[i] + " vs " + levels[j]);
                }
            }
            json pw = json::array();
            try {
                const auto res = stats::mann_whitney_bonferroni(pairs);
                for (std::size_t k = 0; k < res.size(); ++k) {
                    json t = test_json(res[k]);
                    t["pair"] = labels[k];
                    pw.push_back(t);
                }
                v["pairwise_mann_whitney"] = pw;
            } catch (const InputError& e) {
                v["pairwise_mann_whitney"] = {{"error", e.what()}};
            }
            g[var] = v;
        }
        report["group_tests"] = g;
    }

    if (a.iso == "both" || a.iso == "include") {
        report["vif_with_iso"] = vif_table(ds, true);
    }
    if (a.iso == "both" || a.iso == "exclude") {
        report["vif_without_iso"] = vif_table(ds, false);
    }

    json strata = json::array();
    for (const auto& s : stats::stratified_ols(ds, a.cuts)) {
        json sj;
        sj["stratum"] = s.name;
        sj["resolution_lo"] = s.resolution_lo;
        sj["resolution_hi"] = s.resolution_hi;
        sj["n"] = s.n;
        if (s.fit) {
            sj["slope"] = s.fit->slope;
            sj["intercept"] = s.fit->intercept;
            sj["r2"] = s.fit->r2;
        } else {
            sj["slope"] = nullptr;
            sj["intercept"] = nullptr;
            sj["r2"] = nullptr;
        }
        strata.push_back(sj);
    }
    report["stratified_ols"] = strata;
    emit(a.out, dump(report));
    return 0;
}

void add_model_options(CLI::App* sub, ModelArgs& m) {
    sub->add_option("dataset", m.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", m.out, "Output directory")->required();
    sub->add_option("--seed", m.seed, "Random seed");
    sub->add_option("--rounds", m.rounds, "Boosting rounds")->check(CLI::PositiveNumber);
    sub->add_option("--learning-rate", m.learning_rate, "Shrinkage")->check(CLI::Range(1e-6, 1.0));
    sub->add_option("--max-leaves", m.max_leaves, "Leaves per tree")->check(CLI::Range(2, 4096));
    sub->add_option("--min-samples-leaf", m.min_samples_leaf, "Minimum rows per leaf")->check(CLI::PositiveNumber);
    sub->add_option("--smote-k", m.smote_k, "SMOTE neighbours")->check(CLI::PositiveNumber);
    sub->add_option("--polarity", m.polarity, "Which side of the threshold is class 0")
        ->check(CLI::IsMember({"below_is_zero", "below_is_one"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trichome density measurement and nitrate classification"};
    app.set_version_flag("--version", kToolVersion);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");
    app.require_subcommand(1);
    app.footer(
        "Inputs: <stem>.pgm (binary P5) with capture metadata from <stem>.exif (raw TIFF/EXIF blob),\n"
        "<stem>.jpg or <stem>.jpeg (APP1 segment) or <stem>.meta.json {exposure_time_s, iso, width, height},\n"
        "tried in that order. Config files nest options under the subcommand name, e.g.\n"
        "{\"analyze\": {\"crop-inset-mm\": 0.2}}.\n"
        "Exit codes: 0 success, 1 internal error, 2 input or detection error.");

    AnalyzeArgs analyze;
    auto* s_analyze = app.add_subcommand("analyze", "Measure mean nearest-neighbour distance in photographs");
    s_analyze->add_option("images", analyze.images, "PGM images")->required()->check(CLI::ExistingFile);
    s_analyze->add_option("--layout", analyze.layout, "Paper layout JSON")->check(CLI::ExistingFile);
    s_analyze->add_option("-o,--out", analyze.out, "Write the JSON report here instead of stdout");
    s_analyze->add_option("--dump-dir", analyze.dump_dir, "Write intermediate images here");
    s_analyze->add_flag("--dark-objects", analyze.dark_objects, "Trichomes darker than the opening");
    s_analyze->add_option("--crop-inset-mm", analyze.crop_inset_mm, "Trim at the opening edge")
        ->check(CLI::Range(0.0, 5.0));
    s_analyze->add_option("--min-size-mm", analyze.min_size_mm, "Smallest accepted object")
        ->check(CLI::NonNegativeNumber);
    s_analyze->add_option("-j,--jobs", analyze.jobs, "Worker threads")->check(CLI::Range(1, 256));
    s_analyze->add_option("--append", analyze.append, "Append one dataset row per image to this CSV");
    s_analyze->add_option("--plant", analyze.plant, "Plant id for --append");
    s_analyze->add_option("--leaf", analyze.leaf, "Compound leaf id for --append");
    s_analyze->add_option("--leaflet", analyze.leaflet, "Leaflet id for --append");
    s_analyze->add_option("--nitrate", analyze.nitrate, "Petiole sap nitrate (ppm) for --append")
        ->check(CLI::PositiveNumber);
    s_analyze->add_option("--fertilizer-level", analyze.fertilizer_level, "Fertilizer level for --append");
    s_analyze->add_option("--nnd-unit", analyze.nnd_unit, "Unit of the appended nnd column")
        ->check(CLI::IsMember({"mm", "px"}));
    s_analyze->add_option("--resolution", analyze.resolution, "Resolution feature override (pixels)")
        ->check(CLI::PositiveNumber);

    SynthArgs syn;
    auto* s_synth = app.add_subcommand("synth", "Render synthetic scenes or a synthetic tabular dataset");
    s_synth->add_option("-o,--out", syn.out, "Output directory")->required();
    s_synth->add_option("--lambda", syn.lambda, "Expected trichome count in the opening")
        ->check(CLI::PositiveNumber);
    s_synth->add_option("--tilt-h", syn.tilt_h, "Horizontal tilt (deg)");
    s_synth->add_option("--tilt-v", syn.tilt_v, "Vertical tilt (deg)");
    s_synth->add_option("--distance", syn.distance, "Camera distance (mm)")->check(CLI::PositiveNumber);
    s_synth->add_option("--noise", syn.noise, "Luminance noise std")->check(CLI::NonNegativeNumber);
    s_synth->add_option("--illum", syn.illum, "Illumination gradient across the frame");
    s_synth->add_option("--seed", syn.seed, "Random seed");
    s_synth->add_option("--layout", syn.layout, "Paper layout JSON")->check(CLI::ExistingFile);
    s_synth->add_option("--count", syn.count, "Number of scenes")->check(CLI::Range(1, 100000));
    s_synth->add_flag("--envelope", syn.envelope, "Draw tilt and distance from the capture envelope");
    s_synth->add_flag("--dataset", syn.dataset, "Write a synthetic dataset.csv instead of scenes");
    s_synth->add_option("--plants", syn.tabular.plants, "Dataset: plants")->check(CLI::PositiveNumber);
    s_synth->add_option("--leaves-per-plant", syn.tabular.leaves_per_plant, "Dataset: compound leaves per plant")
        ->check(CLI::PositiveNumber);
    s_synth->add_option("--leaflets-per-leaf", syn.tabular.leaflets_per_leaf, "Dataset: leaflets per leaf")
        ->check(CLI::PositiveNumber);
    s_synth->add_option("--images-per-leaflet", syn.tabular.images_per_leaflet, "Dataset: images per leaflet")
        ->check(CLI::PositiveNumber);
    s_synth->add_option("--nnd-noise", syn.tabular.nnd_noise_mm, "Dataset: nnd noise (mm)")
        ->check(CLI::NonNegativeNumber);

    TrainEvalArgs te;
    auto* s_te = app.add_subcommand("train-eval", "Leave-one-leaf-out classification or regression");
    add_model_options(s_te, te.model);
    s_te->add_option("--mode", te.mode, "classify or regress")->check(CLI::IsMember({"classify", "regress"}));
    s_te->add_option("--threshold", te.threshold, "Nitrate threshold (ppm)")->check(CLI::PositiveNumber);
    s_te->add_option("--threshold-quantile", te.threshold_quantile,
                     "Leaf nitrate quantile used when --threshold is absent")
        ->check(CLI::Range(0.0, 1.0));
    s_te->add_option("--n-images", te.n_images, "Images averaged per held-out leaf")->check(CLI::PositiveNumber);
    s_te->add_option("--max-background", te.max_background, "Background rows for attributions")
        ->check(CLI::PositiveNumber);

    SweepArgs sw;
    auto* s_sweep = app.add_subcommand("sweep", "Classification over a grid of nitrate thresholds");
    add_model_options(s_sweep, sw.model);
    s_sweep->add_option("--lo", sw.lo, "Lowest threshold (ppm)")->check(CLI::PositiveNumber);
    s_sweep->add_option("--hi", sw.hi, "Highest threshold (ppm)")->check(CLI::PositiveNumber);
    s_sweep->add_option("--count", sw.count, "Number of thresholds")->check(CLI::Range(1, 1000));
    s_sweep->add_option("--n-images", sw.n_images, "Images per held-out leaf (repeatable)")
        ->check(CLI::PositiveNumber)
        ->delimiter(',');

    AppendixArgs ap;
    bool no_damage = false;
    auto* s_app = app.add_subcommand("appendix", "Point-loss robustness study of count versus NND");
    s_app->add_option("-o,--out", ap.out, "Output directory")->required();
    s_app->add_option("--lambda", ap.params.lambda, "Expected points per field")->check(CLI::PositiveNumber);
    s_app->add_option("--replicates", ap.params.replicates, "Replicates");
    s_app->add_option("--seed", ap.params.seed, "Random seed");
    s_app->add_flag("--no-damage", no_damage, "Skip the half-plane removal (null study)");

    StatsArgs st;
    auto* s_stats = app.add_subcommand("stats", "Group tests, VIF tables and stratified fits");
    s_stats->add_option("dataset", st.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
    s_stats->add_option("-o,--out", st.out, "Write the JSON report here instead of stdout");
    s_stats->add_option("--iso", st.iso, "VIF tables with ISO, without, or both")
        ->check(CLI::IsMember({"both", "include", "exclude"}));
    s_stats->add_option("--cuts", st.cuts, "Resolution percentile cuts")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*s_analyze) {
            return cmd_analyze(analyze);
        }
        if (*s_synth) {
            return cmd_synth(syn);
        }
        if (*s_te) {
            return cmd_train_eval(te);
        }
        if (*s_sweep) {
            return cmd_sweep(sw);
        }
        if (*s_app) {
            ap.params.damage = !no_damage;
            return cmd_appendix(ap);
        }
        if (*s_stats) {
            return cmd_stats(st);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
