#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "trichome/error.hpp"
#include "trichome/ml.hpp"
#include "trichome/random.hpp"
#include "trichome/stats.hpp"

namespace trichome::ml {

FeatureMatrix feature_matrix(const Dataset& ds) {
    FeatureMatrix x;
    x.reserve(ds.records.size());
    for (const auto& r : ds.records) {
        const auto f = r.features();
        x.emplace_back(f.begin(), f.end());
    }
    return x;
}

int nitrate_label(double nitrate_ppm, double threshold_ppm, Polarity polarity) {
    const bool below = nitrate_ppm < threshold_ppm;
    if (polarity == Polarity::below_is_zero) {
        return below ? 0 : 1;
    }
    return below ? 1 : 0;
}

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) {
        throw InputError("linspace: count must be positive");
    }
    if (count == 1) {
        return {lo};
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    out.back() = hi;
    return out;
}

namespace {

std::vector<std::string> names() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

struct Groups {
    std::vector<std::string> keys;
    std::vector<std::vector<std::size_t>> rows;
};

template <typename KeyFn>
Groups group_rows(const Dataset& ds, KeyFn key) {
    Groups g;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const std::string k = key(ds.records[i]);
        auto [it, inserted] = index.emplace(k, g.keys.size());
        if (inserted) {
            g.keys.push_back(k);
            g.rows.emplace_back();
        }
        g.rows[it->second].push_back(i);
    }
    return g;
}

std::vector<int> row_labels(const Dataset& ds, double threshold, Polarity polarity) {
    std::vector<int> y;
    y.reserve(ds.records.size());
    for (const auto& r : ds.records) {
        y.push_back(nitrate_label(r.nitrate_ppm, threshold, polarity));
    }
    return y;
}

bool single_class(std::span<const int> y) {
    return std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); });
}

}  // namespace

std::vector<FoldResults> loocv_classify_multi(const Dataset& ds, const ClassifyParams& params,
                                              std::span<const int> n_images_values) {
    ds.validate();
    for (int n : n_images_values) {
        if (n < 1) {
            throw InputError("n_images must be positive");
        }
    }
    const Groups leaves = group_rows(ds, [](const SampleRecord& r) { return r.leaf_key(); });
    if (leaves.keys.size() < 3) {
        throw InputError("insufficient groups: need at least 3 compound leaves");
    }
    const auto y = row_labels(ds, params.threshold_ppm, params.polarity);
    if (single_class(y)) {
        throw InputError("single class after labeling at threshold " + format_number(params.threshold_ppm));
    }
    const FeatureMatrix x = feature_matrix(ds);

    std::vector<FoldResults> results(n_images_values.size());
    for (std::size_t k = 0; k < results.size(); ++k) {
        results[k].threshold_ppm = params.threshold_ppm;
        results[k].n_images = n_images_values[k];
    }

    std::vector<char> held(ds.records.size(), 0);
    for (std::size_t li = 0; li < leaves.keys.size(); ++li) {
        const auto& test_rows = leaves.rows[li];
        std::fill(held.begin(), held.end(), 0);
        for (std::size_t i : test_rows) {
            held[i] = 1;
        }
        FeatureMatrix x_train;
        std::vector<int> y_train;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (held[i] == 0) {
                x_train.push_back(x[i]);
                y_train.push_back(y[i]);
            }
        }
        if (single_class(y_train)) {
            for (auto& r : results) {
                r.skipped_folds.push_back(leaves.keys[li]);
            }
            continue;
        }
        const Scaler scaler = fit_scaler(x_train, names());
        Resampled balanced = smote(scaler.transform(x_train), y_train, params.smote_k,
                                   derive_seed(params.seed, {1, li}));
        const std::vector<double> target(balanced.y.begin(), balanced.y.end());
        const GbdtModel model = gbdt_train(balanced.x, target, Objective::logistic, params.gbdt);

        std::vector<double> probs;
        probs.reserve(test_rows.size());
        for (std::size_t i : test_rows) {
            probs.push_back(gbdt_predict(model, scaler.transform(x[i])).p);
        }
        const int truth = y[test_rows.front()];
        for (std::size_t k = 0; k < results.size(); ++k) {
            const auto n = static_cast<std::size_t>(n_images_values[k]);
            std::mt19937_64 rng(derive_seed(params.seed, {2, li, n}));
            double sum = 0.0;
            if (test_rows.size() >= n) {
                std::vector<std::size_t> pool(test_rows.size());
                std::iota(pool.begin(), pool.end(), std::size_t{0});
                for (std::size_t t = 0; t < n; ++t) {
                    std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
                    std::swap(pool[t], pool[pick(rng)]);
                    sum += probs[pool[t]];
                }
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, test_rows.size() - 1);
                for (std::size_t t = 0; t < n; ++t) {
                    sum += probs[pick(rng)];
                }
            }
            const double p = sum / static_cast<double>(n);
            results[k].folds.push_back({leaves.keys[li], truth, p, p >= 0.5 ? 1 : 0, scaler});
        }
    }

    for (auto& r : results) {
        std::vector<int> truth;
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& f : r.folds) {
            truth.push_back(f.truth);
            scores.push_back(f.probability);
            labels.push_back(f.label);
        }
        if (!truth.empty()) {
            r.metrics = binary_metrics(truth, scores, labels);
        }
    }
    return results;
}

FoldResults loocv_classify(const Dataset& ds, const ClassifyParams& params) {
    const int n[] = {params.n_images};
    return loocv_classify_multi(ds, params, n).front();
}

SweepReport sweep(const Dataset& ds, std::span<const double> thresholds, std::span<const int> n_images_values,
                  const ClassifyParams& base) {
    ds.validate();
    if (thresholds.empty() || n_images_values.empty()) {
        throw InputError("sweep: need at least one threshold and one n_images value");
    }
    if (ds.records.empty()) {
        throw InputError("sweep: empty dataset");
    }
    double lo = ds.records.front().nitrate_ppm;
    double hi = lo;
    for (const auto& r : ds.records) {
        lo = std::min(lo, r.nitrate_ppm);
        hi = std::max(hi, r.nitrate_ppm);
    }
    for (double t : thresholds) {
        if (!(t >= lo && t <= hi)) {
            throw InputError("sweep: threshold " + format_number(t) + " outside observed nitrate range [" +
                             format_number(lo) + ", " + format_number(hi) + "]");
        }
    }

    SweepReport report;
    for (double t : thresholds) {
        ClassifyParams p = base;
        p.threshold_ppm = t;
        const auto y = row_labels(ds, t, p.polarity);
        std::vector<FoldResults> results;
        std::string reason;
        if (single_class(y)) {
            reason = "single class after labeling";
        } else {
            results = loocv_classify_multi(ds, p, n_images_values);
        }
        for (std::size_t k = 0; k < n_images_values.size(); ++k) {
            SweepCell cell;
            cell.threshold_ppm = t;
            cell.n_images = n_images_values[k];
            if (results.empty()) {
                cell.degenerate = true;
                cell.reason = reason;
            } else if (!results[k].metrics.roc_auc || !results[k].metrics.pr_auc) {
                cell.degenerate = true;
                cell.reason = "evaluated folds are single-class";
                cell.result = results[k];
            } else {
                cell.result = results[k];
            }
            report.cells.push_back(std::move(cell));
        }
    }
    for (int n : n_images_values) {
        SweepSummary s;
        s.n_images = n;
        double roc = 0.0;
        double pr = 0.0;
        for (const auto& c : report.cells) {
            if (c.n_images != n) {
                continue;
            }
            if (c.degenerate) {
                ++s.degenerate;
                continue;
            }
            roc += *c.result->metrics.roc_auc;
            pr += *c.result->metrics.pr_auc;
            ++s.models;
        }
        if (s.models > 0) {
            s.mroc = roc / s.models;
            s.mpr = pr / s.models;
        }
        report.summaries.push_back(s);
    }
    return report;
}

RegressionResult loocv_regress(const Dataset& ds, const GbdtParams& params) {
    ds.validate();
    const Groups leaflets = group_rows(ds, [](const SampleRecord& r) { return r.leaflet_key(); });
    if (leaflets.keys.size() < 3) {
        throw InputError("insufficient groups: need at least 3 leaflets");
    }
    auto features = [](const SampleRecord& r) { return std::vector<double>{r.nitrate_ppm, r.resolution, r.exposure_time}; };
    const std::vector<std::string> feature_names = {"nitrate_ppm", "resolution_px", "exposure_time_s"};

    RegressionResult out;
    std::vector<char> held(ds.records.size(), 0);
    for (std::size_t li = 0; li < leaflets.keys.size(); ++li) {
        std::fill(held.begin(), held.end(), 0);
        for (std::size_t i : leaflets.rows[li]) {
            held[i] = 1;
        }
        FeatureMatrix x_train;
        FeatureMatrix y_train;
        for (std::size_t i = 0; i < ds.records.size(); ++i) {
            if (held[i] == 0) {
                x_train.push_back(features(ds.records[i]));
                y_train.push_back({ds.records[i].nnd});
            }
        }
        const Scaler sx = fit_scaler(x_train, feature_names);
        const std::vector<std::string> target_name = {"nnd_mm"};
        const Scaler sy = fit_scaler(y_train, target_name);
        std::vector<double> target;
        target.reserve(y_train.size());
        for (const auto& row : y_train) {
            target.push_back(sy.transform(row).front());
        }
        const GbdtModel model = gbdt_train(sx.transform(x_train), target, Objective::l2, params);
        for (std::size_t i : leaflets.rows[li]) {
            const double z = model.margin(sx.transform(features(ds.records[i])));
            out.truth.push_back(ds.records[i].nnd);
            out.predicted.push_back(sy.inverse(0, z));
        }
        ++out.folds;
    }
    out.rmse = stats::rmse(out.truth, out.predicted);
    out.r2 = stats::r_squared(out.truth, out.predicted);
    out.pearson_r = stats::pearson_r(out.truth, out.predicted);
    return out;
}

FullFit fit_full_classifier(const Dataset& ds, const ClassifyParams& params) {
    ds.validate();
    const auto y = row_labels(ds, params.threshold_ppm, params.polarity);
    if (single_class(y)) {
        throw InputError("single class after labeling at threshold " + format_number(params.threshold_ppm));
    }
    FullFit fit;
    const FeatureMatrix x = feature_matrix(ds);
    fit.scaler = fit_scaler(x, names());
    Resampled balanced = smote(fit.scaler.transform(x), y, params.smote_k, derive_seed(params.seed, {3}));
    fit.x_train = std::move(balanced.x);
    fit.y_train = std::move(balanced.y);
    const std::vector<double> target(fit.y_train.begin(), fit.y_train.end());
    fit.model = gbdt_train(fit.x_train, target, Objective::logistic, params.gbdt);
    return fit;
}

std::vector<LearningPoint> learning_curve(const FullFit& fit) {
    std::vector<double> z(fit.x_train.size(), fit.model.base_score);
    std::vector<double> p(z.size());
    std::vector<LearningPoint> out;
    for (std::size_t k = 0; k < fit.model.trees.size(); ++k) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += fit.model.learning_rate * fit.model.trees[k].evaluate(fit.x_train[i]);
            p[i] = sigmoid(z[i]);
        }
        out.push_back({static_cast<int>(k + 1), fit.model.train_loss[k + 1], pr_auc(fit.y_train, p)});
    }
    return out;
}

std::vector<double> shap_summary(const FullFit& fit, const Dataset& ds, std::size_t max_background,
                                 std::uint64_t seed) {
    const FeatureMatrix rows = fit.scaler.transform(feature_matrix(ds));
    if (rows.empty()) {
        throw InputError("shap_summary: empty dataset");
    }
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, {4}));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(std::max<std::size_t>(max_background, 1), idx.size()));
    std::sort(idx.begin(), idx.end());
    FeatureMatrix background;
    for (std::size_t i : idx) {
        background.push_back(rows[i]);
    }
    std::vector<double> mean_abs(static_cast<std::size_t>(fit.model.n_features), 0.0);
    for (const auto& r : rows) {
        const ShapleyResult s = shapley(fit.model, r, background);
        for (std::size_t j = 0; j < mean_abs.size(); ++j) {
            mean_abs[j] += std::abs(s.phi[j]);
        }
    }
    for (auto& v : mean_abs) {
        v /= static_cast<double>(rows.size());
    }
    return mean_abs;
}

}  // namespace trichome::ml
