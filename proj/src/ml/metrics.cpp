#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "trichome/error.hpp"
#include "trichome/ml.hpp"

namespace trichome::ml {

namespace {

void check_inputs(std::span<const int> y, std::span<const double> scores) {
    if (y.size() != scores.size()) {
        throw InputError("metrics: truth and score lengths differ");
    }
    for (int v : y) {
        if (v != 0 && v != 1) {
            throw InputError("metrics: labels must be 0 or 1");
        }
    }
    for (double s : scores) {
        if (std::isnan(s)) {
            throw InputError("metrics: NaN score");
        }
    }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> y) {
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    return {pos, y.size() - pos};
}

void require_both_classes(std::span<const int> y) {
    const auto [pos, neg] = class_counts(y);
    if (pos == 0 || neg == 0) {
        throw InputError("metrics: AUC needs both classes");
    }
}

// Indices sorted by descending score; equal scores form one threshold.
std::vector<std::size_t> descending(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

double roc_auc(std::span<const int> y_true, std::span<const double> scores) {
    check_inputs(y_true, scores);
    require_both_classes(y_true);
    const auto [pos, neg] = class_counts(y_true);
    // Twice the Mann-Whitney U of the positives, in exact integer arithmetic.
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::uint64_t twice_u = 0;
    std::uint64_t neg_below = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        std::uint64_t p = 0;
        std::uint64_t q = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            (y_true[idx[j]] == 1 ? p : q) += 1;
            ++j;
        }
        twice_u += p * (2 * neg_below + q);
        neg_below += q;
        i = j;
    }
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<CurvePoint> pr_curve(std::span<const int> y_true, std::span<const double> scores) {
    check_inputs(y_true, scores);
    const auto [pos, neg] = class_counts(y_true);
    (void)neg;
    if (pos == 0) {
        throw InputError("metrics: PR curve needs positives");
    }
    const auto idx = descending(scores);
    std::vector<CurvePoint> out;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double t = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == t) {
            (y_true[idx[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        out.push_back({t, static_cast<double>(tp) / static_cast<double>(pos),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    return out;
}

double pr_auc(std::span<const int> y_true, std::span<const double> scores) {
    require_both_classes(y_true);
    double area = 0.0;
    double prev_recall = 0.0;
    for (const auto& pt : pr_curve(y_true, scores)) {
        area += (pt.x - prev_recall) * pt.y;
        prev_recall = pt.x;
    }
    return area;
}

std::vector<CurvePoint> roc_curve(std::span<const int> y_true, std::span<const double> scores) {
    check_inputs(y_true, scores);
    require_both_classes(y_true);
    const auto [pos, neg] = class_counts(y_true);
    const auto idx = descending(scores);
    std::vector<CurvePoint> out;
    out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double t = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == t) {
            (y_true[idx[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        out.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                       static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return out;
}

BinaryMetrics binary_metrics(std::span<const int> y_true, std::span<const double> scores,
                             std::span<const int> labels) {
    check_inputs(y_true, scores);
    if (labels.size() != y_true.size()) {
        throw InputError("metrics: truth and label lengths differ");
    }
    BinaryMetrics m;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw InputError("metrics: predicted labels must be 0 or 1");
        }
        if (labels[i] == 1) {
            (y_true[i] == 1 ? m.confusion.tp : m.confusion.fp) += 1;
        } else {
            (y_true[i] == 1 ? m.confusion.fn : m.confusion.tn) += 1;
        }
    }
    const auto& c = m.confusion;
    m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const auto [pos, neg] = class_counts(y_true);
    if (pos > 0 && neg > 0) {
        m.roc_auc = roc_auc(y_true, scores);
        m.pr_auc = pr_auc(y_true, scores);
    }
    return m;
}

}  // namespace trichome::ml
