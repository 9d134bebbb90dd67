#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trichome/dataset.hpp"

namespace trichome::ml {

using FeatureMatrix = std::vector<std::vector<double>>;  // rows

// ---------------------------------------------------------------------------
// Scaling and resampling
// ---------------------------------------------------------------------------

struct Scaler {
    std::vector<double> mean;
    std::vector<double> std;  // population standard deviation

    std::vector<double> transform(std::span<const double> row) const;
    FeatureMatrix transform(const FeatureMatrix& x) const;
    /// Inverse of transform for a single column.
    double inverse(std::size_t column, double value) const;
};

/// Per-column mean and population std. Throws InputError naming the first
/// constant column (names optional) or when fewer than 2 rows are given.
Scaler fit_scaler(const FeatureMatrix& x, std::span<const std::string> names = {});
FeatureMatrix apply_scaler(const Scaler& s, const FeatureMatrix& x);

struct Resampled {
    FeatureMatrix x;
    std::vector<int> y;
    std::size_t synthetic = 0;  // appended after the original rows
};

/// Oversamples the minority class to the majority count. Each synthetic row
/// interpolates a random minority row toward one of its k nearest minority
/// neighbours (k capped at minority - 1; ties by index).
Resampled smote(const FeatureMatrix& x, std::span<const int> y, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient-boosted trees
// ---------------------------------------------------------------------------

enum class Objective { logistic, l2 };

struct GbdtParams {
    int rounds = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int min_samples_leaf = 20;
    double min_sum_hessian = 1e-3;
};

struct TreeNode {
    int feature = -1;  // leaf when negative
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output before learning-rate scaling
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double evaluate(std::span<const double> x) const;
};

struct GbdtModel {
    Objective objective = Objective::logistic;
    double learning_rate = 0.1;
    double base_score = 0.0;
    int n_features = 0;
    std::vector<Tree> trees;
    /// Mean training loss at the base score and after each round.
    std::vector<double> train_loss;

    /// z = base_score + learning_rate * sum_k f_k(x).
    double margin(std::span<const double> x) const;
};

struct GradHess {
    double grad = 0.0;  // d loss / d z
    double hess = 0.0;
};

double sigmoid(double z);
/// log(1 + e^z) - y z, evaluated without overflow.
double logistic_loss(double y, double z);
GradHess logistic_grad_hess(double y, double z);
double l2_loss(double y, double z);  // (y - z)^2 / 2
GradHess l2_grad_hess(double y, double z);

/// Trains `rounds` leaf-wise trees with exact greedy splits on G^2/H gain.
/// If a round would raise the training loss its step is halved until it
/// does not (a zero step in the limit), so train_loss never increases.
GbdtModel gbdt_train(const FeatureMatrix& x, std::span<const double> y, Objective objective,
                     const GbdtParams& params = {});

struct Prediction {
    double z = 0.0;
    double p = 0.0;
    int label = 0;
};

/// p = sigmoid(z); label = 1 iff p >= 0.5.
Prediction gbdt_predict(const GbdtModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
};

struct BinaryMetrics {
    Confusion confusion;
    double precision = 0.0;  // 0 when nothing is predicted positive
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> roc_auc;  // absent for single-class truth
    std::optional<double> pr_auc;
};

/// Area under the ROC curve: the fraction of (positive, negative) pairs
/// ranked correctly, ties counting one half.
double roc_auc(std::span<const int> y_true, std::span<const double> scores);
/// Average precision: sum over distinct thresholds of (R_k - R_{k-1}) P_k.
double pr_auc(std::span<const int> y_true, std::span<const double> scores);

BinaryMetrics binary_metrics(std::span<const int> y_true, std::span<const double> scores,
                             std::span<const int> labels);

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;  // FPR for ROC, recall for PR
    double y = 0.0;  // TPR for ROC, precision for PR
};

std::vector<CurvePoint> roc_curve(std::span<const int> y_true, std::span<const double> scores);
std::vector<CurvePoint> pr_curve(std::span<const int> y_true, std::span<const double> scores);

// ---------------------------------------------------------------------------
// Attribution
// ---------------------------------------------------------------------------

struct ShapleyResult {
    std::vector<double> phi;
    double base = 0.0;  // mean margin over the background
};

/// Exact interventional Shapley values over all 2^M coalitions.
ShapleyResult shapley(const GbdtModel& model, std::span<const double> x, const FeatureMatrix& background);

// ---------------------------------------------------------------------------
// Grouped cross-validation
// ---------------------------------------------------------------------------

/// Which side of the nitrate threshold is the positive class. The default
/// gives label 0 to leaves below the threshold and 1 otherwise.
enum class Polarity { below_is_zero, below_is_one };

int nitrate_label(double nitrate_ppm, double threshold_ppm, Polarity polarity);

struct ClassifyParams {
    double threshold_ppm = 0.0;
    int n_images = 25;
    std::uint64_t seed = 0;
    Polarity polarity = Polarity::below_is_zero;
    int smote_k = 5;
    GbdtParams gbdt;
};

struct FoldOutcome {
    std::string leaf;
    int truth = 0;
    double probability = 0.0;
    int label = 0;
    Scaler scaler;  // fitted on this fold's training leaves
};

struct FoldResults {
    double threshold_ppm = 0.0;
    int n_images = 0;
    std::vector<FoldOutcome> folds;          // evaluated folds, leaf order
    std::vector<std::string> skipped_folds;  // single-class training sets
    BinaryMetrics metrics;
};

/// Leave-one-compound-leaf-out classification. Scaling and SMOTE are fitted
/// on the training leaves only; the held-out leaf is scored by averaging the
/// probabilities of n_images rows drawn from it (with replacement only if it
/// has fewer rows).
FoldResults loocv_classify(const Dataset& ds, const ClassifyParams& params);

/// Same folds and seeds as loocv_classify, evaluated for several n_images
/// values from one set of trained models.
std::vector<FoldResults> loocv_classify_multi(const Dataset& ds, const ClassifyParams& params,
                                              std::span<const int> n_images_values);

struct SweepCell {
    double threshold_ppm = 0.0;
    int n_images = 0;
    bool degenerate = false;
    std::string reason;
    std::optional<FoldResults> result;
};

struct SweepSummary {
    int n_images = 0;
    std::optional<double> mroc;
    std::optional<double> mpr;
    int models = 0;      // non-degenerate thresholds averaged
    int degenerate = 0;  // thresholds excluded
};

struct SweepReport {
    std::vector<SweepCell> cells;  // threshold-major
    std::vector<SweepSummary> summaries;  // one per n_images value
};

/// `count` evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int count);

SweepReport sweep(const Dataset& ds, std::span<const double> thresholds, std::span<const int> n_images_values,
                  const ClassifyParams& base);

struct RegressionResult {
    double rmse = 0.0;
    double r2 = 0.0;
    double pearson_r = 0.0;
    std::vector<double> truth;      // out-of-fold, leaflet order
    std::vector<double> predicted;
    int folds = 0;
};

/// Leave-one-leaflet-out regression of nnd on nitrate, resolution and
/// exposure time, scaling features and target on the training folds.
RegressionResult loocv_regress(const Dataset& ds, const GbdtParams& params = {});

/// Features, labels and a fitted model on the whole dataset, as used for the
/// learning curve and attribution summaries.
struct FullFit {
    Scaler scaler;
    FeatureMatrix x_train;  // scaled, after SMOTE
    std::vector<int> y_train;
    GbdtModel model;
};

FullFit fit_full_classifier(const Dataset& ds, const ClassifyParams& params);

struct LearningPoint {
    int round = 0;
    double train_loss = 0.0;
    double train_pr_auc = 0.0;
};

std::vector<LearningPoint> learning_curve(const FullFit& fit);

/// Mean |phi| per feature over all dataset rows, background subsampled to
/// at most max_background rows.
std::vector<double> shap_summary(const FullFit& fit, const Dataset& ds, std::size_t max_background,
                                 std::uint64_t seed);

FeatureMatrix feature_matrix(const Dataset& ds);

}  // namespace trichome::ml
