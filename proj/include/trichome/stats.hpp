#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trichome::ml {
struct Dataset;
}

namespace trichome::stats {

/// Linear-interpolation quantile (Hyndman-Fan type 7), q in [0, 1].
double quantile_type7(std::vector<double> values, double q);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

enum class Method { kruskal_wallis, mann_whitney, wilcoxon_signed_rank };
enum class Alternative { two_sided, greater, less };

const char* method_name(Method m);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double adjusted_p = 1.0;  // equals p_value unless a correction was applied
    std::vector<std::size_t> n;
    Method method = Method::kruskal_wallis;
};

/// H with tie correction; chi-square approximation with groups - 1 dof.
/// All-identical data gives H = 0, p = 1.
TestResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// Two-sided U test: normal approximation with tie and continuity
/// corrections. statistic = U of the first sample.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b);

struct SamplePair {
    std::vector<double> a;
    std::vector<double> b;
};

/// One U test per pair; adjusted_p = min(1, p * pairs.size()).
std::vector<TestResult> mann_whitney_bonferroni(std::span<const SamplePair> pairs);

/// Signed-rank test on paired differences. Zeros are dropped; statistic is
/// min(W+, W-); normal approximation with tie and continuity corrections.
/// `greater` tests whether differences tend to be positive.
TestResult wilcoxon_signed_rank(std::span<const double> differences, Alternative alt = Alternative::two_sided);

// ---------------------------------------------------------------------------
// Regression and collinearity
// ---------------------------------------------------------------------------

struct LinearFit {
    std::vector<double> coefficients;  // intercept first
    double r2 = 0.0;
    bool singular = false;
};

/// OLS with intercept via the normal equations and pivoted elimination.
/// `columns` holds one vector per regressor.
LinearFit ols(std::span<const std::vector<double>> columns, std::span<const double> y);

struct VifResult {
    std::vector<double> vif;
    std::vector<bool> capped;  // perfect collinearity, reported at the cap
};

inline constexpr double kVifCap = 1e12;

/// Variance inflation factor of each column: 1 / (1 - R^2) from regressing
/// it on all the others, with R^2 clamped below 1 - 1e-12.
VifResult vif(std::span<const std::vector<double>> columns);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct Stratum {
    std::string name;
    double resolution_lo = 0.0;  // inclusive bounds actually used
    double resolution_hi = 0.0;
    std::size_t n = 0;
    std::optional<LineFit> fit;  // absent when n < 3
};

/// Splits rows at the given resolution percentiles and fits
/// nnd = slope * nitrate + intercept in each stratum. Rows at a cut value
/// belong to the lower-middle stratum (below = strictly less than the
/// first cut, above = strictly greater than the last).
std::vector<Stratum> stratified_ols(const ml::Dataset& ds, std::vector<double> percentile_cuts = {15.0, 85.0});

double pearson_r(std::span<const double> x, std::span<const double> y);
double rmse(std::span<const double> truth, std::span<const double> pred);
/// 1 - SS_res / SS_tot.
double r_squared(std::span<const double> truth, std::span<const double> pred);

/// Standard normal upper tail and chi-square survival function.
double normal_sf(double z);
double chi_square_sf(double x, double dof);

}  // namespace trichome::stats
