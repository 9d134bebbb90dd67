#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "trichome/dataset.hpp"
#include "trichome/error.hpp"
#include "trichome/stats.hpp"

using namespace trichome;
using namespace trichome::stats;

namespace {

// Exact two-sided p of the signed-rank statistic over all 2^n sign patterns.
double exact_wilcoxon_p(int n, int w_plus) {
    const int max_w = n * (n + 1) / 2;
    std::vector<double> count(static_cast<std::size_t>(max_w) + 1, 0.0);
    for (int m = 0; m < (1 << n); ++m) {
        int w = 0;
        for (int i = 0; i < n; ++i) {
            w += (m >> i & 1) ? i + 1 : 0;
        }
        count[static_cast<std::size_t>(w)] += 1.0;
    }
    const double mu = max_w / 2.0;
    double p = 0.0;
    for (int w = 0; w <= max_w; ++w) {
        if (std::abs(w - mu) >= std::abs(w_plus - mu) - 1e-9) {
            p += count[static_cast<std::size_t>(w)];
        }
    }
    return p / (1 << n);
}

// Exact two-sided p of U over every assignment of ranks 1..n1+n2.
double exact_mann_whitney_p(int n1, int n2, double u_obs) {
    std::vector<int> sel(static_cast<std::size_t>(n1 + n2), 0);
    std::fill(sel.end() - n1, sel.end(), 1);
    const double mu = n1 * n2 / 2.0;
    double hits = 0.0;
    double total = 0.0;
    do {
        int rank_sum = 0;
        for (int i = 0; i < n1 + n2; ++i) {
            rank_sum += sel[static_cast<std::size_t>(i)] ? i + 1 : 0;
        }
        const double u = rank_sum - n1 * (n1 + 1) / 2.0;
        hits += std::abs(u - mu) >= std::abs(u_obs - mu) - 1e-9 ? 1.0 : 0.0;
        total += 1.0;
    } while (std::next_permutation(sel.begin(), sel.end()));
    return hits / total;
}

// H = 12 / (N (N + 1)) sum R_i^2 / n_i - 3 (N + 1) for tie-free data.
double hand_h(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) {
        all.insert(all.end(), g.begin(), g.end());
    }
    std::sort(all.begin(), all.end());
    const double n = static_cast<double>(all.size());
    double sum = 0.0;
    for (const auto& g : groups) {
        double r = 0.0;
        for (double v : g) {
            r += static_cast<double>(std::lower_bound(all.begin(), all.end(), v) - all.begin() + 1);
        }
        sum += r * r / static_cast<double>(g.size());
    }
    return 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
}

std::vector<double> normal_column(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = z(rng);
    }
    return v;
}

}  // namespace

TEST(Quantile, Type7Interpolates) {
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_type7({7}, 0.9), 7.0);
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4, 5}, 1.0), 5.0);
}

TEST(AverageRanks, TiesShareTheMean) {
    const std::vector<double> v{10, 20, 20, 5};
    EXPECT_EQ(average_ranks(v), (std::vector<double>{2.0, 3.5, 3.5, 1.0}));
}

TEST(KruskalWallis, IdenticalGroupsAreNull) {
    const std::vector<std::vector<double>> g{{4, 4, 4}, {4, 4}, {4, 4, 4}};
    const auto r = kruskal_wallis(g);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(KruskalWallis, SeparatedGroupsAreSignificant) {
    const std::vector<std::vector<double>> g{{1, 2, 3}, {11, 12, 13}, {21, 22, 23}};
    EXPECT_LT(kruskal_wallis(g).p_value, 0.05);
}

TEST(KruskalWallis, HandCaseMatchesRankArithmetic) {
    // Rank sums 3, 7, 11 over N = 6 give H = 32/7, not the 5.0 quoted for this case.
    const std::vector<std::vector<double>> g{{1, 2}, {3, 4}, {5, 6}};
    const auto r = kruskal_wallis(g);
    EXPECT_NEAR(r.statistic, hand_h(g), 1e-12);
    EXPECT_NEAR(r.statistic, 32.0 / 7.0, 1e-12);
    EXPECT_NEAR(r.p_value, std::exp(-r.statistic / 2.0), 1e-12);
}

TEST(KruskalWallis, TooFewValuesThrows) {
    const std::vector<std::vector<double>> one{{1, 2, 3, 4, 5}};
    EXPECT_THROW(kruskal_wallis(one), InputError);
    const std::vector<std::vector<double>> tiny{{1}, {2, 3}};
    EXPECT_THROW(kruskal_wallis(tiny), InputError);
}

TEST(MannWhitney, IdenticalSamplesGiveOne) {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<SamplePair> pairs{{a, a}, {a, a}};
    for (const auto& r : mann_whitney_bonferroni(pairs)) {
        EXPECT_NEAR(r.p_value, 1.0, 1e-12);
        EXPECT_EQ(r.adjusted_p, 1.0);
    }
}

TEST(MannWhitney, DisjointSamplesAreSignificantAfterCorrection) {
    std::vector<double> a;
    std::vector<double> b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(i);
        b.push_back(100 + i);
    }
    const std::vector<SamplePair> pairs{{a, b}, {b, a}, {a, a}};
    const auto r = mann_whitney_bonferroni(pairs);
    EXPECT_EQ(r[0].statistic, 0.0);
    EXPECT_LT(r[0].adjusted_p, 0.01);
    EXPECT_DOUBLE_EQ(r[0].adjusted_p, std::min(1.0, 3.0 * r[0].p_value));
}

TEST(MannWhitney, EightByEightAgreesWithExactEnumeration) {
    for (int u = 0; u <= 64; ++u) {
        // First sample takes the u smallest-to-largest swap pattern giving U = u.
        std::vector<double> a;
        std::vector<double> b;
        std::vector<int> in_a(16, 0);
        int remaining = u;
        for (int k = 7; k >= 0; --k) {
            const int shift = std::min(remaining, 8);
            in_a[static_cast<std::size_t>(k + shift)] = 1;
            remaining -= shift;
        }
        for (int i = 0; i < 16; ++i) {
            (in_a[static_cast<std::size_t>(i)] ? a : b).push_back(i + 1);
        }
        ASSERT_EQ(a.size(), 8u) << u;
        const auto r = mann_whitney(a, b);
        ASSERT_EQ(r.statistic, u);
        EXPECT_NEAR(r.p_value, exact_mann_whitney_p(8, 8, u), 0.03) << u;
    }
}

TEST(Wilcoxon, AntisymmetricDifferencesAreNull) {
    const std::vector<double> d{1, -1, 2, -2, 3, -3};
    EXPECT_GE(wilcoxon_signed_rank(d).p_value, 0.5);
}

TEST(Wilcoxon, AllPositiveIsSignificant) {
    std::vector<double> d;
    for (int i = 1; i <= 30; ++i) {
        d.push_back(0.1 * i);
    }
    const auto r = wilcoxon_signed_rank(d);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_LT(r.p_value, 0.001);
    EXPECT_LT(wilcoxon_signed_rank(d, Alternative::greater).p_value, r.p_value);
    EXPECT_GT(wilcoxon_signed_rank(d, Alternative::less).p_value, 0.99);
}

TEST(Wilcoxon, ZerosAreDroppedAndAllZeroIsDegenerate) {
    const std::vector<double> d{0, 1, -2, 3, 4, -5, 6, 0};
    const std::vector<double> without{1, -2, 3, 4, -5, 6};
    EXPECT_EQ(wilcoxon_signed_rank(d).p_value, wilcoxon_signed_rank(without).p_value);
    const std::vector<double> zeros(10, 0.0);
    try {
        wilcoxon_signed_rank(zeros);
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_STREQ(e.what(), "degenerate pairing");
    }
}

TEST(Wilcoxon, EightPairsAgreeWithExactEnumeration) {
    for (int m = 0; m < 256; ++m) {
        std::vector<double> d;
        int w_plus = 0;
        for (int i = 0; i < 8; ++i) {
            const bool positive = (m >> i & 1) != 0;
            d.push_back(positive ? i + 1 : -(i + 1));
            w_plus += positive ? i + 1 : 0;
        }
        EXPECT_NEAR(wilcoxon_signed_rank(d).p_value, exact_wilcoxon_p(8, w_plus), 0.03) << m;
    }
}

TEST(RankTests, MonotoneTransformLeavesResultsUnchanged) {
    std::mt19937_64 rng(5);
    const auto a = normal_column(rng, 12);
    const auto b = normal_column(rng, 9);
    const auto c = normal_column(rng, 7);
    const auto ex = [](std::vector<double> v) {
        for (auto& x : v) {
            x = std::exp(x);
        }
        return v;
    };
    const auto mw = mann_whitney(a, b);
    const auto mw_t = mann_whitney(ex(a), ex(b));
    EXPECT_EQ(mw.statistic, mw_t.statistic);
    EXPECT_EQ(mw.p_value, mw_t.p_value);
    const std::vector<std::vector<double>> g{a, b, c};
    const std::vector<std::vector<double>> gt{ex(a), ex(b), ex(c)};
    EXPECT_EQ(kruskal_wallis(g).statistic, kruskal_wallis(gt).statistic);
    const auto w = wilcoxon_signed_rank(a);
    // exp is not sign-preserving; cube is.
    auto cubed = a;
    for (auto& x : cubed) {
        x = x * x * x;
    }
    EXPECT_EQ(w.statistic, wilcoxon_signed_rank(cubed).statistic);
    EXPECT_EQ(w.p_value, wilcoxon_signed_rank(cubed).p_value);
}

TEST(RankTests, PValuesStayInUnitInterval) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> size(2, 15);
    std::uniform_int_distribution<int> level(0, 4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(size(rng)));
        std::vector<double> b(static_cast<std::size_t>(size(rng)));
        for (auto& x : a) {
            x = level(rng);
        }
        for (auto& x : b) {
            x = level(rng);
        }
        const double p = mann_whitney(a, b).p_value;
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 1.0);
        const std::vector<std::vector<double>> g{a, b};
        const double h = kruskal_wallis(g).p_value;
        ASSERT_GE(h, 0.0);
        ASSERT_LE(h, 1.0);
    }
}

TEST(Vif, IndependentColumnsAreNearOne) {
    std::mt19937_64 rng(1);
    const std::vector<std::vector<double>> cols{normal_column(rng, 10000), normal_column(rng, 10000)};
    const auto r = vif(cols);
    EXPECT_NEAR(r.vif[0], 1.0, 0.05);
    EXPECT_NEAR(r.vif[1], 1.0, 0.05);
    EXPECT_FALSE(r.capped[0]);
}

TEST(Vif, DuplicateColumnIsCapped) {
    std::mt19937_64 rng(2);
    const auto x = normal_column(rng, 50);
    const std::vector<std::vector<double>> cols{x, x};
    const auto r = vif(cols);
    EXPECT_TRUE(r.capped[0]);
    EXPECT_TRUE(r.capped[1]);
    EXPECT_EQ(r.vif[0], kVifCap);
}

TEST(Vif, ConstructedCorrelationGivesTen) {
    // x2 = x1 + e with var(e) = 1/9 gives population R^2 = 0.9.
    std::mt19937_64 rng(3);
    const auto x1 = normal_column(rng, 20000);
    auto x2 = normal_column(rng, 20000);
    for (std::size_t i = 0; i < x2.size(); ++i) {
        x2[i] = x1[i] + x2[i] / 3.0;
    }
    const std::vector<std::vector<double>> cols{x1, x2};
    const auto r = vif(cols);
    EXPECT_NEAR(r.vif[0], 10.0, 1.0);
    EXPECT_NEAR(r.vif[1], 10.0, 1.0);
}

TEST(Vif, OrthonormalDesignIsExactlyOne) {
    // Centered, mutually orthogonal +-1 columns.
    const std::vector<std::vector<double>> cols{{1, -1, 1, -1, 1, -1, 1, -1},
                                                {1, 1, -1, -1, 1, 1, -1, -1},
                                                {1, 1, 1, 1, -1, -1, -1, -1}};
    for (double v : vif(cols).vif) {
        EXPECT_NEAR(v, 1.0, 1e-9);
    }
}

TEST(Ols, ExactLineIsRecovered) {
    const std::vector<double> x{0, 1, 2, 3, 4};
    const std::vector<double> y{1, 3, 5, 7, 9};
    const auto f = fit_line(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    const std::vector<std::vector<double>> cols{x};
    const auto m = ols(cols, y);
    EXPECT_NEAR(m.coefficients[0], 1.0, 1e-12);
    EXPECT_NEAR(m.coefficients[1], 2.0, 1e-12);
}

namespace {

ml::SampleRecord record(int i, double resolution, double nitrate, double nnd) {
    ml::SampleRecord r;
    r.plant_id = "p";
    r.compound_leaf_id = std::to_string(i);
    r.leaflet_id = "a";
    r.nnd = nnd;
    r.resolution = resolution;
    r.exposure_time = 0.01;
    r.iso = 100;
    r.nitrate_ppm = nitrate;
    return r;
}

}  // namespace

TEST(StratifiedOls, SingleStratumExactFit) {
    ml::Dataset ds;
    for (int i = 0; i < 10; ++i) {
        ds.records.push_back(record(i, 1e6 + i, i, 2.0 * i + 1.0));
    }
    const auto strata = stratified_ols(ds, {});
    ASSERT_EQ(strata.size(), 1u);
    ASSERT_TRUE(strata[0].fit.has_value());
    EXPECT_NEAR(strata[0].fit->slope, 2.0, 1e-12);
    EXPECT_NEAR(strata[0].fit->intercept, 1.0, 1e-12);
}

TEST(StratifiedOls, CutsAtFifteenthAndEightyFifthPercentiles) {
    ml::Dataset ds;
    for (int i = 0; i < 101; ++i) {
        ds.records.push_back(record(i, 100.0 + i, i % 7, 1.0));
    }
    const auto strata = stratified_ols(ds);
    ASSERT_EQ(strata.size(), 3u);
    // Type-7 percentiles of 100..200 are 115 and 185.
    EXPECT_EQ(strata[0].n, 15u);
    EXPECT_EQ(strata[0].resolution_hi, 114.0);
    EXPECT_EQ(strata[1].resolution_lo, 115.0);
    EXPECT_EQ(strata[1].resolution_hi, 185.0);
    EXPECT_EQ(strata[2].n, 15u);
}

TEST(StratifiedOls, RecoversConstructedInteraction) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> nitrate(500.0, 3000.0);
    std::normal_distribution<double> noise(0.0, 0.002);
    ml::Dataset ds;
    for (int i = 0; i < 600; ++i) {
        const double res = 1e6 + 1000.0 * i;
        const double x = nitrate(rng);
        const double slope = i >= 510 ? 2e-4 : 1e-4;
        ds.records.push_back(record(i, res, x, 0.3 + slope * x + noise(rng)));
    }
    const auto strata = stratified_ols(ds);
    ASSERT_EQ(strata.size(), 3u);
    EXPECT_NEAR(strata[0].fit->slope, 1e-4, 0.05e-4);
    EXPECT_NEAR(strata[1].fit->slope, 1e-4, 0.05e-4);
    EXPECT_NEAR(strata[2].fit->slope, 2e-4, 0.1e-4);
}

TEST(StratifiedOls, SmallStratumHasNoFit) {
    ml::Dataset ds;
    for (int i = 0; i < 8; ++i) {
        ds.records.push_back(record(i, 100.0 + i, i, i));
    }
    const auto strata = stratified_ols(ds);
    EXPECT_EQ(strata[0].n, 2u);
    EXPECT_FALSE(strata[0].fit.has_value());
}

TEST(Correlation, PearsonRmseAndR2) {
    const std::vector<double> t{1, 2, 3, 4};
    const std::vector<double> p{2, 4, 6, 8};
    EXPECT_NEAR(pearson_r(t, p), 1.0, 1e-12);
    EXPECT_NEAR(rmse(t, t), 0.0, 1e-12);
    EXPECT_NEAR(rmse(t, std::vector<double>{2, 3, 4, 5}), 1.0, 1e-12);
    EXPECT_NEAR(r_squared(t, t), 1.0, 1e-12);
    EXPECT_NEAR(r_squared(t, std::vector<double>{2.5, 2.5, 2.5, 2.5}), 0.0, 1e-12);
}

TEST(Distributions, KnownTailValues) {
    EXPECT_NEAR(normal_sf(0.0), 0.5, 1e-15);
    EXPECT_NEAR(normal_sf(1.959963984540054), 0.025, 1e-12);
    EXPECT_NEAR(chi_square_sf(5.991464547107979, 2.0), 0.05, 1e-12);
    EXPECT_NEAR(chi_square_sf(3.841458820694124, 1.0), 0.05, 1e-12);
}
