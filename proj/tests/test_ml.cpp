#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "trichome/error.hpp"
#include "trichome/image.hpp"
#include "trichome/ml.hpp"
#include "trichome/stats.hpp"

using namespace trichome;
using namespace trichome::ml;

namespace {

FeatureMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> z(0.0, 1.0);
    FeatureMatrix x(rows, std::vector<double>(cols));
    for (auto& r : x) {
        for (auto& v : r) {
            v = z(rng);
        }
    }
    return x;
}

// Step-sum average precision by scanning every distinct score as a cut.
double step_sum_pr_auc(const std::vector<int>& y, const std::vector<double>& s) {
    std::vector<double> cuts = s;
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const double positives = static_cast<double>(std::count(y.begin(), y.end(), 1));
    double area = 0.0;
    double prev_recall = 0.0;
    for (double t : cuts) {
        double tp = 0.0;
        double predicted = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (s[i] >= t) {
                predicted += 1.0;
                tp += y[i];
            }
        }
        const double recall = tp / positives;
        area += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    return area;
}

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Andrew's monotone chain, counter-clockwise.
std::vector<Point2> convex_hull(std::vector<Point2> p) {
    std::sort(p.begin(), p.end(), [](Point2 a, Point2 b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    std::vector<Point2> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) {
            --k;
        }
        h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) {
            --k;
        }
        h[k++] = p[i - 1];
    }
    h.resize(k - 1);
    return h;
}

SampleRecord make_record(const std::string& leaf, const std::string& leaflet, double nnd, double resolution,
                         double exposure, double nitrate) {
    SampleRecord r;
    r.plant_id = "p1";
    r.compound_leaf_id = leaf;
    r.leaflet_id = leaflet;
    r.nnd = nnd;
    r.resolution = resolution;
    r.exposure_time = exposure;
    r.iso = 100;
    r.nitrate_ppm = nitrate;
    return r;
}

// Leaf i has nitrate 1000 + 100 i and nnd rising with nitrate, so nnd alone
// orders the labels at any interior threshold.
Dataset monotone_dataset(int leaves, int images, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 0.002);
    std::uniform_real_distribution<double> res(8e6, 12e6);
    std::uniform_real_distribution<double> exposure(0.005, 0.02);
    Dataset ds;
    for (int i = 0; i < leaves; ++i) {
        const double nitrate = 1000.0 + 100.0 * i;
        for (int k = 0; k < images; ++k) {
            ds.records.push_back(make_record("L" + std::to_string(i), "a", 0.3 + 1e-4 * nitrate + jitter(rng), res(rng),
                                             exposure(rng), nitrate));
        }
    }
    return ds;
}

// Features carry no information about the nitrate assigned to each leaf.
Dataset permuted_dataset(int leaves, int images, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> nitrate(static_cast<std::size_t>(leaves));
    for (int i = 0; i < leaves; ++i) {
        nitrate[static_cast<std::size_t>(i)] = 1000.0 + 10.0 * i;
    }
    std::shuffle(nitrate.begin(), nitrate.end(), rng);
    std::normal_distribution<double> nnd(0.45, 0.05);
    std::uniform_real_distribution<double> res(8e6, 12e6);
    std::uniform_real_distribution<double> exposure(0.005, 0.02);
    Dataset ds;
    for (int i = 0; i < leaves; ++i) {
        for (int k = 0; k < images; ++k) {
            ds.records.push_back(make_record("L" + std::to_string(i), "a", nnd(rng), res(rng), exposure(rng),
                                             nitrate[static_cast<std::size_t>(i)]));
        }
    }
    return ds;
}

ClassifyParams classify_params(double threshold, int n_images) {
    ClassifyParams p;
    p.threshold_ppm = threshold;
    p.n_images = n_images;
    p.seed = 3;
    return p;
}

}  // namespace

TEST(Scaler, TwoPointColumnBecomesPlusMinusOne) {
    const FeatureMatrix x{{1.0}, {3.0}};
    const auto s = fit_scaler(x);
    const auto t = apply_scaler(s, x);
    EXPECT_DOUBLE_EQ(t[0][0], -1.0);
    EXPECT_DOUBLE_EQ(t[1][0], 1.0);
    EXPECT_DOUBLE_EQ(s.inverse(0, 1.0), 3.0);
}

TEST(Scaler, FittedColumnsAreStandardizedAndRefitIsIdentity) {
    std::mt19937_64 rng(1);
    auto x = random_matrix(rng, 200, 3);
    for (auto& r : x) {
        r[1] = 1000.0 + 50.0 * r[1];
    }
    const auto t = apply_scaler(fit_scaler(x), x);
    for (std::size_t c = 0; c < 3; ++c) {
        double m = 0.0;
        double v = 0.0;
        for (const auto& r : t) {
            m += r[c];
        }
        m /= static_cast<double>(t.size());
        for (const auto& r : t) {
            v += (r[c] - m) * (r[c] - m);
        }
        EXPECT_NEAR(m, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(v / static_cast<double>(t.size())), 1.0, 1e-9);
    }
    const auto again = apply_scaler(fit_scaler(t), t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            ASSERT_NEAR(again[i][c], t[i][c], 1e-9);
        }
    }
}

TEST(Scaler, ConstantColumnIsNamed) {
    const FeatureMatrix x{{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
    const std::vector<std::string> names{"nnd_mm", "resolution_px"};
    try {
        fit_scaler(x, names);
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("resolution_px"), std::string::npos) << e.what();
    }
    EXPECT_THROW(fit_scaler(FeatureMatrix{{1.0}}), InputError);
}

TEST(Smote, BalancedInputIsUnchanged) {
    const FeatureMatrix x{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const std::vector<int> y{0, 1, 0, 1};
    const auto r = smote(x, y, 5, 1);
    EXPECT_EQ(r.x, x);
    EXPECT_EQ(r.y, y);
    EXPECT_EQ(r.synthetic, 0u);
}

TEST(Smote, TwoPointMinorityStaysOnTheSegment) {
    FeatureMatrix x{{0, 0}, {1, 0}};
    std::vector<int> y{1, 1};
    for (int i = 0; i < 8; ++i) {
        x.push_back({5.0 + i, 5.0});
        y.push_back(0);
    }
    const auto r = smote(x, y, 5, 2);
    EXPECT_EQ(r.synthetic, 6u);
    for (std::size_t i = x.size(); i < r.x.size(); ++i) {
        EXPECT_EQ(r.y[i], 1);
        EXPECT_GE(r.x[i][0], 0.0);
        EXPECT_LE(r.x[i][0], 1.0);
        EXPECT_EQ(r.x[i][1], 0.0);
    }
}

TEST(Smote, SyntheticRowsLieInTheMinorityHull) {
    std::mt19937_64 rng(4);
    auto x = random_matrix(rng, 60, 2);
    std::vector<int> y(60, 0);
    std::vector<Point2> minority;
    for (std::size_t i = 0; i < 10; ++i) {
        y[i] = 1;
        minority.push_back({x[i][0], x[i][1]});
    }
    const auto r = smote(x, y, 5, 9);
    EXPECT_EQ(std::count(r.y.begin(), r.y.end(), 1), 50);
    EXPECT_EQ(std::count(r.y.begin(), r.y.end(), 0), 50);
    const auto hull = convex_hull(minority);
    for (std::size_t i = x.size(); i < r.x.size(); ++i) {
        const Point2 p{r.x[i][0], r.x[i][1]};
        for (std::size_t k = 0; k < hull.size(); ++k) {
            ASSERT_GE(cross(hull[k], hull[(k + 1) % hull.size()], p), -1e-12) << i;
        }
    }
    EXPECT_EQ(smote(x, y, 5, 9).x, r.x);
}

TEST(Smote, DegenerateClassesThrow) {
    const FeatureMatrix x{{0}, {1}, {2}};
    EXPECT_THROW(smote(x, std::vector<int>{1, 1, 1}, 5, 0), InputError);
    EXPECT_THROW(smote(x, std::vector<int>{1, 0, 0}, 5, 0), InputError);
}

TEST(Gbdt, LogisticGradientsMatchFiniteDifferences) {
    const double h = 1e-5;
    for (double y : {0.0, 1.0}) {
        for (double z = -6.0; z <= 6.0; z += 0.25) {
            const auto gh = logistic_grad_hess(y, z);
            const double g = (logistic_loss(y, z + h) - logistic_loss(y, z - h)) / (2 * h);
            const double hs = (logistic_grad_hess(y, z + h).grad - logistic_grad_hess(y, z - h).grad) / (2 * h);
            EXPECT_NEAR(gh.grad, g, 1e-6 * std::max(1.0, std::abs(g))) << y << " " << z;
            EXPECT_NEAR(gh.hess, hs, 1e-6 * std::max(1.0, std::abs(hs))) << y << " " << z;
        }
    }
}

TEST(Gbdt, LossIsStableAtLargeMargins) {
    EXPECT_NEAR(logistic_loss(1.0, 800.0), 0.0, 1e-300);
    EXPECT_NEAR(logistic_loss(0.0, 800.0), 800.0, 1e-9);
    EXPECT_TRUE(std::isfinite(logistic_loss(1.0, -800.0)));
    EXPECT_DOUBLE_EQ(l2_loss(3.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(l2_grad_hess(3.0, 1.0).grad, -2.0);
}

TEST(Gbdt, TrainingLossNeverIncreases) {
    std::mt19937_64 rng(10);
    std::bernoulli_distribution coin(0.4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_matrix(rng, 120, 3);
        std::vector<double> yc;
        std::vector<double> yr;
        for (const auto& r : x) {
            yc.push_back(coin(rng) ? 1.0 : 0.0);
            yr.push_back(r[0] * r[1] + 0.3 * r[2]);
        }
        for (auto [obj, y] : {std::pair{Objective::logistic, &yc}, std::pair{Objective::l2, &yr}}) {
            const auto m = gbdt_train(x, *y, obj);
            ASSERT_EQ(m.train_loss.size(), 101u);
            for (std::size_t k = 1; k < m.train_loss.size(); ++k) {
                ASSERT_LE(m.train_loss[k], m.train_loss[k - 1]) << trial << " round " << k;
            }
        }
    }
}

TEST(Gbdt, ConstantPositiveTargetSaturates) {
    std::mt19937_64 rng(11);
    const auto x = random_matrix(rng, 60, 3);
    const std::vector<double> y(60, 1.0);
    const auto m = gbdt_train(x, y, Objective::logistic);
    for (const auto& r : x) {
        EXPECT_GE(gbdt_predict(m, r).p, 0.99);
    }
}

TEST(Gbdt, SeparableBlobsReachPerfectTrainingAuc) {
    std::mt19937_64 rng(12);
    auto x = random_matrix(rng, 200, 3);
    std::vector<double> y;
    std::vector<int> yi;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int label = i % 2 == 0 ? 1 : 0;
        x[i][0] += label ? 6.0 : -6.0;
        y.push_back(label);
        yi.push_back(label);
    }
    const auto m = gbdt_train(x, y, Objective::logistic);
    std::vector<double> scores;
    for (const auto& r : x) {
        scores.push_back(gbdt_predict(m, r).p);
    }
    EXPECT_EQ(roc_auc(yi, scores), 1.0);
}

TEST(Gbdt, L2FitsTheIdentityFunction) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMatrix x(500, std::vector<double>(3));
    std::vector<double> y;
    for (auto& r : x) {
        for (auto& v : r) {
            v = u(rng);
        }
        y.push_back(r[0]);
    }
    const auto m = gbdt_train(x, y, Objective::l2);
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = m.margin(x[i]) - y[i];
        sq += d * d;
    }
    EXPECT_LT(std::sqrt(sq / 500.0), 0.05);
    for (const auto& t : m.trees) {
        for (const auto& n : t.nodes) {
            EXPECT_LT(n.feature, 3);
        }
    }
}

TEST(Gbdt, TooFewRowsThrows) {
    std::mt19937_64 rng(14);
    const auto x = random_matrix(rng, 30, 3);
    const std::vector<double> y(30, 0.0);
    EXPECT_THROW(gbdt_train(x, y, Objective::l2), InputError);
}

TEST(GbdtPredict, DecisionRuleAndClosedForms) {
    GbdtModel m;
    m.n_features = 3;
    const std::vector<double> x{0.0, 0.0, 0.0};
    const auto p0 = gbdt_predict(m, x);
    EXPECT_EQ(p0.z, 0.0);
    EXPECT_EQ(p0.p, 0.5);
    EXPECT_EQ(p0.label, 1);
    m.base_score = std::log(3.0);
    EXPECT_NEAR(gbdt_predict(m, x).p, 0.75, 1e-15);
    m.base_score = -1e-9;
    EXPECT_EQ(gbdt_predict(m, x).label, 0);
    EXPECT_THROW(gbdt_predict(m, std::vector<double>{0.0, NAN, 0.0}), InputError);
    EXPECT_THROW(gbdt_predict(m, std::vector<double>{0.0, 0.0}), InputError);
}

TEST(Metrics, PerfectSeparationScoresOne) {
    const std::vector<int> y{1, 1, 0, 0};
    const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> l{1, 1, 0, 0};
    const auto m = binary_metrics(y, s, l);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.f1, 1.0);
    EXPECT_EQ(*m.roc_auc, 1.0);
    EXPECT_EQ(*m.pr_auc, 1.0);
}

TEST(Metrics, HandRocExample) {
    const std::vector<int> y{1, 0, 1, 0};
    const std::vector<double> s{0.9, 0.8, 0.4, 0.2};
    EXPECT_DOUBLE_EQ(roc_auc(y, s), 0.75);
}

TEST(Metrics, RandomScoresGiveHalf) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> y;
    std::vector<double> s;
    for (int i = 0; i < 10000; ++i) {
        y.push_back(i % 2);
        s.push_back(u(rng));
    }
    EXPECT_NEAR(roc_auc(y, s), 0.5, 0.02);
}

TEST(Metrics, RocAucEqualsMannWhitneyU) {
    std::mt19937_64 rng(16);
    std::uniform_int_distribution<int> level(0, 9);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> y;
        std::vector<double> s;
        std::vector<double> pos;
        std::vector<double> neg;
        for (int i = 0; i < 40; ++i) {
            const int label = coin(rng) ? 1 : 0;
            const double score = level(rng) / 10.0;
            y.push_back(label);
            s.push_back(score);
            (label ? pos : neg).push_back(score);
        }
        if (pos.empty() || neg.empty()) {
            continue;
        }
        const double u = stats::mann_whitney(pos, neg).statistic;
        EXPECT_EQ(roc_auc(y, s), u / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()))) << trial;
        EXPECT_NEAR(pr_auc(y, s), step_sum_pr_auc(y, s), 1e-12) << trial;
    }
}

TEST(Metrics, SingleClassOmitsAucs) {
    const std::vector<int> y{1, 1, 1};
    const std::vector<double> s{0.2, 0.6, 0.9};
    const std::vector<int> l{0, 1, 1};
    const auto m = binary_metrics(y, s, l);
    EXPECT_FALSE(m.roc_auc.has_value());
    EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
    EXPECT_THROW(roc_auc(y, s), InputError);
}

TEST(Metrics, CurvesSpanTheUnitSquare) {
    const std::vector<int> y{1, 0, 1, 0, 1};
    const std::vector<double> s{0.9, 0.7, 0.7, 0.3, 0.1};
    const auto roc = roc_curve(y, s);
    EXPECT_EQ(roc.front().x, 0.0);
    EXPECT_EQ(roc.front().y, 0.0);
    EXPECT_EQ(roc.back().x, 1.0);
    EXPECT_EQ(roc.back().y, 1.0);
    const auto pr = pr_curve(y, s);
    EXPECT_EQ(pr.back().x, 1.0);
}

TEST(Shapley, LocalAccuracyOnRandomModels) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_matrix(rng, 80, 3);
        std::vector<double> y;
        for (const auto& r : x) {
            y.push_back(r[0] + r[1] * r[2] + 0.1 * z(rng) > 0 ? 1.0 : 0.0);
        }
        GbdtParams p;
        p.rounds = 20;
        const auto m = gbdt_train(x, y, Objective::logistic, p);
        const auto background = random_matrix(rng, 15, 3);
        for (int k = 0; k < 10; ++k) {
            const std::vector<double> q{z(rng), z(rng), z(rng)};
            const auto r = shapley(m, q, background);
            const double sum = r.base + r.phi[0] + r.phi[1] + r.phi[2];
            EXPECT_NEAR(sum, m.margin(q), 1e-9);
        }
    }
}

TEST(Shapley, UnusedFeatureGetsZero) {
    std::mt19937_64 rng(18);
    auto x = random_matrix(rng, 100, 3);
    std::vector<double> y;
    for (auto& r : x) {
        r[2] = 1.0;
        y.push_back(r[0] > 0 ? 1.0 : 0.0);
    }
    const auto m = gbdt_train(x, y, Objective::logistic);
    const auto background = random_matrix(rng, 20, 3);
    const std::vector<double> q{0.5, -0.5, 7.0};
    EXPECT_EQ(shapley(m, q, background).phi[2], 0.0);
}

TEST(Shapley, BackgroundOfCopiesGivesZeros) {
    std::mt19937_64 rng(19);
    const auto x = random_matrix(rng, 100, 3);
    std::vector<double> y;
    for (const auto& r : x) {
        y.push_back(r[0] + r[1] > 0 ? 1.0 : 0.0);
    }
    const auto m = gbdt_train(x, y, Objective::logistic);
    const std::vector<double> q{0.3, -0.2, 0.1};
    const FeatureMatrix background(5, q);
    for (double v : shapley(m, q, background).phi) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_THROW(shapley(m, q, FeatureMatrix{}), InputError);
}

TEST(Labels, DefaultPolarityMapsBelowThresholdToZero) {
    EXPECT_EQ(nitrate_label(1000.0, 1500.0, Polarity::below_is_zero), 0);
    EXPECT_EQ(nitrate_label(1500.0, 1500.0, Polarity::below_is_zero), 1);
    EXPECT_EQ(nitrate_label(1000.0, 1500.0, Polarity::below_is_one), 1);
}

TEST(LoocvClassify, MonotoneDatasetIsRankedPerfectly) {
    const auto ds = monotone_dataset(12, 10, 20);
    const auto r = loocv_classify(ds, classify_params(1550.0, 5));
    EXPECT_EQ(r.folds.size(), 12u);
    EXPECT_TRUE(r.skipped_folds.empty());
    ASSERT_TRUE(r.metrics.pr_auc.has_value());
    EXPECT_GE(*r.metrics.pr_auc, 0.99);
}

TEST(LoocvClassify, PermutedLabelsAreAtChance) {
    const auto ds = permuted_dataset(200, 3, 21);
    const auto r = loocv_classify(ds, classify_params(1995.0, 3));
    ASSERT_TRUE(r.metrics.roc_auc.has_value());
    EXPECT_NEAR(*r.metrics.roc_auc, 0.5, 0.1);
}

TEST(LoocvClassify, TwoLeavesAreInsufficient) {
    const auto ds = monotone_dataset(2, 30, 22);
    try {
        loocv_classify(ds, classify_params(1050.0, 5));
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient groups"), std::string::npos);
    }
}

TEST(LoocvClassify, HeldOutValuesNeverReachTheScaler) {
    const auto ds = monotone_dataset(8, 10, 23);
    auto moved = ds;
    for (auto& r : moved.records) {
        if (r.compound_leaf_id == "L3") {
            r.nnd *= 50.0;
            r.resolution *= 3.0;
            r.exposure_time *= 7.0;
        }
    }
    const auto a = loocv_classify(ds, classify_params(1350.0, 5));
    const auto b = loocv_classify(moved, classify_params(1350.0, 5));
    ASSERT_EQ(a.folds.size(), b.folds.size());
    for (std::size_t i = 0; i < a.folds.size(); ++i) {
        if (a.folds[i].leaf == "p1/L3") {
            EXPECT_EQ(a.folds[i].scaler.mean, b.folds[i].scaler.mean);
            EXPECT_EQ(a.folds[i].scaler.std, b.folds[i].scaler.std);
        } else {
            EXPECT_NE(a.folds[i].scaler.mean, b.folds[i].scaler.mean);
        }
    }
}

TEST(LoocvClassify, DeterministicPerSeed) {
    const auto ds = monotone_dataset(8, 6, 24);
    const auto a = loocv_classify(ds, classify_params(1350.0, 3));
    const auto b = loocv_classify(ds, classify_params(1350.0, 3));
    for (std::size_t i = 0; i < a.folds.size(); ++i) {
        EXPECT_EQ(a.folds[i].probability, b.folds[i].probability);
    }
}

TEST(Sweep, SummariesAreMeansOfCellAucs) {
    const auto ds = monotone_dataset(10, 6, 25);
    const auto thresholds = linspace(1000.0, 1900.0, 10);
    const std::vector<int> n_images{1, 5};
    const auto report = sweep(ds, thresholds, n_images, classify_params(0.0, 1));
    ASSERT_EQ(report.cells.size(), 20u);
    ASSERT_EQ(report.summaries.size(), 2u);
    for (const auto& s : report.summaries) {
        double roc = 0.0;
        double pr = 0.0;
        int models = 0;
        int degenerate = 0;
        for (const auto& c : report.cells) {
            if (c.n_images != s.n_images) {
                continue;
            }
            if (c.degenerate) {
                ++degenerate;
                continue;
            }
            roc += *c.result->metrics.roc_auc;
            pr += *c.result->metrics.pr_auc;
            ++models;
        }
        EXPECT_EQ(s.models, models);
        EXPECT_EQ(s.degenerate, degenerate);
        EXPECT_EQ(*s.mroc, roc / models);
        EXPECT_EQ(*s.mpr, pr / models);
    }
    // The lowest threshold labels every leaf 1.
    EXPECT_TRUE(report.cells.front().degenerate);
}

TEST(Sweep, ThresholdOutsideTheObservedRangeThrows) {
    const auto ds = monotone_dataset(6, 4, 26);
    const std::vector<double> thresholds{5000.0};
    const std::vector<int> n_images{1};
    EXPECT_THROW(sweep(ds, thresholds, n_images, classify_params(0.0, 1)), InputError);
}

TEST(Linspace, IncludesBothEnds) {
    EXPECT_EQ(linspace(1600.0, 1900.0, 4), (std::vector<double>{1600.0, 1700.0, 1800.0, 1900.0}));
    EXPECT_EQ(linspace(5.0, 9.0, 1), (std::vector<double>{5.0}));
}

TEST(LoocvRegress, LinearTargetIsRecovered) {
    std::mt19937_64 rng(27);
    std::uniform_real_distribution<double> nitrate(500.0, 3000.0);
    std::uniform_real_distribution<double> res(8e6, 12e6);
    std::uniform_real_distribution<double> exposure(0.005, 0.02);
    Dataset ds;
    for (int leaf = 0; leaf < 100; ++leaf) {
        const double n = nitrate(rng);
        for (int k = 0; k < 3; ++k) {
            ds.records.push_back(make_record("L" + std::to_string(leaf), "a", 0.2 + 1e-4 * n, res(rng), exposure(rng), n));
        }
    }
    const auto r = loocv_regress(ds);
    EXPECT_EQ(r.folds, 100);
    EXPECT_GE(r.pearson_r, 0.99);
    EXPECT_GE(r.r2, 0.98);
}

TEST(LoocvRegress, IndependentTargetExplainsNothing) {
    std::mt19937_64 rng(28);
    std::uniform_real_distribution<double> nitrate(500.0, 3000.0);
    std::uniform_real_distribution<double> res(8e6, 12e6);
    std::uniform_real_distribution<double> exposure(0.005, 0.02);
    std::normal_distribution<double> nnd(0.45, 0.05);
    Dataset ds;
    for (int leaf = 0; leaf < 100; ++leaf) {
        const double n = nitrate(rng);
        for (int k = 0; k < 3; ++k) {
            ds.records.push_back(make_record("L" + std::to_string(leaf), std::to_string(k), nnd(rng), res(rng),
                                             exposure(rng), n));
        }
    }
    EXPECT_LE(loocv_regress(ds).r2, 0.1);
}

TEST(LoocvRegress, ConstantMeanPredictorRmseIsTheStd) {
    const std::vector<double> t{0.3, 0.5, 0.4, 0.8, 0.6};
    const double mean = std::accumulate(t.begin(), t.end(), 0.0) / 5.0;
    double var = 0.0;
    for (double v : t) {
        var += (v - mean) * (v - mean);
    }
    const std::vector<double> pred(5, mean);
    EXPECT_NEAR(stats::rmse(t, pred), std::sqrt(var / 5.0), 1e-15);
}

TEST(LoocvRegress, TwoLeafletsAreInsufficient) {
    Dataset ds;
    for (int k = 0; k < 20; ++k) {
        ds.records.push_back(make_record("L0", k % 2 ? "a" : "b", 0.4 + 0.01 * k, 1e7 + k, 0.01, 1000.0));
    }
    EXPECT_THROW(loocv_regress(ds), InputError);
}

TEST(Dataset, CsvRoundTripAndLineNumberedErrors) {
    auto ds = monotone_dataset(3, 2, 29);
    ds.records[0].fertilizer_level = "low";
    ds.has_fertilizer_level = true;
    for (std::size_t i = 1; i < ds.records.size(); ++i) {
        ds.records[i].fertilizer_level = "high";
    }
    const auto back = Dataset::from_csv_text(ds.to_csv_text());
    ASSERT_EQ(back.records.size(), ds.records.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        EXPECT_EQ(back.records[i].nnd, ds.records[i].nnd);
        EXPECT_EQ(back.records[i].resolution, ds.records[i].resolution);
        EXPECT_EQ(back.records[i].fertilizer_level, ds.records[i].fertilizer_level);
    }
    const std::string bad = std::string(kDatasetHeader) + "\np,l,a,0.4,1e6,0.01,100,900\np,l,b,oops,1e6,0.01,100,900\n";
    try {
        Dataset::from_csv_text(bad);
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("nnd_mm"), std::string::npos) << e.what();
    }
}

TEST(Dataset, NitrateMustBeConstantWithinALeaf) {
    Dataset ds;
    ds.records.push_back(make_record("L0", "a", 0.4, 1e6, 0.01, 900.0));
    ds.records.push_back(make_record("L0", "b", 0.4, 1e6, 0.01, 950.0));
    EXPECT_THROW(ds.validate(), InputError);
}
