#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "json.hpp"
#include "trichome/dataset.hpp"
#include "trichome/metadata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(TRICHOME_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("trichome_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthThenAnalyzeRecoversTheTruth) {
    ASSERT_EQ(run("synth -o " + path("s") + " --seed 3 --lambda 150 --tilt-h 6 --noise 2"), 0);
    ASSERT_EQ(run("analyze " + path("s/scene.pgm") + " -o " + path("report.json")), 0);
    const auto truth = json::parse(text(path("s/truth.json")));
    const auto report = json::parse(text(path("report.json")));
    const double want = truth["true_nnd_mm"].get<double>();
    const auto& row = report["images"][0];
    EXPECT_LT(std::abs(row["nnd_mm"].get<double>() - want) / want, 0.05);
    EXPECT_EQ(row["metadata_source"], "exif");
    EXPECT_GT(row["exposure_time"].get<double>(), 0.0);
    EXPECT_EQ(report["command"], "analyze");
    EXPECT_TRUE(report.contains("config_hash"));
}

TEST_F(Cli, SynthSameSeedIsByteIdentical) {
    ASSERT_EQ(run("synth -o " + path("a") + " --seed 1"), 0);
    ASSERT_EQ(run("synth -o " + path("b") + " --seed 1"), 0);
    for (const char* f : {"scene.pgm", "scene.exif", "truth.json", "synth.json"}) {
        EXPECT_EQ(text(dir_ / "a" / f), text(dir_ / "b" / f)) << f;
    }
}

TEST_F(Cli, ImageWithoutMarkersExitsTwo) {
    trichome::metadata::save_pgm(trichome::GrayImage(200, 200, 230.0f), path("blank.pgm"));
    EXPECT_EQ(run("analyze " + path("blank.pgm")), 2);
}

TEST_F(Cli, AppendTwiceWritesTwoIdenticalRows) {
    ASSERT_EQ(run("synth -o " + path("s") + " --seed 5"), 0);
    const std::string args = "analyze " + path("s/scene.pgm") + " --append " + path("d.csv") +
                             " --plant p1 --leaf L1 --leaflet a --nitrate 1500 -o " + path("r.json");
    ASSERT_EQ(run(args), 0);
    ASSERT_EQ(run(args), 0);
    const std::string csv = text(path("d.csv"));
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < csv.size()) {
        const auto end = csv.find('\n', start);
        lines.push_back(csv.substr(start, end - start));
        start = end + 1;
    }
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[1], lines[2]);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("synth -o " + path("s") + " --lambda 0"), 2);
    EXPECT_EQ(run("appendix -o " + path("a") + " --replicates 5"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("analyze " + path("missing.pgm")), 2);
}

TEST_F(Cli, AppendixIsReproducibleAndSignificant) {
    ASSERT_EQ(run("appendix -o " + path("a") + " --seed 7"), 0);
    ASSERT_EQ(run("appendix -o " + path("b") + " --seed 7"), 0);
    EXPECT_EQ(text(path("a/appendix.csv")), text(path("b/appendix.csv")));
    EXPECT_EQ(text(path("a/appendix.json")), text(path("b/appendix.json")));
    const auto j = json::parse(text(path("a/appendix.json")));
    EXPECT_EQ(j["seed"], 7);
    EXPECT_LT(j["summary"]["wilcoxon"]["p_two_sided"].get<double>(), 0.001);
}

TEST_F(Cli, StatsWithoutFertilizerLevelSkipsGroupTests) {
    ASSERT_EQ(run("synth --dataset --seed 2 -o " + path("d")), 0);
    ASSERT_EQ(run("stats " + path("d/dataset.csv") + " -o " + path("s.json")), 0);
    const auto with = json::parse(text(path("s.json")));
    EXPECT_FALSE(with["group_tests"].contains("skipped"));

    const auto ds = trichome::ml::Dataset::load(path("d/dataset.csv"));
    auto stripped = ds;
    stripped.has_fertilizer_level = false;
    for (auto& r : stripped.records) {
        r.fertilizer_level.reset();
    }
    stripped.save(path("nofert.csv"));
    ASSERT_EQ(run("stats " + path("nofert.csv") + " -o " + path("n.json")), 0);
    const auto without = json::parse(text(path("n.json")));
    EXPECT_TRUE(without["group_tests"].contains("skipped"));
}

TEST_F(Cli, TrainEvalWritesReports) {
    ASSERT_EQ(run("synth --dataset --seed 2 -o " + path("d")), 0);
    ASSERT_EQ(run("train-eval " + path("d/dataset.csv") + " -o " + path("c") + " --rounds 20 --n-images 5"), 0);
    for (const char* f : {"metrics.json", "confusion.csv", "roc.csv", "pr.csv", "learning_curve.csv",
                          "shap_summary.csv", "predictions.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "c" / f)) << f;
    }
    ASSERT_EQ(run("train-eval " + path("d/dataset.csv") + " --mode regress -o " + path("r") + " --rounds 20"), 0);
    const auto m = json::parse(text(path("r/metrics.json")));
    for (const char* k : {"rmse", "r2", "pearson_r"}) {
        EXPECT_TRUE(m.contains(k) || m["metrics"].contains(k)) << k;
    }
}

TEST_F(Cli, AppendHonoursUnitAndResolutionOverride) {
    ASSERT_EQ(run("synth -o " + path("s") + " --seed 6"), 0);
    const std::string common = "analyze " + path("s/scene.pgm") + " --plant p --leaf L --leaflet a --nitrate 1200 -o " +
                               path("r.json") + " --append ";
    ASSERT_EQ(run(common + path("mm.csv")), 0);
    ASSERT_EQ(run(common + path("px.csv") + " --nnd-unit px --resolution 12000000"), 0);
    const auto report = json::parse(text(path("r.json")));
    const auto mm = trichome::ml::Dataset::load(path("mm.csv"));
    const auto px = trichome::ml::Dataset::load(path("px.csv"));
    ASSERT_EQ(px.records.size(), 1u);
    EXPECT_NEAR(mm.records[0].nnd, report["images"][0]["nnd_mm"].get<double>(), 1e-9);
    EXPECT_NEAR(px.records[0].nnd, report["images"][0]["nnd_px"].get<double>(), 1e-9);
    EXPECT_EQ(px.records[0].resolution, 12000000.0);
    EXPECT_EQ(run(common + path("bad.csv") + " --nnd-unit inches"), 2);
}
