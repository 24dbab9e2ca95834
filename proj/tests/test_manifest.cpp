#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dhanshr/image_io.hpp"
#include "dhanshr/manifest.hpp"

using namespace dhanshr;
namespace fs = std::filesystem;

namespace {

class TempTree {
public:
    TempTree() {
        root_ = fs::temp_directory_path() /
                ("dhanshr_manifest_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter_++));
        fs::create_directories(root_);
    }
    ~TempTree() { fs::remove_all(root_); }

    fs::path root() const { return root_; }

    void add_pair(const std::string& split, const std::string& source, const std::string& stem,
                  double value = 0.5) {
        add_image(split, source, "input", stem, value);
        add_image(split, source, "gt", stem, value);
    }

    void add_image(const std::string& split, const std::string& source, const std::string& kind,
                   const std::string& stem, double value, const std::string& ext = ".png") {
        const fs::path dir = root_ / split / source / kind;
        fs::create_directories(dir);
        FeatureMap<double> map(3, 4, 4, value);
        save_image(map, (dir / (stem + ext)).string());
    }

private:
    static inline int counter_ = 0;
    fs::path root_;
};

}  // namespace

TEST(BuildManifest, ToyTreeGivesSortedRecords) {
    TempTree tree;
    tree.add_pair("test", "OTHER", "b");
    tree.add_pair("test", "OTHER", "a");
    tree.add_pair("train", "OTHER", "c");

    const auto m = build_manifest(tree.root().string());
    ASSERT_EQ(m.records.size(), 3u);
    EXPECT_EQ(m.records[0].split, "test");
    EXPECT_EQ(m.records[0].source, "OTHER");
    EXPECT_NE(m.records[0].input_path.find("a.png"), std::string::npos);
    EXPECT_NE(m.records[1].input_path.find("b.png"), std::string::npos);
    EXPECT_EQ(m.records[2].split, "train");
    for (const auto& r : m.records) {
        EXPECT_TRUE(fs::exists(r.input_path));
        EXPECT_TRUE(fs::exists(r.gt_path));
    }
}

TEST(BuildManifest, MissingGtListsStem) {
    TempTree tree;
    tree.add_pair("test", "OTHER", "ok");
    tree.add_image("test", "OTHER", "input", "orphan", 0.5);
    try {
        build_manifest(tree.root().string());
        FAIL() << "expected exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("orphan"), std::string::npos);
    }
}

TEST(BuildManifest, AmbiguousStemIsAnError) {
    TempTree tree;
    tree.add_pair("test", "OTHER", "x");
    tree.add_image("test", "OTHER", "input", "x", 0.5, ".ppm");  // same stem, second extension
    try {
        build_manifest(tree.root().string());
        FAIL() << "expected exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("ambiguous"), std::string::npos);
    }
}

TEST(BuildManifest, MissingRootRejected) {
    EXPECT_THROW(build_manifest("/no/such/dhanshr/root"), std::runtime_error);
}

TEST(ManifestJson, RoundTripAndDuplicateDetection) {
    Manifest m;
    m.records.push_back({"train", "PSD", "a.png", "b.png"});
    m.records.push_back({"test", "PSD", "a.png", "b.png"});  // same path, other split: fine
    const auto j = manifest_to_json(m);
    const auto back = manifest_from_json(j);
    ASSERT_EQ(back.records.size(), 2u);
    EXPECT_EQ(back.records[0].split, "train");
    EXPECT_EQ(back.records[0].source, "PSD");

    nlohmann::json dup = j;
    dup["records"].push_back(dup["records"][0]);
    EXPECT_THROW(manifest_from_json(dup), std::runtime_error);
}

TEST(SplitTotals, ExactBenchmarkCountsPass) {
    ManifestSummary s;
    s[{"train", "PSD"}] = 9481;
    s[{"train", "SHIQ"}] = 9825;
    s[{"train", "SSHR"}] = 10000;
    s[{"test", "PSD"}] = 947;
    s[{"test", "SHIQ"}] = 1000;
    s[{"test", "SSHR"}] = 1000;
    EXPECT_FALSE(check_benchmark_split_totals(s).has_value());

    // the arithmetic the table encodes
    EXPECT_EQ(9481u + 9825u + 10000u, kBenchmarkTrainTotal);
    EXPECT_EQ(947u + 1000u + 1000u, kBenchmarkTestTotal);
}

TEST(SplitTotals, WrongCountReportsSourceAndExpectation) {
    ManifestSummary s;
    s[{"train", "PSD"}] = 9480;
    s[{"train", "SHIQ"}] = 9825;
    s[{"train", "SSHR"}] = 10000;
    s[{"test", "PSD"}] = 947;
    s[{"test", "SHIQ"}] = 1000;
    s[{"test", "SSHR"}] = 1000;
    const auto err = check_benchmark_split_totals(s);
    ASSERT_TRUE(err.has_value());
    EXPECT_NE(err->find("PSD"), std::string::npos);
    EXPECT_NE(err->find("9481"), std::string::npos);
}

TEST(SplitTotals, ValidationSkippedUnlessAllSourcesPresent) {
    ManifestSummary s;
    s[{"train", "PSD"}] = 3;
    s[{"test", "SHIQ"}] = 2;
    EXPECT_FALSE(check_benchmark_split_totals(s).has_value());

    ManifestSummary other;
    other[{"test", "MINE"}] = 10;
    EXPECT_FALSE(check_benchmark_split_totals(other).has_value());
}

TEST(SplitTotals, SummaryTableListsPerSourceCounts) {
    ManifestSummary s;
    s[{"test", "PSD"}] = 2;
    s[{"train", "PSD"}] = 3;
    s[{"train", "SHIQ"}] = 4;
    const auto table = summary_table(s);
    EXPECT_NE(table.find("test/PSD: 2 pairs"), std::string::npos);
    EXPECT_NE(table.find("train/PSD: 3 pairs"), std::string::npos);
    EXPECT_NE(table.find("train total: 7 pairs"), std::string::npos);
}

TEST(ManifestFile, SaveLoadRoundTrip) {
    TempTree tree;
    tree.add_pair("test", "OTHER", "p");
    const auto m = build_manifest(tree.root().string());
    const auto path = (tree.root() / "manifest.json").string();
    save_manifest(m, path);
    const auto loaded = load_manifest(path);
    ASSERT_EQ(loaded.records.size(), m.records.size());
    EXPECT_EQ(loaded.records[0].input_path, m.records[0].input_path);

    EXPECT_THROW(load_manifest((tree.root() / "nope.json").string()), std::runtime_error);
}
