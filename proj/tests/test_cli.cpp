#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dhanshr/cli.hpp"
#include "dhanshr/image_io.hpp"

using namespace dhanshr;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("dhanshr_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string str(const std::string& name) const { return (path_ / name).string(); }
    fs::path path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

FeatureMap<double> test_image(int h, int w, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    FeatureMap<double> f(3, h, w);
    for (auto& v : f.data) v = static_cast<double>(rng.next() % 256) / 255.0;
    return f;
}

}  // namespace

TEST(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(cli::run({"dhanshr", "--help"}), 0);
    EXPECT_EQ(cli::run({"dhanshr", "--version"}), 0);
    EXPECT_EQ(cli::run({"dhanshr", "init", "--help"}), 0);
}

TEST(Cli, UnknownFlagIsUsageError) {
    EXPECT_EQ(cli::run({"dhanshr", "--no-such-flag"}), cli::kExitUsage);
    EXPECT_EQ(cli::run({"dhanshr", "init", "--bogus", "x"}), cli::kExitUsage);
}

TEST(Cli, MissingRequiredFlagIsUsageError) {
    EXPECT_EQ(cli::run({"dhanshr", "init"}), cli::kExitUsage);
    EXPECT_EQ(cli::run({"dhanshr", "infer", "--checkpoint", "x"}), cli::kExitUsage);
}

TEST(Cli, InitInferEvalFlow) {
    TempDir dir;
    const std::string cfg_path = dir.str("config.json");
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"base_width": 4, "window": 8, "shift": 4, "heads": 2, "seed": 3})";
    }
    const std::string ckpt = dir.str("model.bin");
    ASSERT_EQ(cli::run({"dhanshr", "init", "--config", cfg_path, "--seed", "3", "--out", ckpt}),
              0);
    ASSERT_TRUE(fs::exists(ckpt));

    const std::string in_png = dir.str("in.png");
    save_image(test_image(16, 16, 5), in_png);
    const std::string out_png = dir.str("out.png");
    ASSERT_EQ(cli::run({"dhanshr", "infer", "--checkpoint", ckpt, "--input", in_png, "--output",
                        out_png}),
              0);
    const auto out = load_image<double>(out_png);
    EXPECT_EQ(out.height, 16);
    EXPECT_EQ(out.width, 16);
}

TEST(Cli, InitRejectsBadConfig) {
    TempDir dir;
    const std::string cfg_path = dir.str("bad.json");
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"base_width": 4, "window": 4, "shift": 9})";
    }
    EXPECT_EQ(cli::run({"dhanshr", "init", "--config", cfg_path, "--out", dir.str("m.bin")}),
              cli::kExitData);
}

TEST(Cli, EvalPredDirEqualsGtDir) {
    TempDir dir;
    fs::create_directories(dir.str("pred"));
    fs::create_directories(dir.str("gt"));
    for (int i = 0; i < 3; ++i) {
        const auto img = test_image(8, 8, 10 + i);
        save_image(img, dir.str("pred/p" + std::to_string(i) + ".png"));
        save_image(img, dir.str("gt/p" + std::to_string(i) + ".png"));
    }
    const std::string report_path = dir.str("report.json");
    ASSERT_EQ(cli::run({"dhanshr", "eval", "--pred-dir", dir.str("pred"), "--gt-dir",
                        dir.str("gt"), "--report", report_path}),
              0);

    const auto j = nlohmann::json::parse(slurp(report_path));
    EXPECT_EQ(j.at("lpips"), "n/a");
    ASSERT_EQ(j.at("aggregates").size(), 1u);
    EXPECT_DOUBLE_EQ(j.at("aggregates")[0].at("mean_ssim").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(j.at("aggregates")[0].at("mean_psnr_db").get<double>(), 99.0);
    EXPECT_EQ(j.at("pairs").size(), 3u);
}

TEST(Cli, EvalReportsAreByteIdenticalAcrossRuns) {
    TempDir dir;
    fs::create_directories(dir.str("pred"));
    fs::create_directories(dir.str("gt"));
    for (int i = 0; i < 2; ++i) {
        save_image(test_image(8, 8, 20 + i), dir.str("pred/p" + std::to_string(i) + ".png"));
        save_image(test_image(8, 8, 30 + i), dir.str("gt/p" + std::to_string(i) + ".png"));
    }
    const std::string r1 = dir.str("r1.json"), r2 = dir.str("r2.json");
    ASSERT_EQ(cli::run({"dhanshr", "eval", "--pred-dir", dir.str("pred"), "--gt-dir",
                        dir.str("gt"), "--report", r1}),
              0);
    ASSERT_EQ(cli::run({"dhanshr", "eval", "--pred-dir", dir.str("pred"), "--gt-dir",
                        dir.str("gt"), "--report", r2}),
              0);
    EXPECT_EQ(slurp(r1), slurp(r2));
}

TEST(Cli, EvalWithZeroWeightResidualModelScoresInputsAgainstGt) {
    TempDir dir;
    // zero-weight checkpoint: predictions equal inputs exactly
    auto model = build_model<double>(ModelConfig{.base_width = 4, .seed = 0}, 0);
    zero_all_weights(model);
    const std::string ckpt = dir.str("zero.bin");
    save_checkpoint(model, ckpt);

    fs::create_directories(dir.str("data/test/MINE/input"));
    fs::create_directories(dir.str("data/test/MINE/gt"));
    for (int i = 0; i < 3; ++i) {
        const auto img = test_image(16, 16, 40 + i);
        save_image(img, dir.str("data/test/MINE/input/s" + std::to_string(i) + ".png"));
        FeatureMap<double> gt = img;
        for (auto& v : gt.data) v = std::min(1.0, v + 0.1);
        save_image(gt, dir.str("data/test/MINE/gt/s" + std::to_string(i) + ".png"));
    }
    const std::string manifest_path = dir.str("m.json");
    ASSERT_EQ(cli::run({"dhanshr", "manifest", "--root", dir.str("data"), "--out",
                        manifest_path}),
              0);

    const std::string report_path = dir.str("r.json");
    ASSERT_EQ(cli::run({"dhanshr", "eval", "--checkpoint", ckpt, "--manifest", manifest_path,
                        "--report", report_path}),
              0);
    const auto j = nlohmann::json::parse(slurp(report_path));
    ASSERT_EQ(j.at("pairs").size(), 3u);
    for (const auto& pair : j.at("pairs")) {
        EXPECT_FALSE(pair.contains("error"));
        // identity model, offset gt: finite positive PSNR below the cap
        EXPECT_GT(pair.at("psnr_db").get<double>(), 10.0);
        EXPECT_LT(pair.at("psnr_db").get<double>(), 99.0);
        EXPECT_LT(pair.at("ssim").get<double>(), 1.0);
    }
    EXPECT_NE(j.at("config_hash").get<std::string>(), "none");
}

TEST(Cli, EvalRecordsPerPairErrorsAndContinues) {
    TempDir dir;
    fs::create_directories(dir.str("pred"));
    fs::create_directories(dir.str("gt"));
    save_image(test_image(8, 8, 50), dir.str("pred/a.png"));
    save_image(test_image(8, 8, 51), dir.str("gt/a.png"));
    save_image(test_image(8, 8, 52), dir.str("pred/b.png"));
    save_image(test_image(10, 8, 53), dir.str("gt/b.png"));  // size mismatch

    const std::string report_path = dir.str("r.json");
    ASSERT_EQ(cli::run({"dhanshr", "eval", "--pred-dir", dir.str("pred"), "--gt-dir",
                        dir.str("gt"), "--report", report_path}),
              0);
    const auto j = nlohmann::json::parse(slurp(report_path));
    ASSERT_EQ(j.at("pairs").size(), 2u);
    EXPECT_FALSE(j.at("pairs")[0].contains("error"));
    EXPECT_TRUE(j.at("pairs")[1].contains("error"));
}

TEST(Cli, EvalMissingGtStemIsDataError) {
    TempDir dir;
    fs::create_directories(dir.str("pred"));
    fs::create_directories(dir.str("gt"));
    save_image(test_image(8, 8, 60), dir.str("pred/only.png"));
    EXPECT_EQ(cli::run({"dhanshr", "eval", "--pred-dir", dir.str("pred"), "--gt-dir",
                        dir.str("gt")}),
              cli::kExitData);
}

TEST(Cli, ManifestValidatorRejectsFakeBenchmarkCounts) {
    TempDir dir;
    for (const char* source : {"PSD", "SHIQ", "SSHR"}) {
        fs::create_directories(dir.str(std::string("data/test/") + source + "/input"));
        fs::create_directories(dir.str(std::string("data/test/") + source + "/gt"));
        const auto img = test_image(8, 8, 70);
        save_image(img, dir.str(std::string("data/test/") + source + "/input/x.png"));
        save_image(img, dir.str(std::string("data/test/") + source + "/gt/x.png"));
    }
    // all three sources present but with toy counts: validation must fail
    EXPECT_EQ(cli::run({"dhanshr", "manifest", "--root", dir.str("data"), "--out",
                        dir.str("m.json")}),
              cli::kExitData);
}

TEST(Cli, GradcheckExitCodes) {
    EXPECT_EQ(cli::run({"dhanshr", "gradcheck", "--block", "ssim", "--seed", "7"}), 0);
    EXPECT_EQ(cli::run({"dhanshr", "gradcheck", "--block", "not-a-block"}), cli::kExitUsage);
}

TEST(Cli, BenchTinyRunWritesReport) {
    TempDir dir;
    const std::string report_path = dir.str("bench.json");
    ASSERT_EQ(cli::run({"dhanshr", "bench", "--kind", "channel", "--sizes", "8,12,16",
                        "--channels", "2", "--window", "4", "--report", report_path}),
              0);
    const auto j = nlohmann::json::parse(slurp(report_path));
    EXPECT_EQ(j.at("kind"), "channel");
    EXPECT_EQ(j.at("entries").size(), 3u);
}
