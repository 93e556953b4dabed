#include "denolab/report.hpp"
#include "denolab/synthetic.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef DENOLAB_CLI_PATH
#error "DENOLAB_CLI_PATH must name the built command line tool"
#endif

using namespace denolab;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    static fs::path dir;

    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / "denolab_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
        auto p = sine_prices(SineFixture{});
        std::ofstream out(dir / "prices.csv");
        out << "Date,Open,Close\n";
        char date[16];
        for (std::size_t i = 0; i < 300; ++i) {
            std::snprintf(date, sizeof date, "2020-%02zu-%02zu", 1 + i / 28, 1 + i % 28);
            out << date << ",0," << p[i] << "\n";
        }
    }

    static void TearDownTestSuite() { fs::remove_all(dir); }

    static int run(const std::string& args) {
        const std::string cmd = std::string("\"") + DENOLAB_CLI_PATH + "\" " + args + " > \"" +
                                (dir / "stdout.txt").string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static std::string data() { return "--data \"" + (dir / "prices.csv").string() + "\" --price-column Close --date-column Date"; }
    static std::string quick() { return data() + " --epochs 20 --tau-points 3 --workers 1"; }
};

fs::path Cli::dir;

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("bogus"), 1);
    EXPECT_EQ(run("run " + data() + " --split 1.5"), 1);
    EXPECT_EQ(run("label " + data() + " --tau-grid 0.1,0.01"), 1);
}

TEST_F(Cli, DataErrors) {
    EXPECT_EQ(run("ingest --data \"" + (dir / "missing.csv").string() + "\""), 2);
    // default column names do not exist in the fixture
    EXPECT_EQ(run("ingest --data \"" + (dir / "prices.csv").string() + "\""), 2);
    EXPECT_EQ(run("report --from \"" + (dir / "prices.csv").string() + "\" --out \"" + (dir / "r").string() + "\""), 2);
}

TEST_F(Cli, IngestAndLabel) {
    ASSERT_EQ(run("ingest " + data() + " --out \"" + (dir / "norm.csv").string() + "\""), 0);
    auto norm = slurp(dir / "norm.csv");
    EXPECT_EQ(norm.substr(0, norm.find('\n')), "Date,Close");
    ASSERT_EQ(run("label " + data() + " --tau 0.01"), 0);
    auto labels = slurp(dir / "stdout.txt");
    EXPECT_EQ(std::count(labels.begin(), labels.end(), '\n'), 300);
    ASSERT_EQ(run("label " + data() + " --sweep --tau-grid 0,0.01,1"), 0);
    auto sweep = slurp(dir / "stdout.txt");
    EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 4);
    EXPECT_NE(sweep.find("1,0,0,299"), std::string::npos) << sweep;
}

TEST_F(Cli, DenoiseAndTrainSvm) {
    const auto out = (dir / "den").string();
    ASSERT_EQ(run("denoise " + quick() + " --out \"" + out + "\""), 0);
    for (const char* f : {"denoised.csv", "autoencoder.bin", "features.bin", "loss_history.csv"})
        EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
    auto model = decode_checkpoint(slurp(fs::path(out) / "autoencoder.bin"));
    EXPECT_EQ(model.layers.size(), 5u);
    ASSERT_EQ(run("train-svm " + quick() + " --tau 0.005 --out \"" + out + "\""), 0);
    EXPECT_TRUE(fs::exists(fs::path(out) / "svm.bin"));
    EXPECT_NE(slurp(dir / "stdout.txt").find("macro F1"), std::string::npos);
}

TEST_F(Cli, IndicatorsAndDiff) {
    const auto a = (dir / "sig_a.csv").string(), b = (dir / "sig_b.csv").string();
    ASSERT_EQ(run("indicators " + data() + " --out \"" + a + "\""), 0);
    ASSERT_EQ(run("indicators " + data() + " --ma-short 5 --ma-long 20 --indicator ma_cross --out \"" + b + "\""), 0);
    ASSERT_EQ(run("diff-signals --original \"" + a + "\" --denoised \"" + b + "\" --markdown \"" +
                  (dir / "diff.md").string() + "\""),
              0);
    auto csv = slurp(dir / "stdout.txt");
    EXPECT_EQ(csv.rfind("indicator,", 0), 0u);
    EXPECT_NE(slurp(dir / "diff.md").find("Buy with Denoised Signals"), std::string::npos);
    EXPECT_EQ(run("indicators " + data() + " --indicator nonsense"), 1);
}

TEST_F(Cli, RunIsDeterministicAndReportReplays) {
    const auto a = (dir / "run_a").string(), b = (dir / "run_b").string(), c = (dir / "run_c").string();
    ASSERT_EQ(run("run " + quick() + " --out \"" + a + "\""), 0);
    ASSERT_EQ(run("run " + quick() + " --out \"" + b + "\""), 0);
    EXPECT_EQ(slurp(fs::path(a) / "report.json"), slurp(fs::path(b) / "report.json"));
    ASSERT_EQ(run("report --from \"" + (fs::path(a) / "report.json").string() + "\" --out \"" + c + "\""), 0);
    for (const char* f : {"report.json", "f1_vs_tau.svg", "price_overlay.svg", "summary.md"})
        EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(c) / f)) << f;
}

TEST_F(Cli, ConfigFileThenFlags) {
    std::ofstream(dir / "exp.cfg") << "# quick run\nepochs = 20\ntau_points = 3\nseed = 11\nworkers = 1\n";
    const auto out = (dir / "run_cfg").string();
    ASSERT_EQ(run("run " + data() + " --config \"" + (dir / "exp.cfg").string() + "\" --seed 12 --out \"" + out + "\""),
              0);
    auto r = load_report(fs::path(out) / "report.json");
    EXPECT_EQ(r.seed, 12u);
    EXPECT_EQ(r.per_tau.size(), 3u);
    std::ofstream(dir / "bad.cfg") << "nonsense = 1\n";
    EXPECT_EQ(run("run " + data() + " --config \"" + (dir / "bad.cfg").string() + "\""), 1);
}
