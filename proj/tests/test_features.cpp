#include "denolab/features.hpp"
#include "denolab/util.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <iostream>
#include <random>
#include <sstream>

using namespace denolab;

TEST(Sma, ExpandingThenFull) {
    EXPECT_EQ(sma(std::vector<double>{1, 2, 3, 4}, 3), (std::vector<double>{1, 1.5, 2, 3}));
}

TEST(Sma, ConstantSeriesIsExact) {
    for (double c : {0.1, 3.3, 2272.0, 1e-7})
        for (int w : {2, 3, 7, 20}) {
            std::vector<double> p(25, c);
            for (double v : sma(p, w)) EXPECT_EQ(v, c);
            for (double v : ema(p, w)) EXPECT_EQ(v, c);
        }
}

TEST(Sma, MatchesResummationOracle) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = oracle::random_walk(rng, 50);
        for (int w : {2, 5, 13, 50}) {
            auto got = sma(p, w);
            auto want = oracle::sma(p, static_cast<std::size_t>(w));
            for (std::size_t t = 0; t < p.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-12 * want[t]);
        }
    }
}

TEST(Sma, StaysWithinInputRange) {
    std::mt19937_64 rng(29);
    auto p = oracle::random_walk(rng, 200, 10.0, 0.05);
    auto [lo, hi] = std::minmax_element(p.begin(), p.end());
    for (int w : {2, 9, 40})
        for (double v : sma(p, w)) {
            EXPECT_GE(v, *lo * (1 - 1e-15));
            EXPECT_LE(v, *hi * (1 + 1e-15));
        }
}

TEST(Ema, FirstSteps) { EXPECT_EQ(ema(std::vector<double>{0, 1, 1}, 3), (std::vector<double>{0, 0.5, 0.75})); }

TEST(Ema, MatchesClosedForm) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = oracle::random_walk(rng, 50);
        for (int w : {2, 12, 26}) {
            auto got = ema(p, w);
            auto want = oracle::ema(p, static_cast<std::size_t>(w));
            for (std::size_t t = 0; t < p.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-11 * want[t]);
        }
    }
}

TEST(Windows, OutOfRange) {
    std::vector<double> p{1, 2, 3};
    EXPECT_THROW(sma(p, 1), WindowOutOfRange);
    EXPECT_THROW(sma(p, 4), WindowOutOfRange);
    EXPECT_THROW(ema(p, 0), WindowOutOfRange);
}

// Heuristic only: a wider SMA is usually smoother. Violations are logged.
TEST(Sma, WiderWindowSmoothnessSmoke) {
    std::mt19937_64 rng(37);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto p = oracle::random_walk(rng, 120, 50.0, 0.02);
        for (int w = 2; w < 20; ++w)
            if (total_variation(sma(p, w + 1)) > total_variation(sma(p, w)) * (1 + 1e-12)) ++violations;
    }
    if (violations) std::cout << "[info] wider SMA increased total variation in " << violations << " of 1800 cases\n";
    SUCCEED();
}

TEST(Scaler, FitAndRoundTrip) {
    std::vector<double> p(100);
    for (int i = 0; i < 100; ++i) p[i] = i + 1;
    auto s = fit_scaler(p);
    EXPECT_EQ(s.min, 1.0);
    EXPECT_EQ(s.max, 100.0);
    std::mt19937_64 rng(41);
    auto q = oracle::random_walk(rng, 300);
    auto sq = fit_scaler(q);
    for (double v : q) EXPECT_NEAR(sq.unscale(sq.scale(v)), v, 1e-12 * v);
}

TEST(Scaler, TrainingSegmentFitExtrapolates) {
    std::vector<double> up(100);
    for (int i = 0; i < 100; ++i) up[i] = 10.0 + i;
    auto s = fit_scaler(up, 0, 80);
    EXPECT_GT(s.scale(up[99]), 1.0);
    EXPECT_EQ(s.fit_end, 80u);
    EXPECT_THROW(fit_scaler(std::vector<double>(10, 5.0)), DegenerateScaler);
    EXPECT_THROW(fit_scaler(up, 5, 5), UsageError);
}

TEST(PureInput, RowCountsAndOrder) {
    std::mt19937_64 rng(43);
    auto p = oracle::random_walk(rng, 60);
    auto sc = fit_scaler(p);
    EXPECT_EQ(build_pure_input(p, 2, 2, sc).rows(), 2u);
    auto d = build_pure_input(p, 2, 21, sc);
    EXPECT_EQ(d.rows(), 40u);
    EXPECT_EQ(d.cols(), 60u);
    auto specs = moving_average_specs(2, 21, PureStructure::combined);
    EXPECT_EQ(specs.front().kind, MovingAverageKind::sma);
    EXPECT_EQ(specs[19].window, 21);
    EXPECT_EQ(specs[20].kind, MovingAverageKind::ema);
    EXPECT_EQ(specs[20].window, 2);
    // row 25 is EMA 7
    auto e7 = oracle::ema(p, 7);
    for (std::size_t t = 0; t < p.size(); ++t) EXPECT_NEAR(d(25, t), sc.scale(e7[t]), 1e-12);
    EXPECT_EQ(build_pure_input(p, 3, 5, sc, PureStructure::sma_only).rows(), 3u);
    EXPECT_EQ(build_pure_input(p, 3, 5, sc, PureStructure::ema_only).rows(), 3u);
}

TEST(PureInput, Rejections) {
    std::vector<double> p{1, 2, 3, 4, 5};
    auto sc = fit_scaler(p);
    EXPECT_THROW(build_pure_input(p, 1, 3, sc), WindowOutOfRange);
    EXPECT_THROW(build_pure_input(p, 2, 6, sc), WindowOutOfRange);
    std::vector<double> flat(10, 3.0);
    EXPECT_THROW(build_feature_matrices(flat, 2, 3, ScalerParams{3.0, 3.0, 0, 10}), DegenerateScaler);
}

TEST(NoisyInput, IdenticalRowsThatUnscale) {
    std::mt19937_64 rng(47);
    auto p = oracle::random_walk(rng, 40);
    auto sc = fit_scaler(p);
    auto x = build_noisy_input(p, 3, sc);
    ASSERT_EQ(x.rows(), 3u);
    for (std::size_t t = 0; t < p.size(); ++t) {
        EXPECT_EQ(x(0, t), x(2, t));
        EXPECT_EQ(x(1, t), x(2, t));
        EXPECT_NEAR(sc.unscale(x(0, t)), p[t], 1e-12 * p[t]);
    }
}

TEST(FeatureMatrices, BinaryRoundTrip) {
    std::mt19937_64 rng(53);
    auto p = oracle::random_walk(rng, 33);
    auto f = build_feature_matrices(p, 2, 6, fit_scaler(p, 0, 26), PureStructure::combined);
    EXPECT_TRUE(f.pure.same_shape(f.noisy));
    auto g = decode_features(encode_features(f));
    EXPECT_EQ(f, g);
    auto bytes = encode_features(f);
    bytes[0] = 'X';
    EXPECT_THROW(decode_features(bytes), IoError);
    std::ostringstream csv;
    write_features_csv(csv, f);
    EXPECT_NE(csv.str().find("SMA2"), std::string::npos);
}
