#include "denolab/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace denolab;

TEST(F1, PerfectPrediction) {
    std::vector<int> a{-1, 0, 1, 1, 0, -1};
    auto r = f1_scores(a, a);
    EXPECT_EQ(r.macro_f1, 1.0);
    EXPECT_EQ(r.weighted_f1, 1.0);
    EXPECT_TRUE(r.excluded.empty());
}

TEST(F1, AllUpAgainstHalfUpHalfDown) {
    std::vector<int> pred(10, 1), actual{1, 1, 1, 1, 1, -1, -1, -1, -1, -1};
    auto r = f1_scores(pred, actual);
    EXPECT_NEAR(r.per_class[2].f1, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(r.per_class[0].f1, 0.0);
    EXPECT_NEAR(r.macro_f1, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(r.excluded, std::vector<int>{0});
    EXPECT_EQ(r.confusion[0][2], 5u);
    EXPECT_EQ(r.confusion[2][2], 5u);
}

TEST(F1, AbsentClassIsExcluded) {
    auto r = f1_scores(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1});
    EXPECT_EQ(r.excluded, std::vector<int>{-1});
    // class 0: P = 1/2, R = 1; class 1: P = 1, R = 1/2
    EXPECT_NEAR(r.macro_f1, 2.0 / 3.0, 1e-15);
}

TEST(F1, PredictedOnlyClassStillCountsInPrecision) {
    // -1 never occurs in actual but is predicted once: excluded from the mean,
    // and the wrong prediction still costs class 0 its recall.
    auto r = f1_scores(std::vector<int>{-1, 0}, std::vector<int>{0, 0});
    EXPECT_EQ(r.excluded, (std::vector<int>{-1, 1}));
    EXPECT_NEAR(r.macro_f1, 2.0 * 1.0 * 0.5 / 1.5, 1e-15);
    EXPECT_EQ(r.per_class[0].predicted, 1u);
}

TEST(F1, Rejections) {
    EXPECT_THROW(f1_scores(std::vector<int>{}, std::vector<int>{}), EmptyInput);
    EXPECT_THROW(f1_scores(std::vector<int>{1}, std::vector<int>{1, 0}), ShapeMismatch);
    EXPECT_THROW(f1_scores(std::vector<int>{2}, std::vector<int>{1}), UsageError);
}

TEST(F1, RecomputedFromConfusionAndBounded) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> c(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> p(37), a(37);
        for (int i = 0; i < 37; ++i) {
            p[i] = c(rng);
            a[i] = trial % 5 == 0 ? 1 : c(rng);
        }
        auto r = f1_scores(p, a);
        auto again = f1_from_confusion(r.confusion);
        EXPECT_NEAR(again.macro_f1, r.macro_f1, 1e-12);
        for (const auto& s : r.per_class) {
            for (double v : {s.precision, s.recall, s.f1}) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
        // hand recomputation of per-class F1 = 2PR / (P + R)
        for (std::size_t k = 0; k < 3; ++k) {
            const int label = static_cast<int>(k) - 1;
            double tp = 0, fp = 0, fn = 0;
            for (int i = 0; i < 37; ++i) {
                tp += p[i] == label && a[i] == label;
                fp += p[i] == label && a[i] != label;
                fn += p[i] != label && a[i] == label;
            }
            const double want = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
            EXPECT_NEAR(r.per_class[k].f1, want, 1e-12);
        }
    }
}
