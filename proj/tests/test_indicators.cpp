#include "denolab/indicators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace denolab;

namespace {

std::vector<std::size_t> indices(const std::vector<BuySignal>& s) {
    std::vector<std::size_t> out;
    for (const auto& x : s) out.push_back(x.index);
    return out;
}

BuySignal at(std::size_t i, double price, IndicatorKind k = IndicatorKind::ma_cross) { return {i, "", price, k}; }

}  // namespace

TEST(Indicators, ConstantSeriesHasNoSignals) {
    for (double c : {1.0, 2272.0, 0.37}) {
        std::vector<double> p(300, c);
        EXPECT_TRUE(ma_crossover_buys(p, 10, 50).empty());
        EXPECT_TRUE(macd_buys(p).empty());
        EXPECT_TRUE(bollinger_buys(p).empty());
        auto lines = macd_lines(p);
        for (double v : lines.macd) EXPECT_EQ(v, 0.0);
        for (double v : lines.signal) EXPECT_EQ(v, 0.0);
    }
}

TEST(Indicators, VShapeHasOneMaCross) {
    std::vector<double> p;
    for (int i = 0; i < 30; ++i) p.push_back(100.0 - i);
    for (int i = 1; i <= 30; ++i) p.push_back(71.0 + i);
    auto got = indices(ma_crossover_buys(p, 5, 15));
    auto want = oracle::ma_cross(p, 5, 15);
    ASSERT_EQ(want.size(), 1u);
    EXPECT_EQ(got, want);
}

TEST(Indicators, ImpulseMacdMatchesRecomputation) {
    std::vector<double> p(120, 50.0);
    for (std::size_t t = 60; t < p.size(); ++t) p[t] = 55.0;
    std::vector<double> dip = p;
    for (std::size_t t = 80; t < dip.size(); ++t) dip[t] = 45.0;
    for (const auto& s : {p, dip}) EXPECT_EQ(indices(macd_buys(s)), oracle::macd_cross(s));
    EXPECT_EQ(indices(macd_buys(p)), std::vector<std::size_t>{60});
}

TEST(Indicators, SpikeGivesOneBollingerBuy) {
    std::vector<double> p(200, 100.0);
    p[120] = 70.0;
    auto got = indices(bollinger_buys(p));
    auto want = oracle::bb_cross(p);
    EXPECT_EQ(got, want);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0], 121u);
}

TEST(Indicators, RandomSeriesMatchOracles) {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = oracle::random_walk(rng, 300, 100.0, 0.015);
        EXPECT_EQ(indices(ma_crossover_buys(p, 10, 50)), oracle::ma_cross(p, 10, 50));
        EXPECT_EQ(indices(macd_buys(p)), oracle::macd_cross(p));
        EXPECT_EQ(indices(bollinger_buys(p)), oracle::bb_cross(p));
    }
}

TEST(Indicators, ShiftInvariance) {
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = oracle::random_walk(rng, 300, 100.0, 0.02);
        auto q = p;
        for (double& v : q) v += 37.5;
        EXPECT_EQ(indices(ma_crossover_buys(p, 10, 50)), indices(ma_crossover_buys(q, 10, 50)));
        EXPECT_EQ(indices(macd_buys(p)), indices(macd_buys(q)));
        EXPECT_EQ(indices(bollinger_buys(p)), indices(bollinger_buys(q)));
    }
}

TEST(Indicators, Rejections) {
    std::vector<double> p(100, 1.0);
    EXPECT_THROW(ma_crossover_buys(p, 50, 10), WindowOrder);
    EXPECT_THROW(ma_crossover_buys(p, 10, 10), WindowOrder);
    EXPECT_THROW(ma_crossover_buys(p, 10, 101), WindowOutOfRange);
    EXPECT_THROW(macd_buys(std::vector<double>(35, 1.0)), SeriesTooShort);
    EXPECT_NO_THROW(macd_buys(std::vector<double>(36, 1.0)));
    EXPECT_THROW(bollinger_buys(std::vector<double>(20, 1.0)), SeriesTooShort);
}

TEST(Indicators, SignalsCarryTimestampAndPrice) {
    std::vector<double> p;
    std::vector<std::string> ts;
    for (int i = 0; i < 60; ++i) {
        p.push_back(i < 30 ? 100.0 - i : 41.0 + 2 * i);
        ts.push_back("t" + std::to_string(i));
    }
    auto s = ma_crossover_buys(p, 5, 15);
    ASSERT_FALSE(s.empty());
    EXPECT_EQ(s[0].price, p[s[0].index]);
    std::vector<double> exec(p.size(), 1.0);
    annotate_signals(s, ts, exec);
    EXPECT_EQ(s[0].timestamp, "t" + std::to_string(s[0].index));
    EXPECT_EQ(s[0].price, 1.0);
}

TEST(Diff, IdenticalLists) {
    std::vector<BuySignal> a{at(3, 10), at(20, 12), at(40, 9)};
    auto d = diff_signals(a, a);
    EXPECT_EQ(d.pairs.size(), 3u);
    for (const auto& p : d.pairs) {
        EXPECT_EQ(p.price_delta, 0.0);
        EXPECT_EQ(p.comparison, PriceComparison::equal);
    }
}

TEST(Diff, DisjointLists) {
    std::vector<BuySignal> a{at(3, 10), at(20, 12)}, b{at(50, 1), at(80, 2)};
    auto d = diff_signals(a, b);
    EXPECT_TRUE(d.pairs.empty());
    EXPECT_EQ(d.unmatched_original.size(), 2u);
    EXPECT_EQ(d.unmatched_denoised.size(), 2u);
}

TEST(Diff, GreedyNearestWithinWindow) {
    std::vector<BuySignal> a{at(10, 100), at(14, 105), at(30, 90)};
    std::vector<BuySignal> b{at(13, 104), at(16, 99), at(36, 95)};
    auto d = diff_signals(a, b, 5);
    // gaps: (14,13)=1 first, then (10,13) blocked, (14,16) blocked, (30,36)=6 too far; (10,16)=6 too far
    ASSERT_EQ(d.pairs.size(), 1u);
    EXPECT_EQ(d.pairs[0].original.index, 14u);
    EXPECT_EQ(d.pairs[0].denoised.index, 13u);
    EXPECT_EQ(d.pairs[0].comparison, PriceComparison::lower);
    EXPECT_EQ(d.count_lower(), 1u);
    EXPECT_EQ(d.pairs.size() + d.unmatched_original.size(), a.size());
    EXPECT_EQ(d.pairs.size() + d.unmatched_denoised.size(), b.size());
}

TEST(Diff, CountsAreConservedOnRandomLists) {
    std::mt19937_64 rng(71);
    std::uniform_int_distribution<std::size_t> idx(0, 200);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<BuySignal> a, b;
        for (int i = 0; i < 14; ++i) a.push_back(at(idx(rng), 1.0));
        for (int i = 0; i < 8; ++i) b.push_back(at(idx(rng), 1.0));
        auto d = diff_signals(a, b);
        EXPECT_EQ(d.pairs.size() + d.unmatched_original.size(), a.size());
        EXPECT_EQ(d.pairs.size() + d.unmatched_denoised.size(), b.size());
        for (const auto& p : d.pairs) {
            const auto gap = p.original.index > p.denoised.index ? p.original.index - p.denoised.index
                                                                  : p.denoised.index - p.original.index;
            EXPECT_LE(gap, 5u);
        }
    }
}

TEST(Diff, CsvAndMarkdown) {
    std::vector<BuySignal> a{at(1, 2272.0), at(9, 2300.0)}, b{at(2, 2260.5)};
    a[0].timestamp = "2017-01-18";
    b[0].timestamp = "2017-01-19";
    auto d = diff_signals(a, b);
    std::ostringstream csv, md;
    write_diff_csv(csv, d, "ma_cross");
    write_diff_markdown(md, d, "MA crossover");
    EXPECT_NE(csv.str().find("ma_cross,2017-01-18,1,2272,2017-01-19,2,2260.5,-11.5,lower"), std::string::npos);
    EXPECT_NE(md.str().find("| Date | Buy with Original Signals | Date | Buy with Denoised Signals |"),
              std::string::npos);
    EXPECT_NE(md.str().find("| 2017-01-18 | 2272.00 | 2017-01-19 | 2260.50 (lower) |"), std::string::npos);
}

TEST(Signals, CsvRoundTrip) {
    std::vector<BuySignal> s{{3, "2018-12-19", 2507.25, IndicatorKind::bb}, {7, "2018-12-27", 2488.5,
                                                                            IndicatorKind::macd}};
    std::stringstream io;
    write_signals_csv(io, s);
    EXPECT_EQ(read_signals_csv(io), s);
    std::istringstream bad("indicator,timestamp,index,price\nfoo,x,1,2\n");
    EXPECT_THROW(read_signals_csv(bad), ParseError);
}
