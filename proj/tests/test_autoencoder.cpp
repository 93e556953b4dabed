#include "denolab/autoencoder.hpp"
#include "denolab/features.hpp"
#include "denolab/synthetic.hpp"
#include "denolab/util.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace denolab;

namespace {

Matrix random_unit(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(r, c);
    for (auto& v : m.data()) v = u(rng);
    return m;
}

Architecture small_arch(std::size_t channels) {
    Architecture a;
    a.channels = channels;
    a.hidden = 4;
    a.bottleneck = 2;
    return a;
}

}  // namespace

TEST(Autoencoder, LayerStack) {
    auto m = make_autoencoder(Architecture{}, 1);
    ASSERT_EQ(m.layers.size(), 5u);
    EXPECT_EQ(m.layers[0].kind, LayerKind::conv);
    EXPECT_EQ(m.layers[1].kind, LayerKind::conv);
    EXPECT_EQ(m.layers[2].kind, LayerKind::transposed_conv);
    EXPECT_EQ(m.layers[3].kind, LayerKind::transposed_conv);
    EXPECT_EQ(m.layers[4].kind, LayerKind::conv);
    EXPECT_EQ(m.layers[4].activation, Activation::sigmoid);
    EXPECT_EQ(m.layers[1].out_channels, 8u);
    EXPECT_EQ(m.channels(), 40u);
}

TEST(Autoencoder, ShapeRoundTripAndOutputRange) {
    std::mt19937_64 rng(7);
    for (std::size_t L : {2u, 8u, 40u})
        for (std::size_t n : {16u, 64u, 502u}) {
            Architecture a;
            a.channels = L;
            auto m = make_autoencoder(a, 3);
            auto y = autoencoder_forward(m, random_unit(rng, L, n));
            ASSERT_EQ(y.rows(), L);
            ASSERT_EQ(y.cols(), n);
            for (double v : y.data()) {
                EXPECT_GT(v, 0.0);
                EXPECT_LT(v, 1.0);
            }
        }
}

TEST(Autoencoder, ZeroNetworkReconstructsMidpoint) {
    auto m = make_autoencoder(small_arch(3), 1);
    for (auto& l : m.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
    std::vector<double> p{10, 12, 11, 15, 14, 20};
    auto sc = fit_scaler(p);
    auto d = reconstruct(m, build_noisy_input(p, 3, sc), sc);
    for (double v : d.prices) EXPECT_DOUBLE_EQ(v, sc.unscale(0.5));
    EXPECT_EQ(d.max_channel_spread, 0.0);
}

TEST(Autoencoder, WholeModelGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 3; ++trial) {
        auto m = make_autoencoder(small_arch(3), 100 + trial);
        auto x = random_unit(rng, 3, 10);
        auto d = random_unit(rng, 3, 10);
        ParameterGradients g;
        loss_and_gradients(m, x, d, &g);
        auto loss = [&] { return loss_and_gradients(m, x, d, nullptr); };
        double worst = 0.0;
        for (std::size_t li = 0; li < m.layers.size(); ++li) {
            for (std::size_t j = 0; j < m.layers[li].weights.size(); ++j)
                worst = std::max(worst, oracle::relative_error(g.weights[li][j], oracle::central_difference(
                                                                                      loss, m.layers[li].weights[j])));
            for (std::size_t j = 0; j < m.layers[li].biases.size(); ++j)
                worst = std::max(worst, oracle::relative_error(g.biases[li][j], oracle::central_difference(
                                                                                     loss, m.layers[li].biases[j])));
        }
        EXPECT_LT(worst, 1e-4);
    }
}

TEST(Autoencoder, WindowedGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(9);
    TrainConfig cfg;
    cfg.window_cols = 8;
    cfg.window_stride = 5;
    auto m = make_autoencoder(small_arch(2), 5, cfg);
    auto x = random_unit(rng, 2, 21);
    auto d = random_unit(rng, 2, 21);
    ParameterGradients g;
    loss_and_gradients(m, x, d, &g);
    auto loss = [&] { return loss_and_gradients(m, x, d, nullptr); };
    double worst = 0.0;
    for (std::size_t li = 0; li < m.layers.size(); ++li)
        for (std::size_t j = 0; j < m.layers[li].weights.size(); ++j)
            worst = std::max(worst, oracle::relative_error(g.weights[li][j],
                                                           oracle::central_difference(loss, m.layers[li].weights[j])));
    EXPECT_LT(worst, 1e-4);
}

TEST(Autoencoder, ColumnWindowsCoverAndAverage) {
    EXPECT_EQ(column_windows(10, 16, 8), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 10}}));
    auto w = column_windows(5000, 2048, 1024);
    EXPECT_EQ(w.front(), (std::pair<std::size_t, std::size_t>{0, 2048}));
    EXPECT_EQ(w.back().second, 5000u);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LE(w[i].first, w[i - 1].second);

    // a column seen by two windows gets the mean of both window outputs
    std::mt19937_64 rng(10);
    TrainConfig cfg;
    cfg.window_cols = 12;
    cfg.window_stride = 6;
    auto m = make_autoencoder(small_arch(2), 1, cfg);
    auto x = random_unit(rng, 2, 30);
    auto y = autoencoder_forward(m, x);
    auto a = forward_trace(m, x.slice_cols(0, 12)).output();
    auto b = forward_trace(m, x.slice_cols(6, 18)).output();
    EXPECT_NEAR(y(1, 9), 0.5 * (a(1, 9) + b(1, 3)), 1e-15);
    EXPECT_EQ(y(0, 2), a(0, 2));
}

TEST(Training, ZeroLearningRateLeavesParameters) {
    std::mt19937_64 rng(11);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.0;
    for (auto opt : {Optimizer::adam, Optimizer::sgd}) {
        cfg.optimizer = opt;
        auto m = make_autoencoder(small_arch(2), 4, cfg);
        auto x = random_unit(rng, 2, 16);
        auto t = train(m, x, x);
        EXPECT_EQ(t.layers, m.layers);
        ASSERT_EQ(t.loss_history.size(), 5u);
        for (double l : t.loss_history) EXPECT_EQ(l, t.loss_history.front());
        EXPECT_EQ(t.final_loss, t.loss_history.front());
    }
}

TEST(Training, Deterministic) {
    std::mt19937_64 rng(12);
    TrainConfig cfg;
    cfg.epochs = 30;
    auto x = random_unit(rng, 4, 32);
    auto d = random_unit(rng, 4, 32);
    auto a = train(make_autoencoder(small_arch(4), 9, cfg), x, d);
    auto b = train(make_autoencoder(small_arch(4), 9, cfg), x, d);
    EXPECT_EQ(a, b);
    EXPECT_EQ(model_fingerprint(a), model_fingerprint(b));
    auto c = train(make_autoencoder(small_arch(4), 10, cfg), x, d);
    EXPECT_NE(model_fingerprint(a), model_fingerprint(c));
}

TEST(Training, LearnsIdentityMap) {
    // a 20 x 64 instance shaped like the noisy input: identical rows of a
    // scaled random walk
    std::mt19937_64 rng(13);
    auto walk = oracle::random_walk(rng, 64, 100.0, 0.02);
    auto sc = fit_scaler(walk);
    Matrix x(20, 64);
    for (std::size_t c = 0; c < 20; ++c)
        for (std::size_t t = 0; t < 64; ++t) x(c, t) = sc.scale(walk[t]);
    TrainConfig cfg;
    cfg.epochs = 200;
    Architecture a;
    a.channels = 20;
    auto m = train(make_autoencoder(a, 42, cfg), x, x);
    EXPECT_LT(m.final_loss, 0.01);
    EXPECT_LE(m.final_loss, m.loss_history.front());
    EXPECT_NEAR(mean_squared_error(autoencoder_forward(m, x), x), m.final_loss, 1e-15);
}

TEST(Training, EarlyStopAndValidation) {
    std::mt19937_64 rng(14);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.learning_rate = 0.0;
    cfg.patience = 3;
    auto x = random_unit(rng, 2, 16);
    auto m = train(make_autoencoder(small_arch(2), 1, cfg), x, x);
    EXPECT_TRUE(m.early_stopped);
    EXPECT_EQ(m.loss_history.size(), 4u);

    auto good = make_autoencoder(small_arch(2), 1);
    EXPECT_THROW(train(good, Matrix(2, 10), Matrix(2, 11)), ShapeMismatch);
    EXPECT_THROW(train(good, Matrix(3, 10), Matrix(3, 10)), ShapeMismatch);
    cfg.epochs = 0;
    EXPECT_THROW(train(make_autoencoder(small_arch(2), 1, cfg), x, x), ConfigError);
}

TEST(Training, LossDescentOnFixture) {
    SineFixture f;
    auto p = sine_prices(f);
    auto fm = build_feature_matrices(p, 2, 21, fit_scaler(p, 0, 400));
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.patience.reset();
    auto m = train(make_autoencoder(Architecture{}, 42, cfg), fm.noisy.slice_cols(0, 400), fm.pure.slice_cols(0, 400));
    ASSERT_EQ(m.loss_history.size(), 150u);
    EXPECT_LT(m.loss_history.back(), 0.2 * m.loss_history[5]);
    const auto best = [&](std::size_t upto) {
        return *std::min_element(m.loss_history.begin(), m.loss_history.begin() + upto);
    };
    EXPECT_LT(best(150), best(100));
    EXPECT_LT(best(100), best(50));
    EXPECT_LE(m.final_loss, m.loss_history.front());

    // every increase beyond 5% is flagged, nothing else is
    std::vector<std::size_t> recount;
    for (std::size_t e = 6; e < m.loss_history.size(); ++e)
        if (m.loss_history[e] / m.loss_history[e - 1] - 1.0 > 0.05) recount.push_back(e);
    EXPECT_EQ(loss_increase_flags(m.loss_history), recount);
    RecordProperty("flagged_epochs", static_cast<int>(recount.size()));
}

TEST(Training, LossFlagsOnHandSeries) {
    std::vector<double> h{9, 8, 7, 6, 5, 4, 3, 3.1, 3.3, 3.0, 3.16, 2.0};
    // 3 -> 3.1 is +3.3%, 3.1 -> 3.3 is +6.5%, 3.0 -> 3.16 is +5.3%
    EXPECT_EQ(loss_increase_flags(h), (std::vector<std::size_t>{8, 10}));
    EXPECT_TRUE(loss_increase_flags(std::vector<double>{1, 2, 3, 4, 5, 6}).empty());
}

TEST(Reconstruct, FixtureGetsSmoother) {
    SineFixture f;
    auto p = sine_prices(f);
    auto sc = fit_scaler(p, 0, 400);
    auto fm = build_feature_matrices(p, 2, 21, sc);
    auto m = train(make_autoencoder(Architecture{}, 42), fm.noisy.slice_cols(0, 400), fm.pure.slice_cols(0, 400));
    auto d = reconstruct(m, fm.noisy, sc);
    ASSERT_EQ(d.prices.size(), p.size());
    EXPECT_LT(total_variation(d.prices), total_variation(p));
    EXPECT_GT(d.max_channel_spread, 0.0);
    EXPECT_EQ(d.model_fingerprint, model_fingerprint(m));
}

TEST(Checkpoint, RoundTripAndCorruption) {
    std::mt19937_64 rng(15);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.patience = 7;
    auto x = random_unit(rng, 2, 12);
    auto m = train(make_autoencoder(small_arch(2), 77, cfg), x, x);
    auto bytes = encode_checkpoint(m);
    EXPECT_EQ(decode_checkpoint(bytes), m);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), IoError);
    auto bad = bytes;
    bad[1] = '?';
    EXPECT_THROW(decode_checkpoint(bad), IoError);
}
