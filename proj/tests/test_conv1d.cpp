#include "denolab/conv1d.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace denolab;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (auto& v : m.data()) v = u(rng);
    return m;
}

Conv1dLayer random_layer(std::mt19937_64& rng, LayerKind kind, std::size_t in, std::size_t out, std::size_t k,
                         Activation act) {
    Conv1dLayer l(kind, in, out, k, act);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (auto& w : l.weights) w = u(rng);
    for (auto& b : l.biases) b = u(rng);
    return l;
}

}  // namespace

TEST(ConvForward, IdentityKernel) {
    std::mt19937_64 rng(1);
    for (auto kind : {LayerKind::conv, LayerKind::transposed_conv}) {
        Conv1dLayer l(kind, 2, 2, 3, Activation::linear);
        l.w(0, 0, 1) = 1.0;
        l.w(1, 1, 1) = 1.0;
        auto x = random_matrix(rng, 2, 9);
        EXPECT_EQ(conv1d_forward(x, l), x);
    }
}

TEST(ConvForward, ZeroWeightsGiveSigmoidOfBias) {
    Conv1dLayer l(LayerKind::conv, 3, 2, 3, Activation::sigmoid);
    l.biases = {0.7, -1.3};
    std::mt19937_64 rng(2);
    auto y = conv1d_forward(random_matrix(rng, 3, 11), l);
    for (std::size_t t = 0; t < 11; ++t) {
        EXPECT_DOUBLE_EQ(y(0, t), 1.0 / (1.0 + std::exp(-0.7)));
        EXPECT_DOUBLE_EQ(y(1, t), 1.0 / (1.0 + std::exp(1.3)));
    }
}

TEST(ConvForward, MatchesDirectSummation) {
    std::mt19937_64 rng(3);
    for (auto kind : {LayerKind::conv, LayerKind::transposed_conv})
        for (auto act : {Activation::linear, Activation::relu, Activation::sigmoid})
            for (std::size_t k : {1u, 3u, 5u}) {
                auto l = random_layer(rng, kind, 3, 4, k, act);
                auto x = random_matrix(rng, 3, 17);
                auto got = conv1d_forward(x, l);
                auto want = oracle::conv(l, x);
                for (std::size_t j = 0; j < got.size(); ++j) EXPECT_NEAR(got.data()[j], want.data()[j], 1e-10);
            }
}

TEST(ConvForward, ShortInputsNarrowerThanKernel) {
    std::mt19937_64 rng(4);
    auto l = random_layer(rng, LayerKind::transposed_conv, 2, 2, 5, Activation::linear);
    for (std::size_t n : {1u, 2u, 3u}) {
        auto x = random_matrix(rng, 2, n);
        auto got = conv1d_forward(x, l);
        auto want = oracle::conv(l, x);
        for (std::size_t j = 0; j < got.size(); ++j) EXPECT_NEAR(got.data()[j], want.data()[j], 1e-12);
    }
}

TEST(ConvForward, Rejections) {
    Conv1dLayer l(LayerKind::conv, 2, 2, 3, Activation::linear);
    EXPECT_THROW(conv1d_forward(Matrix(3, 5), l), ShapeMismatch);
    Conv1dLayer even(LayerKind::conv, 1, 1, 2, Activation::linear);
    EXPECT_THROW(conv1d_forward(Matrix(1, 5), even), ShapeMismatch);
    Conv1dLayer strided(LayerKind::conv, 1, 1, 3, Activation::linear);
    strided.stride = 2;
    EXPECT_THROW(conv1d_forward(Matrix(1, 5), strided), ShapeMismatch);
}

TEST(ConvBackward, ZeroUpstreamAndIdentityJacobian) {
    std::mt19937_64 rng(5);
    auto l = random_layer(rng, LayerKind::conv, 2, 3, 3, Activation::sigmoid);
    auto x = random_matrix(rng, 2, 8);
    auto g = conv1d_backward(l, x, Matrix(3, 8));
    for (double v : g.input.data()) EXPECT_EQ(v, 0.0);
    for (double v : g.weights) EXPECT_EQ(v, 0.0);
    for (double v : g.biases) EXPECT_EQ(v, 0.0);

    Conv1dLayer id(LayerKind::conv, 2, 2, 3, Activation::linear);
    id.w(0, 0, 1) = id.w(1, 1, 1) = 1.0;
    auto up = random_matrix(rng, 2, 8);
    EXPECT_EQ(conv1d_backward(id, x, up).input, up);
}

// Loss = sum(c * forward(x)) for a fixed random c, so the upstream gradient
// is c itself.
TEST(ConvBackward, FiniteDifferences) {
    std::mt19937_64 rng(6);
    int trials = 0;
    double worst = 0.0;
    for (auto kind : {LayerKind::conv, LayerKind::transposed_conv})
        for (auto act : {Activation::linear, Activation::relu, Activation::sigmoid})
            for (int rep = 0; rep < 4; ++rep) {
                const std::size_t in = 1 + rep % 3, out = 1 + (rep + 1) % 3, k = rep % 2 ? 5 : 3;
                auto l = random_layer(rng, kind, in, out, k, act);
                auto x = random_matrix(rng, in, 8);
                auto c = random_matrix(rng, out, 8);
                auto loss = [&] {
                    auto y = oracle::conv(l, x);
                    double s = 0.0;
                    for (std::size_t j = 0; j < y.size(); ++j) s += c.data()[j] * y.data()[j];
                    return s;
                };
                auto g = conv1d_backward(l, x, c);
                for (std::size_t j = 0; j < l.weights.size(); ++j)
                    worst = std::max(worst, oracle::relative_error(g.weights[j],
                                                                   oracle::central_difference(loss, l.weights[j])));
                for (std::size_t j = 0; j < l.biases.size(); ++j)
                    worst = std::max(worst, oracle::relative_error(g.biases[j],
                                                                   oracle::central_difference(loss, l.biases[j])));
                for (std::size_t j = 0; j < x.size(); ++j)
                    worst = std::max(worst, oracle::relative_error(g.input.data()[j],
                                                                   oracle::central_difference(loss, x.data()[j])));
                ++trials;
            }
    EXPECT_GE(trials, 20);
    EXPECT_LT(worst, 1e-4);
}
