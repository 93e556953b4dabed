#pragma once

#include "denolab/error.hpp"
#include "denolab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace denolab {

enum class LayerKind { conv, transposed_conv };
enum class Activation { relu, sigmoid, linear };

inline const char* to_string(LayerKind k) { return k == LayerKind::conv ? "conv" : "transposed_conv"; }

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
    }
    return "linear";
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// One stride-1, same-length 1-D convolution over a (channels x time) matrix.
//
// Weights are stored out x in x kernel for both kinds. A conv layer computes
//   y[o][t] = b[o] + sum_{i,k} w[o][i][k] * x[i][t + k - pad]
// and a transposed conv layer, which at stride 1 is the same operation with
// the kernel flipped,
//   y[o][t] = b[o] + sum_{i,k} w[o][i][k] * x[i][t - k + pad]
// with pad = (kernel - 1) / 2 and zeros outside [0, n).
struct Conv1dLayer {
    LayerKind kind = LayerKind::conv;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_size = 3;
    std::size_t stride = 1;
    Activation activation = Activation::linear;
    std::vector<double> weights;
    std::vector<double> biases;

    Conv1dLayer() = default;
    Conv1dLayer(LayerKind k, std::size_t in, std::size_t out, std::size_t kernel, Activation act)
        : kind(k), in_channels(in), out_channels(out), kernel_size(kernel), activation(act),
          weights(in * out * kernel, 0.0), biases(out, 0.0) {}

    std::size_t weight_index(std::size_t o, std::size_t i, std::size_t k) const {
        return (o * in_channels + i) * kernel_size + k;
    }
    double& w(std::size_t o, std::size_t i, std::size_t k) { return weights[weight_index(o, i, k)]; }
    double w(std::size_t o, std::size_t i, std::size_t k) const { return weights[weight_index(o, i, k)]; }

    // Input position read by tap k for output position t is t + tap_offset(k).
    std::ptrdiff_t tap_offset(std::size_t k) const {
        const auto pad = static_cast<std::ptrdiff_t>((kernel_size - 1) / 2);
        const auto kk = static_cast<std::ptrdiff_t>(k);
        return kind == LayerKind::conv ? kk - pad : pad - kk;
    }

    std::size_t parameter_count() const { return weights.size() + biases.size(); }

    void validate() const {
        if (stride != 1) throw ShapeMismatch("only stride 1 is supported");
        if (kernel_size == 0 || kernel_size % 2 == 0)
            throw ShapeMismatch("same-length padding needs an odd kernel size");
        if (weights.size() != in_channels * out_channels * kernel_size || biases.size() != out_channels)
            throw ShapeMismatch("parameter arrays do not match declared channels/kernel");
    }

    bool operator==(const Conv1dLayer&) const = default;
};

namespace detail {

// Valid output range [t_lo, t_hi) for a tap with the given offset.
inline void tap_range(std::ptrdiff_t offset, std::size_t n, std::size_t& t_lo, std::size_t& t_hi) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    t_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -offset));
    t_hi = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, std::min(sn, sn - offset)));
}

}  // namespace detail

// Pre-activation pass: bias plus the (possibly flipped) cross-correlation.
inline Matrix conv1d_linear(const Matrix& input, const Conv1dLayer& layer) {
    layer.validate();
    if (input.rows() != layer.in_channels)
        throw ShapeMismatch("layer expects " + std::to_string(layer.in_channels) + " input channels, got " +
                            std::to_string(input.rows()));
    const std::size_t n = input.cols();
    Matrix z(layer.out_channels, n);
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        double* zo = z.row(o).data();
        std::fill(zo, zo + n, layer.biases[o]);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const double* xi = input.row(i).data();
            for (std::size_t k = 0; k < layer.kernel_size; ++k) {
                const double wv = layer.w(o, i, k);
                const auto off = layer.tap_offset(k);
                std::size_t lo = 0, hi = 0;
                detail::tap_range(off, n, lo, hi);
                if (hi <= lo) continue;
                const double* src = xi + (static_cast<std::ptrdiff_t>(lo) + off);
                for (std::size_t t = lo; t < hi; ++t) zo[t] += wv * src[t - lo];
            }
        }
    }
    return z;
}

inline void apply_activation(Matrix& z, Activation act) {
    switch (act) {
        case Activation::relu:
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::sigmoid:
            for (double& v : z.data()) v = sigmoid(v);
            break;
        case Activation::linear:
            break;
    }
}

inline Matrix conv1d_forward(const Matrix& input, const Conv1dLayer& layer) {
    Matrix z = conv1d_linear(input, layer);
    apply_activation(z, layer.activation);
    return z;
}

struct ConvGradients {
    Matrix input;
    std::vector<double> weights;
    std::vector<double> biases;
};

// Exact gradients of conv1d_forward given the layer's forward output.
inline ConvGradients conv1d_backward(const Conv1dLayer& layer, const Matrix& input, const Matrix& output,
                                     const Matrix& upstream) {
    layer.validate();
    const std::size_t n = input.cols();
    if (input.rows() != layer.in_channels || output.rows() != layer.out_channels || output.cols() != n ||
        !upstream.same_shape(output))
        throw ShapeMismatch("backward shapes inconsistent with forward");

    // Gradient with respect to the pre-activation.
    Matrix dz = upstream;
    auto dzd = dz.data();
    auto outd = output.data();
    switch (layer.activation) {
        case Activation::relu:
            for (std::size_t j = 0; j < dzd.size(); ++j)
                if (!(outd[j] > 0.0)) dzd[j] = 0.0;
            break;
        case Activation::sigmoid:
            for (std::size_t j = 0; j < dzd.size(); ++j) dzd[j] *= outd[j] * (1.0 - outd[j]);
            break;
        case Activation::linear:
            break;
    }

    ConvGradients g{Matrix(layer.in_channels, n), std::vector<double>(layer.weights.size(), 0.0),
                    std::vector<double>(layer.out_channels, 0.0)};
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        const double* dzo = dz.row(o).data();
        double bsum = 0.0;
        for (std::size_t t = 0; t < n; ++t) bsum += dzo[t];
        g.biases[o] = bsum;
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const double* xi = input.row(i).data();
            double* dxi = g.input.row(i).data();
            for (std::size_t k = 0; k < layer.kernel_size; ++k) {
                const auto off = layer.tap_offset(k);
                std::size_t lo = 0, hi = 0;
                detail::tap_range(off, n, lo, hi);
                if (hi <= lo) continue;
                const double wv = layer.w(o, i, k);
                const double* src = xi + (static_cast<std::ptrdiff_t>(lo) + off);
                double* dst = dxi + (static_cast<std::ptrdiff_t>(lo) + off);
                double wsum = 0.0;
                for (std::size_t t = lo; t < hi; ++t) {
                    wsum += dzo[t] * src[t - lo];
                    dst[t - lo] += wv * dzo[t];
                }
                g.weights[layer.weight_index(o, i, k)] = wsum;
            }
        }
    }
    return g;
}

inline ConvGradients conv1d_backward(const Conv1dLayer& layer, const Matrix& input, const Matrix& upstream) {
    return conv1d_backward(layer, input, conv1d_forward(input, layer), upstream);
}

}  // namespace denolab
