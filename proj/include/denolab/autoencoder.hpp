#pragma once

#include "denolab/binary_io.hpp"
#include "denolab/conv1d.hpp"
#include "denolab/error.hpp"
#include "denolab/features.hpp"
#include "denolab/matrix.hpp"
#include "denolab/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace denolab {

enum class Optimizer { sgd, adam };

inline const char* to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

inline Optimizer parse_optimizer(std::string_view s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adam") return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

// Full-batch training on the mean squared reconstruction error.
struct TrainConfig {
    int epochs = 500;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adam;
    std::optional<int> patience = 50;  // early stop on training loss; nullopt disables
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    // Series longer than window_cols are trained and reconstructed on
    // overlapping windows of this many columns, window_stride apart.
    std::size_t window_cols = 2048;
    std::size_t window_stride = 1024;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw ConfigError("learning rate must be finite and >= 0");
        if (patience && *patience < 1) throw ConfigError("patience must be >= 1");
        if (window_cols < 1 || window_stride < 1 || window_stride > window_cols)
            throw ConfigError("need 1 <= window_stride <= window_cols");
    }

    bool operator==(const TrainConfig&) const = default;
};

// Channel widths of the encoder/decoder stack around the L input channels.
struct Architecture {
    std::size_t channels = 40;  // L
    std::size_t hidden = 16;
    std::size_t bottleneck = 8;
    std::size_t kernel_size = 3;

    bool operator==(const Architecture&) const = default;
};

struct AutoencoderModel {
    std::vector<Conv1dLayer> layers;
    std::uint64_t seed = 0;
    TrainConfig train_config;
    std::vector<double> loss_history;  // loss at the start of each epoch
    double final_loss = std::nan("");  // loss after the last update
    bool early_stopped = false;

    std::size_t channels() const { return layers.empty() ? 0 : layers.front().in_channels; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.parameter_count();
        return n;
    }

    bool operator==(const AutoencoderModel&) const = default;
};

// Encoder: conv L->hidden, conv hidden->bottleneck (relu). Decoder:
// transposed conv bottleneck->hidden, hidden->L (relu). Output: conv L->L
// with sigmoid. Weights and biases are drawn uniformly from
// +-1/sqrt(fan_in) with a generator seeded by `seed`.
inline AutoencoderModel make_autoencoder(const Architecture& arch, std::uint64_t seed,
                                         const TrainConfig& train_config = {}) {
    if (arch.channels < 1 || arch.hidden < 1 || arch.bottleneck < 1)
        throw ConfigError("autoencoder channel counts must be >= 1");
    const auto k = arch.kernel_size;
    AutoencoderModel m;
    m.seed = seed;
    m.train_config = train_config;
    m.layers = {
        Conv1dLayer(LayerKind::conv, arch.channels, arch.hidden, k, Activation::relu),
        Conv1dLayer(LayerKind::conv, arch.hidden, arch.bottleneck, k, Activation::relu),
        Conv1dLayer(LayerKind::transposed_conv, arch.bottleneck, arch.hidden, k, Activation::relu),
        Conv1dLayer(LayerKind::transposed_conv, arch.hidden, arch.channels, k, Activation::relu),
        Conv1dLayer(LayerKind::conv, arch.channels, arch.channels, k, Activation::sigmoid),
    };
    std::mt19937_64 rng(seed);
    for (auto& layer : m.layers) {
        layer.validate();
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_channels * layer.kernel_size));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weights) w = dist(rng);
        for (double& b : layer.biases) b = dist(rng);
    }
    return m;
}

// Per-layer outputs of one forward pass; activations[0] is the input.
struct ForwardTrace {
    std::vector<Matrix> activations;
    const Matrix& output() const { return activations.back(); }
};

inline ForwardTrace forward_trace(const AutoencoderModel& model, const Matrix& input) {
    if (model.layers.empty()) throw ShapeMismatch("model has no layers");
    ForwardTrace trace;
    trace.activations.reserve(model.layers.size() + 1);
    trace.activations.push_back(input);
    for (const auto& layer : model.layers) trace.activations.push_back(conv1d_forward(trace.activations.back(), layer));
    return trace;
}

// Column windows [begin, end) covering n columns.
inline std::vector<std::pair<std::size_t, std::size_t>> column_windows(std::size_t n, std::size_t window,
                                                                       std::size_t stride) {
    if (n <= window) return {{0, n}};
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t start = 0;
    while (start + window < n) {
        out.emplace_back(start, start + window);
        start += stride;
    }
    out.emplace_back(n - window, n);
    return out;
}

// X-hat for an arbitrary-length input; long inputs are run per window and
// overlapping columns averaged.
inline Matrix autoencoder_forward(const AutoencoderModel& model, const Matrix& input) {
    if (input.rows() != model.channels())
        throw ShapeMismatch("input has " + std::to_string(input.rows()) + " channels, model expects " +
                            std::to_string(model.channels()));
    const auto& cfg = model.train_config;
    auto windows = column_windows(input.cols(), cfg.window_cols, cfg.window_stride);
    if (windows.size() == 1) return forward_trace(model, input).output();

    Matrix sum(model.layers.back().out_channels, input.cols());
    std::vector<double> count(input.cols(), 0.0);
    for (auto [b, e] : windows) {
        Matrix part = forward_trace(model, input.slice_cols(b, e)).output();
        for (std::size_t r = 0; r < sum.rows(); ++r)
            for (std::size_t c = b; c < e; ++c) sum(r, c) += part(r, c - b);
        for (std::size_t c = b; c < e; ++c) count[c] += 1.0;
    }
    for (std::size_t r = 0; r < sum.rows(); ++r)
        for (std::size_t c = 0; c < sum.cols(); ++c) sum(r, c) /= count[c];
    return sum;
}

inline double mean_squared_error(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("mse operands differ in shape");
    double acc = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t j = 0; j < ad.size(); ++j) {
        const double d = ad[j] - bd[j];
        acc += d * d;
    }
    return acc / static_cast<double>(ad.size());
}

struct ParameterGradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

namespace detail {

inline ParameterGradients zero_gradients(const AutoencoderModel& model) {
    ParameterGradients g;
    for (const auto& l : model.layers) {
        g.weights.emplace_back(l.weights.size(), 0.0);
        g.biases.emplace_back(l.biases.size(), 0.0);
    }
    return g;
}

// Adds d(sum of squared error)/d(params) for one window into `grads` and
// returns that window's sum of squared error.
inline double accumulate_window(const AutoencoderModel& model, const Matrix& input, const Matrix& target,
                                double loss_scale, ParameterGradients& grads) {
    ForwardTrace trace = forward_trace(model, input);
    const Matrix& out = trace.output();
    Matrix upstream(out.rows(), out.cols());
    double sse = 0.0;
    auto od = out.data();
    auto td = target.data();
    auto ud = upstream.data();
    for (std::size_t j = 0; j < od.size(); ++j) {
        const double d = od[j] - td[j];
        sse += d * d;
        ud[j] = 2.0 * d * loss_scale;
    }
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        ConvGradients g = conv1d_backward(model.layers[li], trace.activations[li], trace.activations[li + 1], upstream);
        for (std::size_t j = 0; j < g.weights.size(); ++j) grads.weights[li][j] += g.weights[j];
        for (std::size_t j = 0; j < g.biases.size(); ++j) grads.biases[li][j] += g.biases[j];
        upstream = std::move(g.input);
    }
    return sse;
}

}  // namespace detail

// Mean squared reconstruction error and its gradient, over all windows.
inline double loss_and_gradients(const AutoencoderModel& model, const Matrix& noisy, const Matrix& pure,
                                 ParameterGradients* grads) {
    const auto& cfg = model.train_config;
    auto windows = column_windows(noisy.cols(), cfg.window_cols, cfg.window_stride);
    std::size_t total = 0;
    for (auto [b, e] : windows) total += (e - b) * noisy.rows();
    const double scale = 1.0 / static_cast<double>(total);
    ParameterGradients local = detail::zero_gradients(model);
    double sse = 0.0;
    if (windows.size() == 1) {
        sse = detail::accumulate_window(model, noisy, pure, scale, local);
    } else {
        for (auto [b, e] : windows)
            sse += detail::accumulate_window(model, noisy.slice_cols(b, e), pure.slice_cols(b, e), scale, local);
    }
    if (grads) *grads = std::move(local);
    return sse * scale;
}

// Fits the model so that forward(noisy) approximates pure. Deterministic for
// a fixed model seed, config and data.
inline AutoencoderModel train(AutoencoderModel model, const Matrix& noisy, const Matrix& pure) {
    const TrainConfig& cfg = model.train_config;
    cfg.validate();
    if (!noisy.same_shape(pure)) throw ShapeMismatch("noisy and pure inputs differ in shape");
    if (noisy.rows() != model.channels()) throw ShapeMismatch("input channel count does not match the model");
    for (double v : noisy.data())
        if (!std::isfinite(v)) throw NonFiniteFeature(0);
    for (double v : pure.data())
        if (!std::isfinite(v)) throw NonFiniteFeature(0);

    // Sigmoid outputs cannot reach values outside [0, 1].
    Matrix target = pure;
    for (double& v : target.data()) v = std::clamp(v, 0.0, 1.0);

    ParameterGradients m1 = detail::zero_gradients(model);
    ParameterGradients m2 = detail::zero_gradients(model);
    model.loss_history.clear();
    model.early_stopped = false;

    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ParameterGradients g;
        const double loss = loss_and_gradients(model, noisy, target, &g);
        if (!std::isfinite(loss)) throw NonFiniteLoss(epoch);
        model.loss_history.push_back(loss);
        if (loss < best) {
            best = loss;
            since_best = 0;
        } else if (cfg.patience && ++since_best >= *cfg.patience) {
            model.early_stopped = true;
            break;
        }

        const double step = static_cast<double>(epoch + 1);
        const double bc1 = 1.0 - std::pow(cfg.beta1, step);
        const double bc2 = 1.0 - std::pow(cfg.beta2, step);
        auto update = [&](std::vector<double>& params, const std::vector<double>& grad, std::vector<double>& mom,
                          std::vector<double>& vel) {
            for (std::size_t j = 0; j < params.size(); ++j) {
                if (cfg.optimizer == Optimizer::sgd) {
                    params[j] -= cfg.learning_rate * grad[j];
                } else {
                    mom[j] = cfg.beta1 * mom[j] + (1.0 - cfg.beta1) * grad[j];
                    vel[j] = cfg.beta2 * vel[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
                    const double mhat = mom[j] / bc1;
                    const double vhat = vel[j] / bc2;
                    params[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
                }
            }
        };
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            update(model.layers[li].weights, g.weights[li], m1.weights[li], m2.weights[li]);
            update(model.layers[li].biases, g.biases[li], m1.biases[li], m2.biases[li]);
        }
    }
    model.final_loss = loss_and_gradients(model, noisy, target, nullptr);
    if (!std::isfinite(model.final_loss)) throw NonFiniteLoss(static_cast<int>(model.loss_history.size()));
    return model;
}

// Epochs after `settle` whose loss rose more than `tolerance` (relative) over
// the previous epoch. Full-batch Adam can oscillate near a minimum, so these
// are reported rather than treated as failures.
inline std::vector<std::size_t> loss_increase_flags(std::span<const double> history, std::size_t settle = 5,
                                                    double tolerance = 0.05) {
    std::vector<std::size_t> out;
    for (std::size_t e = settle + 1; e < history.size(); ++e)
        if (history[e] > history[e - 1] * (1.0 + tolerance)) out.push_back(e);
    return out;
}

// --- checkpoint --------------------------------------------------------------

// Versioned binary checkpoint: "DNLAE" magic, format version, seed, train
// config, architecture descriptor per layer, then raw little-endian
// parameters and the loss history.
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string encode_checkpoint(const AutoencoderModel& m) {
    BinaryWriter w;
    w.bytes("DNLAE");
    w.u32(kCheckpointVersion);
    w.u64(m.seed);
    const auto& c = m.train_config;
    w.i64(c.epochs);
    w.f64(c.learning_rate);
    w.u32(static_cast<std::uint32_t>(c.optimizer));
    w.i64(c.patience ? *c.patience : -1);
    w.f64(c.beta1);
    w.f64(c.beta2);
    w.f64(c.adam_epsilon);
    w.u64(c.window_cols);
    w.u64(c.window_stride);
    w.u32(static_cast<std::uint32_t>(m.layers.size()));
    for (const auto& l : m.layers) {
        w.u32(static_cast<std::uint32_t>(l.kind));
        w.u64(l.in_channels);
        w.u64(l.out_channels);
        w.u64(l.kernel_size);
        w.u64(l.stride);
        w.u32(static_cast<std::uint32_t>(l.activation));
    }
    for (const auto& l : m.layers) {
        w.f64s(l.weights);
        w.f64s(l.biases);
    }
    w.f64s(m.loss_history);
    w.f64(m.final_loss);
    w.u32(m.early_stopped ? 1 : 0);
    return w.buffer();
}

inline AutoencoderModel decode_checkpoint(std::string bytes) {
    BinaryReader r(std::move(bytes));
    if (r.bytes(5) != "DNLAE") throw IoError("not an autoencoder checkpoint");
    if (auto v = r.u32(); v != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(v));
    AutoencoderModel m;
    m.seed = r.u64();
    auto& c = m.train_config;
    c.epochs = static_cast<int>(r.i64());
    c.learning_rate = r.f64();
    c.optimizer = static_cast<Optimizer>(r.u32());
    auto patience = r.i64();
    c.patience = patience < 0 ? std::nullopt : std::optional<int>(static_cast<int>(patience));
    c.beta1 = r.f64();
    c.beta2 = r.f64();
    c.adam_epsilon = r.f64();
    c.window_cols = r.u64();
    c.window_stride = r.u64();
    const auto n_layers = r.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Conv1dLayer l;
        l.kind = static_cast<LayerKind>(r.u32());
        l.in_channels = r.u64();
        l.out_channels = r.u64();
        l.kernel_size = r.u64();
        l.stride = r.u64();
        l.activation = static_cast<Activation>(r.u32());
        m.layers.push_back(l);
    }
    for (auto& l : m.layers) {
        l.weights = r.f64s();
        l.biases = r.f64s();
        l.validate();
    }
    m.loss_history = r.f64s();
    m.final_loss = r.f64();
    m.early_stopped = r.u32() != 0;
    if (!r.at_end()) throw IoError("trailing bytes in checkpoint");
    return m;
}

inline std::string model_fingerprint(const AutoencoderModel& m) {
    Fnv1a h;
    h.update(encode_checkpoint(m));
    return h.hex();
}

// --- reconstruction ------------------------------------------------------------

struct DenoisedSeries {
    std::vector<double> prices;  // X' in price units
    std::string model_fingerprint;
    double max_channel_spread = 0.0;  // max over t of the channel std of X-hat, scaled units
};

// Collapses X-hat to one series by averaging the channels at each column,
// then maps it back to price units.
inline DenoisedSeries reconstruct(const AutoencoderModel& model, const Matrix& noisy, const ScalerParams& scaler) {
    if (!(scaler.max > scaler.min)) throw DegenerateScaler();
    Matrix out = autoencoder_forward(model, noisy);
    DenoisedSeries d;
    d.model_fingerprint = model_fingerprint(model);
    d.prices.resize(out.cols());
    const auto channels = static_cast<double>(out.rows());
    for (std::size_t t = 0; t < out.cols(); ++t) {
        double mean = 0.0;
        for (std::size_t r = 0; r < out.rows(); ++r) mean += out(r, t);
        mean /= channels;
        double var = 0.0;
        for (std::size_t r = 0; r < out.rows(); ++r) var += (out(r, t) - mean) * (out(r, t) - mean);
        d.max_channel_spread = std::max(d.max_channel_spread, std::sqrt(var / channels));
        d.prices[t] = scaler.unscale(mean);
    }
    return d;
}

}  // namespace denolab
