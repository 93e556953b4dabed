#pragma once

#include "denolab/binary_io.hpp"
#include "denolab/error.hpp"
#include "denolab/matrix.hpp"
#include "denolab/util.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace denolab {

enum class MovingAverageKind { sma, ema };

inline const char* to_string(MovingAverageKind k) { return k == MovingAverageKind::sma ? "SMA" : "EMA"; }

struct MovingAverageSpec {
    MovingAverageKind kind = MovingAverageKind::sma;
    int window = 2;

    bool operator==(const MovingAverageSpec&) const = default;
};

// Which moving averages make up the reconstruction target.
enum class PureStructure { sma_only, ema_only, combined };

inline const char* to_string(PureStructure s) {
    switch (s) {
        case PureStructure::sma_only: return "sma";
        case PureStructure::ema_only: return "ema";
        case PureStructure::combined: return "combined";
    }
    return "combined";
}

inline PureStructure parse_structure(std::string_view s) {
    if (s == "sma" || s == "sma_only") return PureStructure::sma_only;
    if (s == "ema" || s == "ema_only") return PureStructure::ema_only;
    if (s == "combined") return PureStructure::combined;
    throw ConfigError("unknown structure '" + std::string(s) + "' (expected sma, ema or combined)");
}

inline void check_window(int window, std::size_t n) {
    if (window < 2 || static_cast<std::size_t>(window) > n)
        throw WindowOutOfRange("window " + std::to_string(window) + " not in [2, " + std::to_string(n) + "]");
}

// Simple moving average. The first window-1 positions average whatever
// history is available, so the output has the same length as the input.
// Each mean is accumulated as deviations from the newest price, which makes
// constant stretches come out exactly constant.
inline std::vector<double> sma(std::span<const double> prices, int window) {
    check_window(window, prices.size());
    const auto w = static_cast<std::size_t>(window);
    std::vector<double> out(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
        const double anchor = prices[t];
        double acc = 0.0;
        for (std::size_t j = lo; j <= t; ++j) acc += prices[j] - anchor;
        out[t] = anchor + acc / static_cast<double>(t - lo + 1);
    }
    return out;
}

// Exponential moving average with alpha = 2 / (window + 1), seeded with the
// first price.
inline std::vector<double> ema(std::span<const double> prices, int window) {
    check_window(window, prices.size());
    const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
    std::vector<double> out(prices.size());
    out[0] = prices[0];
    for (std::size_t t = 1; t < prices.size(); ++t) out[t] = out[t - 1] + alpha * (prices[t] - out[t - 1]);
    return out;
}

// Same recursion without the window bound, for indicator lines that are
// not price series (MACD signal line).
inline std::vector<double> ema_unchecked(std::span<const double> values, int window) {
    std::vector<double> out(values.size());
    if (values.empty()) return out;
    const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
    out[0] = values[0];
    for (std::size_t t = 1; t < values.size(); ++t) out[t] = out[t - 1] + alpha * (values[t] - out[t - 1]);
    return out;
}

// Min-max normalization fitted on prices[fit_begin, fit_end).
struct ScalerParams {
    double min = 0.0;
    double max = 1.0;
    std::size_t fit_begin = 0;
    std::size_t fit_end = 0;

    double scale(double x) const { return (x - min) / (max - min); }
    double unscale(double y) const { return min + y * (max - min); }

    bool operator==(const ScalerParams&) const = default;
};

inline ScalerParams fit_scaler(std::span<const double> prices, std::size_t fit_begin, std::size_t fit_end) {
    if (fit_begin >= fit_end || fit_end > prices.size())
        throw UsageError("scaler fit range [" + std::to_string(fit_begin) + ", " + std::to_string(fit_end) +
                         ") is empty or out of bounds");
    auto [lo, hi] = std::minmax_element(prices.begin() + static_cast<std::ptrdiff_t>(fit_begin),
                                        prices.begin() + static_cast<std::ptrdiff_t>(fit_end));
    if (!(*hi > *lo)) throw DegenerateScaler();
    return {*lo, *hi, fit_begin, fit_end};
}

inline ScalerParams fit_scaler(std::span<const double> prices) { return fit_scaler(prices, 0, prices.size()); }

inline std::vector<MovingAverageSpec> moving_average_specs(int l2, int lk, PureStructure structure) {
    std::vector<MovingAverageSpec> specs;
    if (structure != PureStructure::ema_only)
        for (int l = l2; l <= lk; ++l) specs.push_back({MovingAverageKind::sma, l});
    if (structure != PureStructure::sma_only)
        for (int l = l2; l <= lk; ++l) specs.push_back({MovingAverageKind::ema, l});
    return specs;
}

// Pure input D: one scaled moving average per row, SMA rows (ascending
// window) followed by EMA rows (ascending window).
inline Matrix build_pure_input(std::span<const double> prices, int l2, int lk, const ScalerParams& scaler,
                               PureStructure structure = PureStructure::combined) {
    const std::size_t n = prices.size();
    if (l2 < 2 || lk < l2 || static_cast<std::size_t>(lk) > n)
        throw WindowOutOfRange("need 2 <= l2 <= lk <= n, got l2=" + std::to_string(l2) +
                               " lk=" + std::to_string(lk) + " n=" + std::to_string(n));
    if (!(scaler.max > scaler.min)) throw DegenerateScaler();
    auto specs = moving_average_specs(l2, lk, structure);
    Matrix d(specs.size(), n);
    for (std::size_t r = 0; r < specs.size(); ++r) {
        auto values = specs[r].kind == MovingAverageKind::sma ? sma(prices, specs[r].window)
                                                              : ema(prices, specs[r].window);
        for (std::size_t t = 0; t < n; ++t) d(r, t) = scaler.scale(values[t]);
    }
    return d;
}

// Noisy input: `rows` identical copies of the scaled price sequence.
inline Matrix build_noisy_input(std::span<const double> prices, std::size_t rows, const ScalerParams& scaler) {
    if (rows < 1) throw ShapeMismatch("noisy input needs at least one row");
    if (!(scaler.max > scaler.min)) throw DegenerateScaler();
    Matrix x(rows, prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const double v = scaler.scale(prices[t]);
        for (std::size_t r = 0; r < rows; ++r) x(r, t) = v;
    }
    return x;
}

struct FeatureMatrices {
    Matrix pure;
    Matrix noisy;
    std::vector<MovingAverageSpec> specs;
    ScalerParams scaler;

    bool operator==(const FeatureMatrices&) const = default;
};

inline FeatureMatrices build_feature_matrices(std::span<const double> prices, int l2, int lk,
                                              const ScalerParams& scaler,
                                              PureStructure structure = PureStructure::combined) {
    FeatureMatrices f;
    f.pure = build_pure_input(prices, l2, lk, scaler, structure);
    f.noisy = build_noisy_input(prices, f.pure.rows(), scaler);
    f.specs = moving_average_specs(l2, lk, structure);
    f.scaler = scaler;
    return f;
}

// Flat binary layout: "DNLFEAT" magic, version, L, n, the spec list, the
// scaler, then the pure and noisy matrices as row-major little-endian doubles.
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

inline std::string encode_features(const FeatureMatrices& f) {
    BinaryWriter w;
    w.bytes("DNLFEAT");
    w.u32(kFeatureFormatVersion);
    w.u64(f.pure.rows());
    w.u64(f.pure.cols());
    for (const auto& s : f.specs) {
        w.u32(static_cast<std::uint32_t>(s.kind));
        w.u32(static_cast<std::uint32_t>(s.window));
    }
    w.f64(f.scaler.min);
    w.f64(f.scaler.max);
    w.u64(f.scaler.fit_begin);
    w.u64(f.scaler.fit_end);
    for (double v : f.pure.data()) w.f64(v);
    for (double v : f.noisy.data()) w.f64(v);
    return w.buffer();
}

inline FeatureMatrices decode_features(std::string bytes) {
    BinaryReader r(std::move(bytes));
    if (r.bytes(7) != "DNLFEAT") throw IoError("not a feature matrix file");
    if (r.u32() != kFeatureFormatVersion) throw IoError("unsupported feature format version");
    FeatureMatrices f;
    auto rows = r.u64();
    auto cols = r.u64();
    if (cols == 0 || rows > r.remaining() / 8 || cols > r.remaining() / 16 / std::max<std::uint64_t>(rows, 1))
        throw IoError("feature matrix header does not match the payload size");
    for (std::uint64_t i = 0; i < rows; ++i) {
        MovingAverageSpec s;
        s.kind = static_cast<MovingAverageKind>(r.u32());
        s.window = static_cast<int>(r.u32());
        f.specs.push_back(s);
    }
    f.scaler.min = r.f64();
    f.scaler.max = r.f64();
    f.scaler.fit_begin = r.u64();
    f.scaler.fit_end = r.u64();
    f.pure = Matrix(rows, cols);
    f.noisy = Matrix(rows, cols);
    for (double& v : f.pure.data()) v = r.f64();
    for (double& v : f.noisy.data()) v = r.f64();
    return f;
}

inline void write_features_csv(std::ostream& out, const FeatureMatrices& f) {
    out << "matrix,row,spec";
    for (std::size_t t = 0; t < f.pure.cols(); ++t) out << ",t" << t;
    out << '\n';
    auto emit = [&](const char* name, const Matrix& m) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            out << name << ',' << r << ',' << to_string(f.specs[r].kind) << f.specs[r].window;
            for (double v : m.row(r)) out << ',' << format_double(v);
            out << '\n';
        }
    };
    emit("pure", f.pure);
    emit("noisy", f.noisy);
}

}  // namespace denolab
