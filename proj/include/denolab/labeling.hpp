#pragma once

#include "denolab/error.hpp"
#include "denolab/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace denolab {

enum class LabelSource { original, denoised };

inline const char* to_string(LabelSource s) { return s == LabelSource::original ? "original" : "denoised"; }

// Per-step direction classes: +1 up, -1 down, 0 no signal.
struct LabelSeries {
    std::vector<int> labels;  // aligned with the ReturnSeries it was built from
    double tau = 0.0;
    LabelSource source = LabelSource::original;

    std::size_t size() const noexcept { return labels.size(); }
};

struct ClassCounts {
    double tau = 0.0;
    std::size_t count_up = 0;
    std::size_t count_down = 0;
    std::size_t count_none = 0;

    std::size_t total() const noexcept { return count_up + count_down + count_none; }
    bool operator==(const ClassCounts&) const = default;
};

// The boundary |r| == tau is "no signal".
inline int label_return(double r, double tau) {
    if (r > tau) return 1;
    if (r < -tau) return -1;
    return 0;
}

inline LabelSeries naive_label(std::span<const double> log_return_values, double tau,
                               LabelSource source = LabelSource::original) {
    if (!(tau >= 0.0)) throw NegativeTau(tau);
    LabelSeries out{std::vector<int>(log_return_values.size()), tau, source};
    for (std::size_t t = 0; t < log_return_values.size(); ++t)
        out.labels[t] = label_return(log_return_values[t], tau);
    return out;
}

inline LabelSeries naive_label(const ReturnSeries& returns, double tau,
                               LabelSource source = LabelSource::original) {
    if (returns.kind != ReturnKind::log) throw UsageError("naive labels are defined on log returns");
    return naive_label(std::span<const double>(returns.values), tau, source);
}

inline ClassCounts count_classes(const LabelSeries& labels) {
    ClassCounts c{labels.tau};
    for (int y : labels.labels) {
        if (y > 0)
            ++c.count_up;
        else if (y < 0)
            ++c.count_down;
        else
            ++c.count_none;
    }
    return c;
}

inline void validate_tau_grid(std::span<const double> taus) {
    if (taus.empty()) throw ConfigError("tau grid is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 0.0)) throw NegativeTau(taus[i]);
        if (i > 0 && !(taus[i] > taus[i - 1])) throw ConfigError("tau grid must be strictly increasing");
    }
}

inline std::vector<ClassCounts> class_counts_sweep(const ReturnSeries& returns, std::span<const double> taus) {
    validate_tau_grid(taus);
    std::vector<ClassCounts> out;
    out.reserve(taus.size());
    for (double tau : taus) out.push_back(count_classes(naive_label(returns, tau)));
    return out;
}

// Linearly interpolated quantile (q in [0, 1]) of |values|.
inline double abs_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw EmptyInput("quantile of an empty sequence");
    std::vector<double> a(values.size());
    std::transform(values.begin(), values.end(), a.begin(), [](double v) { return std::abs(v); });
    std::sort(a.begin(), a.end());
    double pos = q * static_cast<double>(a.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, a.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return a[lo] + frac * (a[hi] - a[lo]);
}

// Default sweep: `points` values spaced linearly from 0 to the `quantile`
// of |r|. Collapses to {0} when that quantile is zero.
inline std::vector<double> default_tau_grid(const ReturnSeries& returns, std::size_t points = 21,
                                            double quantile = 0.9) {
    if (points == 0) throw ConfigError("tau grid needs at least one point");
    double top = abs_quantile(returns.values, quantile);
    if (points == 1 || !(top > 0.0)) return {0.0};
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = top * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

// CSV columns: timestamp, return, label, tau, source. Row t carries the
// timestamp of price index t + 1, where the return is realized.
inline void write_labels_csv(std::ostream& out, const PriceSeries& series, const ReturnSeries& returns,
                             const LabelSeries& labels) {
    if (returns.size() != labels.size() || returns.size() + 1 != series.size())
        throw ShapeMismatch("labels, returns and prices are not aligned");
    out << "timestamp,return,label,tau,source\n";
    for (std::size_t t = 0; t < labels.size(); ++t) {
        out << series.timestamps()[t + 1] << ',' << format_double(returns.values[t]) << ',' << labels.labels[t]
            << ',' << format_double(labels.tau) << ',' << to_string(labels.source) << '\n';
    }
}

inline void write_class_counts_csv(std::ostream& out, std::span<const ClassCounts> counts) {
    out << "tau,count_up,count_down,count_none\n";
    for (const auto& c : counts)
        out << format_double(c.tau) << ',' << c.count_up << ',' << c.count_down << ',' << c.count_none << '\n';
}

}  // namespace denolab
