#pragma once

#include "denolab/error.hpp"
#include "denolab/features.hpp"
#include "denolab/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace denolab {

enum class IndicatorKind { ma_cross, macd, bb };

inline const char* to_string(IndicatorKind k) {
    switch (k) {
        case IndicatorKind::ma_cross: return "ma_cross";
        case IndicatorKind::macd: return "macd";
        case IndicatorKind::bb: return "bb";
    }
    return "ma_cross";
}

inline IndicatorKind parse_indicator(std::string_view s) {
    if (s == "ma_cross") return IndicatorKind::ma_cross;
    if (s == "macd") return IndicatorKind::macd;
    if (s == "bb") return IndicatorKind::bb;
    throw ConfigError("unknown indicator '" + std::string(s) + "'");
}

struct BuySignal {
    std::size_t index = 0;
    std::string timestamp;
    double price = 0.0;
    IndicatorKind indicator = IndicatorKind::ma_cross;

    bool operator==(const BuySignal&) const = default;
};

struct IndicatorParams {
    int ma_short = 10;
    int ma_long = 50;
    int macd_fast = 12;
    int macd_slow = 26;
    int macd_signal = 9;
    int bb_window = 20;
    double bb_k = 2.0;

    bool operator==(const IndicatorParams&) const = default;
};

namespace detail {

// Mean of prices[t-w+1 .. t], accumulated as deviations from prices[t].
inline double window_mean(std::span<const double> p, std::size_t t, std::size_t w) {
    const double anchor = p[t];
    double acc = 0.0;
    for (std::size_t j = t + 1 - w; j <= t; ++j) acc += p[j] - anchor;
    return anchor + acc / static_cast<double>(w);
}

// Full-window rolling mean; entries before index w-1 are left at zero and
// must not be read.
inline std::vector<double> rolling_mean(std::span<const double> p, std::size_t w) {
    std::vector<double> out(p.size(), 0.0);
    for (std::size_t t = w - 1; t < p.size(); ++t) out[t] = window_mean(p, t, w);
    return out;
}

// Indices t >= first where a[t-1] <= b[t-1] and a[t] > b[t].
inline std::vector<std::size_t> upward_crosses(std::span<const double> a, std::span<const double> b,
                                               std::size_t first) {
    std::vector<std::size_t> out;
    for (std::size_t t = std::max<std::size_t>(first, 1); t < a.size(); ++t)
        if (a[t - 1] <= b[t - 1] && a[t] > b[t]) out.push_back(t);
    return out;
}

inline std::vector<BuySignal> to_signals(std::span<const std::size_t> idx, std::span<const double> prices,
                                         IndicatorKind kind) {
    std::vector<BuySignal> out;
    out.reserve(idx.size());
    for (auto t : idx) out.push_back({t, {}, prices[t], kind});
    return out;
}

}  // namespace detail

// Buy when the short SMA crosses strictly above the long SMA. Only indices
// where both averages had a full window at t-1 are considered.
inline std::vector<BuySignal> ma_crossover_buys(std::span<const double> prices, int short_window, int long_window) {
    if (short_window >= long_window) throw WindowOrder(short_window, long_window);
    if (short_window < 1 || static_cast<std::size_t>(long_window) > prices.size())
        throw WindowOutOfRange("MA crossover windows must satisfy 1 <= short < long <= n");
    auto s = detail::rolling_mean(prices, static_cast<std::size_t>(short_window));
    auto l = detail::rolling_mean(prices, static_cast<std::size_t>(long_window));
    auto idx = detail::upward_crosses(s, l, static_cast<std::size_t>(long_window));
    return detail::to_signals(idx, prices, IndicatorKind::ma_cross);
}

struct MacdLines {
    std::vector<double> macd;
    std::vector<double> signal;
};

inline MacdLines macd_lines(std::span<const double> prices, int fast = 12, int slow = 26, int signal = 9) {
    auto f = ema(prices, fast);
    auto s = ema(prices, slow);
    MacdLines out;
    out.macd.resize(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) out.macd[t] = f[t] - s[t];
    out.signal = ema_unchecked(out.macd, signal);
    return out;
}

// Buy when the MACD line crosses strictly above its signal line, once the
// slow EMA and then the signal EMA have each seen a full window.
inline std::vector<BuySignal> macd_buys(std::span<const double> prices, const IndicatorParams& params = {}) {
    if (params.macd_fast < 2 || params.macd_fast >= params.macd_slow || params.macd_signal < 2)
        throw WindowOutOfRange("MACD needs 2 <= fast < slow and signal >= 2");
    const auto min_length = static_cast<std::size_t>(params.macd_slow + params.macd_signal);
    if (prices.size() <= min_length)
        throw SeriesTooShort("MACD needs more than " + std::to_string(min_length) + " prices");
    // First index at which the signal line has a full window behind a full slow EMA.
    const std::size_t first_full = min_length - 2;
    auto lines = macd_lines(prices, params.macd_fast, params.macd_slow, params.macd_signal);
    auto idx = detail::upward_crosses(lines.macd, lines.signal, first_full + 1);
    return detail::to_signals(idx, prices, IndicatorKind::macd);
}

struct BollingerBands {
    std::vector<double> middle;
    std::vector<double> upper;
    std::vector<double> lower;
};

// Rolling SMA middle band +- k population standard deviations. Entries
// before index window-1 are zero.
inline BollingerBands bollinger_bands(std::span<const double> prices, int window = 20, double k = 2.0) {
    const auto w = static_cast<std::size_t>(window);
    BollingerBands b;
    b.middle = detail::rolling_mean(prices, w);
    b.upper.assign(prices.size(), 0.0);
    b.lower.assign(prices.size(), 0.0);
    for (std::size_t t = w - 1; t < prices.size(); ++t) {
        double var = 0.0;
        for (std::size_t j = t + 1 - w; j <= t; ++j) var += (prices[j] - b.middle[t]) * (prices[j] - b.middle[t]);
        const double sd = std::sqrt(var / static_cast<double>(w));
        b.upper[t] = b.middle[t] + k * sd;
        b.lower[t] = b.middle[t] - k * sd;
    }
    return b;
}

// Buy when the price crosses strictly above the lower band from at or below it.
inline std::vector<BuySignal> bollinger_buys(std::span<const double> prices, int window = 20, double k = 2.0) {
    if (window < 2) throw WindowOutOfRange("Bollinger window must be >= 2");
    if (prices.size() <= static_cast<std::size_t>(window))
        throw SeriesTooShort("Bollinger bands need more than " + std::to_string(window) + " prices");
    auto bands = bollinger_bands(prices, window, k);
    auto idx = detail::upward_crosses(prices, bands.lower, static_cast<std::size_t>(window));
    return detail::to_signals(idx, prices, IndicatorKind::bb);
}

inline std::vector<BuySignal> indicator_buys(IndicatorKind kind, std::span<const double> prices,
                                             const IndicatorParams& params = {}) {
    switch (kind) {
        case IndicatorKind::ma_cross: return ma_crossover_buys(prices, params.ma_short, params.ma_long);
        case IndicatorKind::macd: return macd_buys(prices, params);
        case IndicatorKind::bb: return bollinger_buys(prices, params.bb_window, params.bb_k);
    }
    return {};
}

// Sets timestamps and, when given, the execution price for each signal (a
// signal found on the denoised series is bought at the market close).
inline void annotate_signals(std::vector<BuySignal>& signals, const std::vector<std::string>& timestamps,
                             std::span<const double> execution_prices = {}) {
    for (auto& s : signals) {
        if (s.index < timestamps.size()) s.timestamp = timestamps[s.index];
        if (s.index < execution_prices.size()) s.price = execution_prices[s.index];
    }
}

enum class PriceComparison { lower, equal, higher };

inline const char* to_string(PriceComparison c) {
    switch (c) {
        case PriceComparison::lower: return "lower";
        case PriceComparison::equal: return "equal";
        case PriceComparison::higher: return "higher";
    }
    return "equal";
}

struct SignalPair {
    BuySignal original;
    BuySignal denoised;
    double price_delta = 0.0;  // denoised - original
    PriceComparison comparison = PriceComparison::equal;

    bool operator==(const SignalPair&) const = default;
};

struct SignalDiff {
    std::vector<SignalPair> pairs;  // ordered by original index
    std::vector<BuySignal> unmatched_original;
    std::vector<BuySignal> unmatched_denoised;

    std::size_t count_lower() const {
        return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const SignalPair& p) {
            return p.comparison == PriceComparison::lower;
        }));
    }

    bool operator==(const SignalDiff&) const = default;
};

// Greedy nearest-index matching: candidate pairs within +-match_window
// positions are accepted in order of increasing gap (ties by original
// index, then denoised index), skipping signals already used.
inline SignalDiff diff_signals(std::span<const BuySignal> original, std::span<const BuySignal> denoised,
                               std::size_t match_window = 5) {
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> candidates;  // gap, o, d
    for (std::size_t o = 0; o < original.size(); ++o)
        for (std::size_t d = 0; d < denoised.size(); ++d) {
            const std::size_t a = original[o].index, b = denoised[d].index;
            const std::size_t gap = a > b ? a - b : b - a;
            if (gap <= match_window) candidates.emplace_back(gap, o, d);
        }
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::ptrdiff_t> partner(original.size(), -1);
    std::vector<bool> used(denoised.size(), false);
    for (auto [gap, o, d] : candidates) {
        if (partner[o] >= 0 || used[d]) continue;
        partner[o] = static_cast<std::ptrdiff_t>(d);
        used[d] = true;
    }

    SignalDiff diff;
    for (std::size_t o = 0; o < original.size(); ++o) {
        if (partner[o] < 0) {
            diff.unmatched_original.push_back(original[o]);
            continue;
        }
        SignalPair p{original[o], denoised[static_cast<std::size_t>(partner[o])]};
        p.price_delta = p.denoised.price - p.original.price;
        const double tol = 1e-9 * std::max(std::abs(p.original.price), std::abs(p.denoised.price));
        p.comparison = std::abs(p.price_delta) <= tol ? PriceComparison::equal
                       : p.price_delta < 0.0      ? PriceComparison::lower
                                                  : PriceComparison::higher;
        diff.pairs.push_back(p);
    }
    for (std::size_t d = 0; d < denoised.size(); ++d)
        if (!used[d]) diff.unmatched_denoised.push_back(denoised[d]);
    return diff;
}

inline void write_signals_csv(std::ostream& out, std::span<const BuySignal> signals, bool header = true) {
    if (header) out << "indicator,timestamp,index,price\n";
    for (const auto& s : signals)
        out << to_string(s.indicator) << ',' << s.timestamp << ',' << s.index << ',' << format_double(s.price)
            << '\n';
}

// Reads the layout written by write_signals_csv.
inline std::vector<BuySignal> read_signals_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    const auto header = split_csv_line(trim(line));
    const std::vector<std::string> expected{"indicator", "timestamp", "index", "price"};
    if (header != expected) throw SchemaMismatch("indicator,timestamp,index,price");
    std::vector<BuySignal> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(trim(line));
        if (f.size() != 4) throw ParseError(row, "expected 4 fields");
        auto index = parse_int(f[2]);
        auto price = parse_double(f[3]);
        if (!index || *index < 0 || !price) throw ParseError(row, "bad index or price");
        BuySignal s;
        try {
            s.indicator = parse_indicator(f[0]);
        } catch (const UsageError&) {
            throw ParseError(row, "unknown indicator '" + f[0] + "'");
        }
        s.timestamp = f[1];
        s.index = static_cast<std::size_t>(*index);
        s.price = *price;
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_diff_csv(std::ostream& out, const SignalDiff& diff, std::string_view indicator, bool header = true) {
    if (header)
        out << "indicator,original_timestamp,original_index,original_price,denoised_timestamp,denoised_index,"
               "denoised_price,price_delta,comparison\n";
    auto side = [&](const BuySignal* s) {
        if (!s) return std::string(",,");
        return s->timestamp + "," + std::to_string(s->index) + "," + format_double(s->price);
    };
    for (const auto& p : diff.pairs)
        out << indicator << ',' << side(&p.original) << ',' << side(&p.denoised) << ','
            << format_double(p.price_delta) << ',' << to_string(p.comparison) << '\n';
    for (const auto& s : diff.unmatched_original)
        out << indicator << ',' << side(&s) << ',' << side(nullptr) << ",,unmatched_original\n";
    for (const auto& s : diff.unmatched_denoised)
        out << indicator << ',' << side(nullptr) << ',' << side(&s) << ",,unmatched_denoised\n";
}

// Side-by-side table: original signals on the left, their matched denoised
// signal on the right, rows in time order.
inline void write_diff_markdown(std::ostream& out, const SignalDiff& diff, std::string_view title,
                                int price_digits = 2) {
    struct Row {
        std::size_t key;
        const BuySignal* left;
        const BuySignal* right;
        const SignalPair* pair;
    };
    std::vector<Row> rows;
    for (const auto& p : diff.pairs) rows.push_back({p.original.index, &p.original, &p.denoised, &p});
    for (const auto& s : diff.unmatched_original) rows.push_back({s.index, &s, nullptr, nullptr});
    for (const auto& s : diff.unmatched_denoised) rows.push_back({s.index, nullptr, &s, nullptr});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.key < b.key; });

    auto date = [](const BuySignal* s) {
        if (!s) return std::string();
        return s->timestamp.empty() ? "#" + std::to_string(s->index) : s->timestamp;
    };
    out << "### " << title << "\n\n";
    out << "| Date | Buy with Original Signals | Date | Buy with Denoised Signals |\n";
    out << "|---|---|---|---|\n";
    for (const auto& r : rows) {
        std::string right_price;
        if (r.right) {
            right_price = format_fixed(r.right->price, price_digits);
            if (r.pair && r.pair->comparison != PriceComparison::higher)
                right_price += std::string(" (") + to_string(r.pair->comparison) + ")";
        }
        out << "| " << date(r.left) << " | " << (r.left ? format_fixed(r.left->price, price_digits) : "") << " | "
            << date(r.right) << " | " << right_price << " |\n";
    }
    out << "\nMatched " << diff.pairs.size() << ", denoised lower in " << diff.count_lower() << ", unmatched original "
        << diff.unmatched_original.size() << ", unmatched denoised " << diff.unmatched_denoised.size() << ".\n";
}

}  // namespace denolab
