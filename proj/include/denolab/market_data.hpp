#pragma once

#include "denolab/error.hpp"
#include "denolab/util.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace denolab {

// Parses an ISO-8601 date or datetime ("2017-01-03", "2017-01-03T09:30:00.5Z",
// "2017-01-03 09:30+01:00") or a plain numeric epoch-seconds value into a
// sortable key in seconds. Returns nullopt when the text matches neither form.
inline std::optional<double> timestamp_key(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (auto epoch = parse_double(text); epoch && std::isfinite(*epoch)) return *epoch;

    auto digits = [&](std::size_t pos, std::size_t count) -> std::optional<int> {
        if (pos + count > text.size()) return std::nullopt;
        int v = 0;
        for (std::size_t i = pos; i < pos + count; ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };

    auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2);
    if (!y || !mo || !d || text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    double seconds = static_cast<double>(std::chrono::sys_days{ymd}.time_since_epoch().count()) * 86400.0;
    if (text.size() == 10) return seconds;

    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    auto hh = digits(11, 2), mi = digits(14, 2);
    if (!hh || !mi || text.size() < 16 || text[13] != ':' || *hh > 23 || *mi > 59) return std::nullopt;
    seconds += *hh * 3600.0 + *mi * 60.0;
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        auto ss = digits(pos + 1, 2);
        if (!ss || *ss > 60) return std::nullopt;
        seconds += *ss;
        pos += 3;
        if (pos < text.size() && text[pos] == '.') {
            std::size_t start = pos;
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
            if (pos == start + 1) return std::nullopt;
            auto frac = parse_double(std::string("0") + std::string(text.substr(start, pos - start)));
            if (!frac) return std::nullopt;
            seconds += *frac;
        }
    }
    if (pos == text.size()) return seconds;
    if (text[pos] == 'Z' && pos + 1 == text.size()) return seconds;
    if ((text[pos] == '+' || text[pos] == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
        auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
        if (!oh || !om) return std::nullopt;
        double offset = *oh * 3600.0 + *om * 60.0;
        return text[pos] == '+' ? seconds - offset : seconds + offset;
    }
    return std::nullopt;
}

// Timestamped close prices. Immutable once constructed; construction
// enforces positivity, strict time ordering and a minimum length of two.
class PriceSeries {
public:
    PriceSeries(std::vector<std::string> timestamps, std::vector<double> prices,
                std::string frequency_hint = {})
        : timestamps_(std::move(timestamps)),
          prices_(std::move(prices)),
          frequency_hint_(std::move(frequency_hint)) {
        if (timestamps_.size() != prices_.size())
            throw DataError("timestamps and prices differ in length");
        if (prices_.size() < 2) throw SeriesTooShort("a price series needs at least 2 points");
        std::optional<double> previous;
        for (std::size_t i = 0; i < prices_.size(); ++i) {
            if (!(prices_[i] > 0.0) || !std::isfinite(prices_[i])) throw NonPositivePrice(i);
            auto key = timestamp_key(timestamps_[i]);
            if (!key) throw ParseError(i, "unparseable timestamp '" + timestamps_[i] + "'");
            if (previous && !(*key > *previous)) throw NonMonotoneTimestamps(i);
            previous = key;
        }
    }

    // Positional timestamps "0", "1", ... for series that carry no calendar.
    static PriceSeries from_prices(std::vector<double> prices, std::string frequency_hint = {}) {
        std::vector<std::string> ts(prices.size());
        for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = std::to_string(i);
        return PriceSeries(std::move(ts), std::move(prices), std::move(frequency_hint));
    }

    std::size_t size() const noexcept { return prices_.size(); }
    std::span<const double> prices() const noexcept { return prices_; }
    const std::vector<std::string>& timestamps() const noexcept { return timestamps_; }
    const std::string& frequency_hint() const noexcept { return frequency_hint_; }
    double operator[](std::size_t i) const { return prices_[i]; }

    bool operator==(const PriceSeries&) const = default;

private:
    std::vector<std::string> timestamps_;
    std::vector<double> prices_;
    std::string frequency_hint_;
};

enum class ReturnKind { simple, log };

// values[t] is the return realized at original index t + 1.
struct ReturnSeries {
    std::vector<double> values;
    ReturnKind kind = ReturnKind::log;

    std::size_t size() const noexcept { return values.size(); }
};

inline ReturnSeries simple_returns(std::span<const double> prices) {
    ReturnSeries out{{}, ReturnKind::simple};
    if (prices.size() < 2) return out;
    out.values.resize(prices.size() - 1);
    for (std::size_t t = 0; t + 1 < prices.size(); ++t)
        out.values[t] = (prices[t + 1] - prices[t]) / prices[t];
    return out;
}

inline ReturnSeries simple_returns(const PriceSeries& series) { return simple_returns(series.prices()); }

inline ReturnSeries log_returns(std::span<const double> prices) {
    ReturnSeries out{{}, ReturnKind::log};
    if (prices.size() < 2) return out;
    out.values.resize(prices.size() - 1);
    for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
        if (!(prices[t] > 0.0) || !(prices[t + 1] > 0.0))
            throw NonPositivePrice(prices[t] > 0.0 ? t + 1 : t);
        out.values[t] = std::log(prices[t + 1]) - std::log(prices[t]);
    }
    return out;
}

inline ReturnSeries log_returns(const PriceSeries& series) { return log_returns(series.prices()); }

struct CsvSchema {
    std::string timestamp_column = "date";
    std::string price_column = "close";
};

struct IngestOptions {
    CsvSchema schema;
    bool skip_bad_rows = false;
    std::string frequency_hint;
};

struct IngestResult {
    PriceSeries series;
    std::size_t skipped_rows = 0;
};

inline IngestResult ingest_csv_stream(std::istream& in, const IngestOptions& options = {}) {
    std::string line;
    if (!std::getline(in, line)) throw SeriesTooShort("CSV has no header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

    auto header = split_csv_line(line);
    auto find_column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        throw SchemaMismatch(name);
    };
    const std::size_t ts_col = find_column(options.schema.timestamp_column);
    const std::size_t px_col = find_column(options.schema.price_column);

    std::vector<std::string> timestamps;
    std::vector<double> prices;
    std::size_t skipped = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        std::string problem;
        std::optional<double> price;
        std::string ts;
        if (fields.size() <= std::max(ts_col, px_col)) {
            problem = "missing fields";
        } else {
            ts = std::string(trim(fields[ts_col]));
            price = parse_double(fields[px_col]);
            if (!timestamp_key(ts))
                problem = "unparseable timestamp '" + ts + "'";
            else if (!price || std::isnan(*price))
                problem = "unparseable price '" + fields[px_col] + "'";
        }
        if (!problem.empty()) {
            if (!options.skip_bad_rows) throw ParseError(row, problem);
            ++skipped;
            ++row;
            continue;
        }
        if (!(*price > 0.0) || !std::isfinite(*price)) throw NonPositivePrice(timestamps.size());
        timestamps.push_back(std::move(ts));
        prices.push_back(*price);
        ++row;
    }
    if (prices.size() < 2) throw SeriesTooShort("fewer than 2 parseable rows");
    return {PriceSeries(std::move(timestamps), std::move(prices), options.frequency_hint), skipped};
}

inline IngestResult ingest_csv(const std::string& path, const IngestOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    return ingest_csv_stream(in, options);
}

inline void write_price_csv(std::ostream& out, const PriceSeries& series, const CsvSchema& schema = {}) {
    out << schema.timestamp_column << ',' << schema.price_column << '\n';
    for (std::size_t i = 0; i < series.size(); ++i)
        out << series.timestamps()[i] << ',' << format_double(series[i]) << '\n';
}

inline void write_price_csv(const std::string& path, const PriceSeries& series, const CsvSchema& schema = {}) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_price_csv(out, series, schema);
}

}  // namespace denolab
