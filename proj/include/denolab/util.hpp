#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace denolab {

// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double value) {
    char buf[64];
    auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

inline std::string format_fixed(double value, int digits) {
    char buf[128];
    auto result = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, digits);
    return std::string(buf, result.ptr);
}

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

inline std::optional<long long> parse_int(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

// Splits one CSV record on commas. Double-quoted fields may contain commas;
// a doubled quote inside a quoted field is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

// 64-bit FNV-1a, stable across runs and platforms of equal endianness.
class Fnv1a {
public:
    void update(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ ^= bytes[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    void update(double v) { update(&v, sizeof v); }
    void update(std::int64_t v) { update(&v, sizeof v); }
    void update(std::span<const double> v) { update(v.data(), v.size_bytes()); }

    std::uint64_t digest() const { return state_; }
    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        auto s = state_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = digits[s & 0xF];
            s >>= 4;
        }
        return out;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// Sum of absolute first differences.
inline double total_variation(std::span<const double> s) {
    double tv = 0.0;
    for (std::size_t t = 1; t < s.size(); ++t) tv += std::abs(s[t] - s[t - 1]);
    return tv;
}

}  // namespace denolab
