#pragma once

#include "denolab/error.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace denolab {

// Little-endian primitive encoding shared by the checkpoint and export formats.
class BinaryWriter {
public:
    void bytes(std::string_view raw) { buf_.append(raw); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(std::span<const double> v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }

    const std::string& buffer() const { return buf_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw IoError("write failed: " + path);
    }

private:
    std::string buf_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string data) : data_(std::move(data)) {}

    static BinaryReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FileNotFound(path);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return BinaryReader(std::move(data));
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> f64s() {
        auto n = u64();
        if (n > (data_.size() - pos_) / 8) throw IoError("truncated array");
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::string str() { return bytes(u32()); }

    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw IoError("unexpected end of binary data");
    }

    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace denolab
