#pragma once

// Little-endian byte packing helpers shared by the file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scc {

struct CorruptStreamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ByteWriter {
public:
    std::vector<uint8_t> bytes;

    void u8(uint8_t v) { bytes.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
    void raw(std::span<const uint8_t> data) { bytes.insert(bytes.end(), data.begin(), data.end()); }
    void magic(const char (&m)[5]) {
        bytes.insert(bytes.end(), reinterpret_cast<const uint8_t*>(m),
                     reinterpret_cast<const uint8_t*>(m) + 4);
    }
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::span<const uint8_t> raw(size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_magic(const char (&m)[5], const std::string& what) {
        need(4);
        if (std::memcmp(data_.data() + pos_, m, 4) != 0)
            throw CorruptStreamError(what + ": bad magic");
        pos_ += 4;
    }

private:
    void need(size_t n) const {
        if (pos_ + n > data_.size())
            throw CorruptStreamError("byte reader: truncated input (need " + std::to_string(n) +
                                     " at offset " + std::to_string(pos_) + ", have " +
                                     std::to_string(data_.size() - pos_) + ")");
    }
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace scc
