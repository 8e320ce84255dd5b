#pragma once

// Arithmetic coding of integer symbols under quantized cumulative frequency
// tables.
//
// Payload format (documented for interoperability):
//   * 16-bit frequency precision: every table sums to 65536.
//   * Encoder state: 32-bit range, initialized to 0xFFFFFFFF; 33-bit low,
//     initialized to 0. Coding step: r = range >> 16; low += cum * r;
//     range = freq * r. A carry out of bit 32 of low increments the already
//     emitted bytes (rippling through trailing 0xFF).
//   * Renormalization: while range < 2^24, emit byte (low >> 24),
//     low = (low << 8) mod 2^32, range <<= 8.
//   * Flush: emit the four bytes of low, most significant first. An empty
//     payload is therefore exactly the four bytes 00 00 00 00.
//   * Decoder: code = first four payload bytes (big-endian), then mirrors
//     the encoder: value = code / (range >> 16) selects the symbol whose
//     cumulative interval contains it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scc/bytes.hpp"

namespace scc {

inline constexpr uint32_t kFreqBits = 16;
inline constexpr uint32_t kFreqTotal = 1u << kFreqBits;
inline constexpr uint32_t kRcTop = 1u << 24;

// Cumulative frequency table over a contiguous symbol range starting at
// min_symbol. cum has n+1 entries: cum[0] = 0, cum[n] = 65536, strictly
// increasing (every symbol has frequency >= 1).
struct CdfTable {
    int min_symbol = 0;
    std::vector<uint32_t> cum;

    int size() const { return static_cast<int>(cum.size()) - 1; }
    uint32_t freq(int index) const { return cum[index + 1] - cum[index]; }
    int index_of(int symbol) const {
        const int idx = symbol - min_symbol;
        if (idx < 0 || idx >= size())
            throw std::out_of_range("cdf: symbol " + std::to_string(symbol) +
                                    " outside table range");
        return idx;
    }
};

// Largest-remainder quantization of a pmf to 16-bit totals with a frequency
// floor of 1. Ties in the remainder ranking break toward the lower symbol.
inline CdfTable build_cdf(std::span<const double> pmf, int min_symbol) {
    const int n = static_cast<int>(pmf.size());
    if (n < 1) throw std::invalid_argument("build_cdf: empty pmf");
    double total = 0.0;
    for (double p : pmf) {
        if (!(p == p)) throw std::invalid_argument("build_cdf: NaN in pmf");
        total += std::max(p, 0.0);
    }
    if (!(total > 0.0)) throw std::invalid_argument("build_cdf: pmf sums to zero");

    std::vector<uint32_t> freq(static_cast<size_t>(n), 0);
    std::vector<double> rem(static_cast<size_t>(n), 0.0);
    int64_t assigned = 0;
    for (int i = 0; i < n; ++i) {
        const double ideal = std::max(pmf[i], 0.0) / total * static_cast<double>(kFreqTotal);
        const double fl = std::floor(ideal);
        freq[i] = static_cast<uint32_t>(fl);
        rem[i] = ideal - fl;
        assigned += freq[i];
    }
    int64_t deficit = static_cast<int64_t>(kFreqTotal) - assigned;
    if (deficit > 0) {
        std::vector<int> idx(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            if (rem[a] != rem[b]) return rem[a] > rem[b];
            return a < b;
        });
        for (int64_t d = 0; d < deficit; ++d) ++freq[idx[static_cast<size_t>(d % n)]];
    }
    while (deficit < 0) {  // floating-point slack; shave the largest entries
        int big = 0;
        for (int i = 1; i < n; ++i)
            if (freq[i] > freq[big]) big = i;
        --freq[big];
        ++deficit;
    }
    // frequency floor: raise zeros to 1, taking from the largest entry
    for (int i = 0; i < n; ++i) {
        if (freq[i] == 0) {
            int big = 0;
            for (int j = 1; j < n; ++j)
                if (freq[j] > freq[big]) big = j;
            if (freq[big] < 2) throw std::invalid_argument("build_cdf: alphabet too large for floor");
            --freq[big];
            freq[i] = 1;
        }
    }
    CdfTable table;
    table.min_symbol = min_symbol;
    table.cum.resize(static_cast<size_t>(n) + 1);
    table.cum[0] = 0;
    for (int i = 0; i < n; ++i) table.cum[i + 1] = table.cum[i] + freq[i];
    return table;
}

class RangeEncoder {
public:
    void encode(uint32_t cum, uint32_t freq) {
        const uint32_t r = range_ >> kFreqBits;
        low_ += static_cast<uint64_t>(cum) * r;
        range_ = r * freq;
        if (low_ >> 32) {
            propagate_carry();
            low_ &= 0xFFFFFFFFull;
        }
        while (range_ < kRcTop) {
            bytes_.push_back(static_cast<uint8_t>(low_ >> 24));
            low_ = (low_ << 8) & 0xFFFFFFFFull;
            range_ <<= 8;
        }
    }

    void encode_symbol(const CdfTable& table, int symbol) {
        const int idx = table.index_of(symbol);
        encode(table.cum[static_cast<size_t>(idx)], table.freq(idx));
    }

    std::vector<uint8_t> finish() {
        for (int i = 0; i < 4; ++i) {
            bytes_.push_back(static_cast<uint8_t>(low_ >> 24));
            low_ = (low_ << 8) & 0xFFFFFFFFull;
        }
        return std::move(bytes_);
    }

private:
    void propagate_carry() {
        // The coded value is a fraction below 1, so some emitted byte is
        // not 0xFF and the ripple always terminates inside the buffer.
        size_t i = bytes_.size();
        for (;;) {
            if (i == 0) throw std::logic_error("range encoder: carry into empty buffer");
            --i;
            if (++bytes_[i] != 0) break;
        }
    }

    std::vector<uint8_t> bytes_;
    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const uint8_t> payload) : payload_(payload) {
        for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
    }

    // cumulative value of the current symbol; caller maps it via its table
    uint32_t decode_target() {
        r_ = range_ >> kFreqBits;
        const uint32_t v = static_cast<uint32_t>(code_ / r_);
        return std::min(v, kFreqTotal - 1);
    }

    void consume(uint32_t cum, uint32_t freq) {
        code_ -= cum * r_;
        range_ = r_ * freq;
        while (range_ < kRcTop) {
            code_ = (code_ << 8) | next_byte();
            range_ <<= 8;
        }
    }

    int decode_symbol(const CdfTable& table) {
        const uint32_t target = decode_target();
        const auto it = std::upper_bound(table.cum.begin(), table.cum.end(), target);
        const int idx = static_cast<int>(it - table.cum.begin()) - 1;
        consume(table.cum[static_cast<size_t>(idx)], table.freq(idx));
        return table.min_symbol + idx;
    }

    size_t consumed() const { return pos_; }

private:
    uint8_t next_byte() {
        if (pos_ >= payload_.size())
            throw CorruptStreamError("range decoder: payload exhausted at byte " +
                                     std::to_string(pos_));
        return payload_[pos_++];
    }

    std::span<const uint8_t> payload_;
    size_t pos_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t code_ = 0;
    uint32_t r_ = 0;
};

// Symbols paired one-to-one with their tables, already in decoder order.
inline std::vector<uint8_t> encode_symbols(std::span<const int> symbols,
                                           std::span<const CdfTable> tables) {
    if (symbols.size() != tables.size())
        throw std::invalid_argument("encode_symbols: symbol/table count mismatch");
    RangeEncoder enc;
    for (size_t i = 0; i < symbols.size(); ++i) enc.encode_symbol(tables[i], symbols[i]);
    return enc.finish();
}

inline std::vector<int> decode_symbols(std::span<const uint8_t> payload,
                                       std::span<const CdfTable> tables) {
    RangeDecoder dec(payload);
    std::vector<int> symbols(tables.size());
    for (size_t i = 0; i < tables.size(); ++i) symbols[i] = dec.decode_symbol(tables[i]);
    return symbols;
}

}  // namespace scc
