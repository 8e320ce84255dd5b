#pragma once

// Bijection between latent coordinates (row, column, channel segment) and
// autoregressive sequence slots, for both coding orders. Patches are fixed
// at 1x1 spatially; a sequence element is the p_c = C/N_cs channel values
// of one segment at one position.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scc/tensor.hpp"

namespace scc {

enum class CodingOrder : uint32_t {
    ChannelFirst = 0,  // cfo: all segments of a position, then the next position
    SpatialFirst = 1,  // sfo: all positions of a segment, then the next segment
};

inline const char* coding_order_name(CodingOrder o) {
    return o == CodingOrder::ChannelFirst ? "cfo" : "sfo";
}

struct SeqElement {
    int i = 0;  // row
    int j = 0;  // column
    int k = 0;  // channel segment

    bool operator==(const SeqElement&) const = default;
};

struct SequenceLayout {
    int H = 0, W = 0, C = 0;
    int n_cs = 1;
    CodingOrder order = CodingOrder::ChannelFirst;

    SequenceLayout() = default;
    SequenceLayout(int h, int w, int c, int segments, CodingOrder ord)
        : H(h), W(w), C(c), n_cs(segments), order(ord) {
        if (H < 1 || W < 1 || C < 1 || n_cs < 1)
            throw std::invalid_argument("layout: all dimensions must be >= 1");
        if (C % n_cs != 0)
            throw std::invalid_argument("layout: channel segments " + std::to_string(n_cs) +
                                        " must divide channels " + std::to_string(C));
    }

    int pc() const { return C / n_cs; }
    int64_t seq_len() const { return static_cast<int64_t>(H) * W * n_cs; }  // excludes start token

    void check_bounds(SeqElement e) const {
        if (e.i < 0 || e.i >= H || e.j < 0 || e.j >= W || e.k < 0 || e.k >= n_cs)
            throw std::out_of_range("layout: element (" + std::to_string(e.i) + "," +
                                    std::to_string(e.j) + "," + std::to_string(e.k) +
                                    ") outside " + std::to_string(H) + "x" + std::to_string(W) +
                                    "x" + std::to_string(n_cs));
    }

    int64_t slot_of(SeqElement e) const {
        check_bounds(e);
        if (order == CodingOrder::ChannelFirst)
            return (static_cast<int64_t>(e.i) * W + e.j) * n_cs + e.k;
        return static_cast<int64_t>(e.k) * H * W + static_cast<int64_t>(e.i) * W + e.j;
    }

    SeqElement coords_of(int64_t slot) const {
        if (slot < 0 || slot >= seq_len())
            throw std::out_of_range("layout: slot " + std::to_string(slot) + " outside [0," +
                                    std::to_string(seq_len()) + ")");
        SeqElement e;
        if (order == CodingOrder::ChannelFirst) {
            e.k = static_cast<int>(slot % n_cs);
            const int64_t pos = slot / n_cs;
            e.i = static_cast<int>(pos / W);
            e.j = static_cast<int>(pos % W);
        } else {
            e.k = static_cast<int>(slot / (static_cast<int64_t>(H) * W));
            const int64_t pos = slot % (static_cast<int64_t>(H) * W);
            e.i = static_cast<int>(pos / W);
            e.j = static_cast<int>(pos % W);
        }
        return e;
    }
};

// Copies the p_c channel values of element e out of a dense H x W x C latent.
inline void copy_segment(const SequenceLayout& lay, const Tensor& latent, SeqElement e,
                         std::span<float> dst) {
    const int pc = lay.pc();
    const int64_t base = (static_cast<int64_t>(e.i) * lay.W + e.j) * lay.C +
                         static_cast<int64_t>(e.k) * pc;
    for (int c = 0; c < pc; ++c) dst[c] = latent.data[base + c];
}

// latent [H x W x C] -> sequence [(S+1) x p_c]; row 0 is the zero start token,
// row slot+1 holds the channel values of the element at that slot.
inline Tensor to_sequence(const SequenceLayout& lay, const Tensor& latent) {
    if (latent.rank() != 3 || latent.dim(0) != lay.H || latent.dim(1) != lay.W ||
        latent.dim(2) != lay.C)
        throw std::invalid_argument("to_sequence: latent " + shape_str(latent.shape) +
                                    " does not match layout");
    const int64_t S = lay.seq_len();
    Tensor seq = Tensor::zeros({S + 1, lay.pc()});
    for (int64_t s = 0; s < S; ++s) copy_segment(lay, latent, lay.coords_of(s), seq.row(s + 1));
    return seq;
}

inline Tensor from_sequence(const SequenceLayout& lay, const Tensor& seq) {
    const int64_t S = lay.seq_len();
    if (seq.rank() != 2 || seq.dim(0) != S + 1 || seq.dim(1) != lay.pc())
        throw std::invalid_argument("from_sequence: sequence " + shape_str(seq.shape) +
                                    " does not match layout");
    Tensor latent = Tensor::zeros({lay.H, lay.W, lay.C});
    const int pc = lay.pc();
    for (int64_t s = 0; s < S; ++s) {
        const SeqElement e = lay.coords_of(s);
        auto src = seq.row(s + 1);
        const int64_t base = (static_cast<int64_t>(e.i) * lay.W + e.j) * lay.C +
                             static_cast<int64_t>(e.k) * pc;
        for (int c = 0; c < pc; ++c) latent.data[base + c] = src[c];
    }
    return latent;
}

// Elements of the causal sliding window for `target`: spatial extent
// [i-r_h+1, i] x [j-r_w+1, j] clipped to the image, all channel segments,
// restricted to elements strictly before the target in coding order.
// Returned in coding order.
inline std::vector<SeqElement> window_context(const SequenceLayout& lay, int r_h, int r_w,
                                              SeqElement target) {
    lay.check_bounds(target);
    const int64_t target_slot = lay.slot_of(target);
    const int i_lo = std::max(0, target.i - r_h + 1);
    const int j_lo = std::max(0, target.j - r_w + 1);
    std::vector<SeqElement> elems;
    elems.reserve(static_cast<size_t>(r_h) * r_w * lay.n_cs);
    for (int i = i_lo; i <= target.i; ++i)
        for (int j = j_lo; j <= target.j; ++j)
            for (int k = 0; k < lay.n_cs; ++k) {
                SeqElement e{i, j, k};
                if (lay.slot_of(e) < target_slot) elems.push_back(e);
            }
    std::sort(elems.begin(), elems.end(), [&](SeqElement a, SeqElement b) {
        return lay.slot_of(a) < lay.slot_of(b);
    });
    return elems;
}

// [start token, elements...] as a [(n+1) x p_c] model input sequence.
inline Tensor gather_sequence(const SequenceLayout& lay, const Tensor& latent,
                              std::span<const SeqElement> elems) {
    Tensor seq = Tensor::zeros({static_cast<int64_t>(elems.size()) + 1, lay.pc()});
    for (size_t n = 0; n < elems.size(); ++n)
        copy_segment(lay, latent, elems[n], seq.row(static_cast<int64_t>(n) + 1));
    return seq;
}

}  // namespace scc
