#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "scc/layout.hpp"

namespace scc {

enum class AttentionScale : uint32_t {
    InvSqrtDk = 0,  // 1/sqrt(d_k), conventional scaled dot-product
    InvDk = 1,      // 1/d_k
};

struct ModelConfig {
    int layers = 2;             // L
    int embed_dim = 64;         // d_e
    int mlp_dim = 256;          // d_mlp
    int heads = 4;              // h
    int channel_segments = 2;   // N_cs
    CodingOrder order = CodingOrder::ChannelFirst;
    int bottleneck = 8;         // M; the latent has C = M channels
    int mixture_components = 3; // k_m
    int receptive_h = 8;        // R_h
    int receptive_w = 8;        // R_w
    AttentionScale scale_mode = AttentionScale::InvSqrtDk;

    int pc() const { return bottleneck / channel_segments; }
    int head_dim() const { return embed_dim / heads; }
    // longest admissible sequence under the sliding window, excluding start token
    int64_t window_seq_len() const {
        return static_cast<int64_t>(receptive_h) * receptive_w * channel_segments;
    }
    // entropy head widths
    int k1() const { return 2 * bottleneck + embed_dim; }
    int k2() const { return 3 * mixture_components * pc(); }

    SequenceLayout layout(int h, int w) const {
        return SequenceLayout(h, w, bottleneck, channel_segments, order);
    }

    void validate() const {
        if (layers < 1) throw std::invalid_argument("config: layers must be >= 1");
        if (embed_dim < 1 || heads < 1 || embed_dim % heads != 0)
            throw std::invalid_argument("config: heads " + std::to_string(heads) +
                                        " must divide embed_dim " + std::to_string(embed_dim));
        if (mlp_dim < 1) throw std::invalid_argument("config: mlp_dim must be >= 1");
        if (bottleneck < 1 || channel_segments < 1 || bottleneck % channel_segments != 0)
            throw std::invalid_argument("config: channel_segments " +
                                        std::to_string(channel_segments) +
                                        " must divide bottleneck " + std::to_string(bottleneck));
        if (receptive_h < 1 || receptive_w < 1)
            throw std::invalid_argument("config: receptive field must be >= 1");
        if (mixture_components < 1)
            throw std::invalid_argument("config: mixture_components must be >= 1");
    }

    // small configuration used by the self test and most property tests
    static ModelConfig toy() { return ModelConfig{}; }

    // full-size configuration: 8 layers, d_e 384, 12 heads, 4 segments,
    // channel-first order, bottleneck 192, 16x16 receptive field
    static ModelConfig base() {
        ModelConfig c;
        c.layers = 8;
        c.embed_dim = 384;
        c.mlp_dim = 4 * 384;
        c.heads = 12;
        c.channel_segments = 4;
        c.order = CodingOrder::ChannelFirst;
        c.bottleneck = 192;
        c.mixture_components = 3;
        c.receptive_h = 16;
        c.receptive_w = 16;
        return c;
    }

    bool operator==(const ModelConfig&) const = default;
};

}  // namespace scc
