#pragma once

// Flat versioned binary container for model weights: magic, version, config
// echo, then a named tensor table with raw float32 payloads. Encoder and
// decoder normally regenerate weights from the header seed; the container
// exists so parameter identity can be checked and weights shipped explicitly.

#include <cstdint>
#include <string>
#include <vector>

#include "scc/bytes.hpp"
#include "scc/model.hpp"

namespace scc {

inline constexpr uint32_t kWeightsVersion = 1;

namespace detail {

template <typename Weights, typename Fn>
void for_each_tensor(Weights& w, Fn&& fn) {
    fn("embedding.w", w.embedding.weight);
    fn("embedding.b", w.embedding.bias);
    fn("pos_table", w.pos_table);
    for (size_t l = 0; l < w.layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        auto& lp = w.layers[l];
        fn(p + "ln_attn.gain", lp.ln_attn.gain);
        fn(p + "ln_attn.shift", lp.ln_attn.shift);
        fn(p + "attn.q.w", lp.attn.q.weight);
        fn(p + "attn.q.b", lp.attn.q.bias);
        fn(p + "attn.k.w", lp.attn.k.weight);
        fn(p + "attn.k.b", lp.attn.k.bias);
        fn(p + "attn.v.w", lp.attn.v.weight);
        fn(p + "attn.v.b", lp.attn.v.bias);
        fn(p + "attn.out.w", lp.attn.out.weight);
        fn(p + "attn.out.b", lp.attn.out.bias);
        fn(p + "ln_mlp.gain", lp.ln_mlp.gain);
        fn(p + "ln_mlp.shift", lp.ln_mlp.shift);
        fn(p + "fc_in.w", lp.fc_in.weight);
        fn(p + "fc_in.b", lp.fc_in.bias);
        fn(p + "fc_out.w", lp.fc_out.weight);
        fn(p + "fc_out.b", lp.fc_out.bias);
    }
    fn("ln_final.gain", w.ln_final.gain);
    fn("ln_final.shift", w.ln_final.shift);
    fn("head.fc1.w", w.head.fc1.weight);
    fn("head.fc1.b", w.head.fc1.bias);
    fn("head.fc2.w", w.head.fc2.weight);
    fn("head.fc2.b", w.head.fc2.bias);
    fn("head.fc3.w", w.head.fc3.weight);
    fn("head.fc3.b", w.head.fc3.bias);
}

inline void write_config(ByteWriter& bw, const ModelConfig& c) {
    bw.u32(static_cast<uint32_t>(c.layers));
    bw.u32(static_cast<uint32_t>(c.embed_dim));
    bw.u32(static_cast<uint32_t>(c.mlp_dim));
    bw.u32(static_cast<uint32_t>(c.heads));
    bw.u32(static_cast<uint32_t>(c.channel_segments));
    bw.u32(static_cast<uint32_t>(c.order));
    bw.u32(static_cast<uint32_t>(c.bottleneck));
    bw.u32(static_cast<uint32_t>(c.mixture_components));
    bw.u32(static_cast<uint32_t>(c.receptive_h));
    bw.u32(static_cast<uint32_t>(c.receptive_w));
    bw.u32(static_cast<uint32_t>(c.scale_mode));
}

inline ModelConfig read_config(ByteReader& br) {
    ModelConfig c;
    c.layers = static_cast<int>(br.u32());
    c.embed_dim = static_cast<int>(br.u32());
    c.mlp_dim = static_cast<int>(br.u32());
    c.heads = static_cast<int>(br.u32());
    c.channel_segments = static_cast<int>(br.u32());
    const uint32_t order = br.u32();
    if (order > 1) throw CorruptStreamError("config: unknown coding order tag");
    c.order = static_cast<CodingOrder>(order);
    c.bottleneck = static_cast<int>(br.u32());
    c.mixture_components = static_cast<int>(br.u32());
    c.receptive_h = static_cast<int>(br.u32());
    c.receptive_w = static_cast<int>(br.u32());
    const uint32_t scale = br.u32();
    if (scale > 1) throw CorruptStreamError("config: unknown attention scale tag");
    c.scale_mode = static_cast<AttentionScale>(scale);
    return c;
}

}  // namespace detail

inline std::vector<uint8_t> save_weights(const ModelWeights& w) {
    ByteWriter bw;
    bw.magic("SCWT");
    bw.u32(kWeightsVersion);
    detail::write_config(bw, w.config);
    uint32_t count = 0;
    detail::for_each_tensor(w, [&](const std::string&, const Tensor&) { ++count; });
    bw.u32(count);
    detail::for_each_tensor(w, [&](const std::string& name, const Tensor& t) {
        bw.u32(static_cast<uint32_t>(name.size()));
        bw.raw({reinterpret_cast<const uint8_t*>(name.data()), name.size()});
        bw.u32(static_cast<uint32_t>(t.rank()));
        for (int64_t d : t.shape) bw.u64(static_cast<uint64_t>(d));
        for (float v : t.data) bw.f32(v);
    });
    return bw.bytes;
}

inline ModelWeights load_weights(std::span<const uint8_t> bytes) {
    ByteReader br(bytes);
    br.expect_magic("SCWT", "weights container");
    const uint32_t version = br.u32();
    if (version != kWeightsVersion)
        throw CorruptStreamError("weights container: unsupported version " +
                                 std::to_string(version));
    const ModelConfig cfg = detail::read_config(br);
    cfg.validate();

    // Build a correctly shaped skeleton, then fill it from the tensor table.
    ModelWeights w = make_weights(cfg, 0);
    uint32_t count = br.u32();
    uint32_t filled = 0;
    detail::for_each_tensor(w, [&](const std::string& name, Tensor& t) {
        if (filled >= count) throw CorruptStreamError("weights container: tensor table too short");
        const uint32_t name_len = br.u32();
        auto raw = br.raw(name_len);
        const std::string got(reinterpret_cast<const char*>(raw.data()), raw.size());
        if (got != name)
            throw CorruptStreamError("weights container: expected tensor '" + name + "', found '" +
                                     got + "'");
        const uint32_t rank = br.u32();
        Shape shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int64_t>(br.u64());
        if (shape != t.shape)
            throw CorruptStreamError("weights container: tensor '" + name + "' has shape " +
                                     shape_str(shape) + ", expected " + shape_str(t.shape));
        for (float& v : t.data) v = br.f32();
        ++filled;
    });
    if (filled != count) throw CorruptStreamError("weights container: tensor count mismatch");
    if (br.remaining() != 0) throw CorruptStreamError("weights container: trailing bytes");
    return w;
}

}  // namespace scc
