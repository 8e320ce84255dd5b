#pragma once

// The causal transformer: embedding, learned position table, L pre-norm
// attention+MLP layers, final layer norm. Two evaluation paths share the
// same row kernels and therefore produce bit-identical results:
//   * batch (forward_global / forward_window) for the encoder schedules,
//   * incremental (SequenceRun) for the decoder, which appends one
//     element at a time against per-layer key/value caches.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "scc/config.hpp"
#include "scc/entropy.hpp"
#include "scc/layout.hpp"
#include "scc/tensor.hpp"

namespace scc {

inline constexpr float kLayerNormEps = 1e-5f;
inline constexpr double kInitStd = 0.02;

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CausalMask {
    int64_t length = 0;  // slot t attends to slots {0..t}
};

struct LayerNormParams {
    Tensor gain, shift;
};

struct AttentionParams {
    LinearParams q, k, v, out;  // each d_e -> d_e
};

struct LayerParams {
    LayerNormParams ln_attn, ln_mlp;
    AttentionParams attn;
    LinearParams fc_in, fc_out;  // d_e -> d_mlp -> d_e
};

struct ModelWeights {
    ModelConfig config;
    LinearParams embedding;  // p_c -> d_e
    Tensor pos_table;        // [(S_win+1) x d_e], window-relative positions
    std::vector<LayerParams> layers;
    LayerNormParams ln_final;
    EntropyHeadParams head;
};

inline float attention_scale(int head_dim, AttentionScale mode) {
    if (mode == AttentionScale::InvSqrtDk)
        return 1.0f / std::sqrt(static_cast<float>(head_dim));
    return 1.0f / static_cast<float>(head_dim);
}

namespace detail {

inline Tensor ones(Shape s) {
    Tensor t = Tensor::zeros(std::move(s));
    for (float& v : t.data) v = 1.0f;
    return t;
}

// Multi-head attention for one query row against rows 0..count-1 of the
// key/value buffers (row-major [row][d_e]). Writes concatenated head
// outputs. Zero-probability entries are skipped in the weighted sum, so a
// truncated sequence and a longer masked one accumulate the same terms.
inline void attend_row(std::span<const float> q, const float* kdata, const float* vdata,
                       int64_t count, int d_e, int heads, float scale, std::span<float> scratch,
                       std::span<float> dst) {
    const int d_h = d_e / heads;
    for (int hd = 0; hd < heads; ++hd) {
        const int base = hd * d_h;
        for (int64_t jj = 0; jj < count; ++jj) {
            const float* krow = kdata + jj * d_e + base;
            float dot = 0.0f;
            for (int d = 0; d < d_h; ++d) dot += q[base + d] * krow[d];
            scratch[jj] = scale * dot;
        }
        float mx = scratch[0];
        for (int64_t jj = 1; jj < count; ++jj) mx = std::max(mx, scratch[jj]);
        float sum = 0.0f;
        for (int64_t jj = 0; jj < count; ++jj) {
            scratch[jj] = std::exp(scratch[jj] - mx);
            sum += scratch[jj];
        }
        for (int d = 0; d < d_h; ++d) dst[base + d] = 0.0f;
        for (int64_t jj = 0; jj < count; ++jj) {
            const float p = scratch[jj] / sum;
            if (p != 0.0f) {
                const float* vrow = vdata + jj * d_e + base;
                for (int d = 0; d < d_h; ++d) dst[base + d] += p * vrow[d];
            }
        }
    }
}

}  // namespace detail

inline ModelWeights make_weights(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    SeededRng rng(seed);
    const int de = cfg.embed_dim, dm = cfg.mlp_dim, pc = cfg.pc();
    ModelWeights w;
    w.config = cfg;
    w.embedding = LinearParams(seeded_normal(rng, {pc, de}, kInitStd), Tensor::zeros({de}));
    w.pos_table = seeded_normal(rng, {cfg.window_seq_len() + 1, de}, kInitStd);
    w.layers.reserve(static_cast<size_t>(cfg.layers));
    for (int l = 0; l < cfg.layers; ++l) {
        LayerParams lp;
        lp.ln_attn = {detail::ones({de}), Tensor::zeros({de})};
        lp.ln_mlp = {detail::ones({de}), Tensor::zeros({de})};
        lp.attn.q = LinearParams(seeded_normal(rng, {de, de}, kInitStd), Tensor::zeros({de}));
        lp.attn.k = LinearParams(seeded_normal(rng, {de, de}, kInitStd), Tensor::zeros({de}));
        lp.attn.v = LinearParams(seeded_normal(rng, {de, de}, kInitStd), Tensor::zeros({de}));
        lp.attn.out = LinearParams(seeded_normal(rng, {de, de}, kInitStd), Tensor::zeros({de}));
        lp.fc_in = LinearParams(seeded_normal(rng, {de, dm}, kInitStd), Tensor::zeros({dm}));
        lp.fc_out = LinearParams(seeded_normal(rng, {dm, de}, kInitStd), Tensor::zeros({de}));
        w.layers.push_back(std::move(lp));
    }
    w.ln_final = {detail::ones({de}), Tensor::zeros({de})};
    w.head = make_entropy_head(cfg.k1(), cfg.k2(), rng, kInitStd);
    return w;
}

// --- batch path -------------------------------------------------------------

inline Tensor masked_mha(const AttentionParams& p, const Tensor& x, const CausalMask& mask,
                         int heads, AttentionScale scale_mode) {
    if (x.rank() != 2) throw std::invalid_argument("masked_mha: input must be [S x d_e]");
    const int64_t s = x.dim(0);
    const int d_e = static_cast<int>(x.dim(1));
    if (mask.length != s)
        throw std::invalid_argument("masked_mha: mask length " + std::to_string(mask.length) +
                                    " vs sequence length " + std::to_string(s));
    if (d_e % heads != 0) throw std::invalid_argument("masked_mha: heads must divide d_e");
    const float scale = attention_scale(d_e / heads, scale_mode);

    const Tensor q = linear_apply(p.q, x);
    const Tensor k = linear_apply(p.k, x);
    const Tensor v = linear_apply(p.v, x);
    Tensor att = Tensor::zeros(x.shape);
    std::vector<float> scratch(static_cast<size_t>(s));
    for (int64_t t = 0; t < s; ++t)
        detail::attend_row(q.row(t), k.data.data(), v.data.data(), t + 1, d_e, heads, scale,
                           scratch, att.row(t));
    return linear_apply(p.out, att);
}

inline Tensor transformer_layer(const LayerParams& lp, const Tensor& x, int heads,
                                AttentionScale scale_mode) {
    const Tensor h = layer_norm(x, lp.ln_attn.gain, lp.ln_attn.shift, kLayerNormEps);
    const Tensor a = masked_mha(lp.attn, h, {x.dim(0)}, heads, scale_mode);
    Tensor x1 = x;
    for (size_t i = 0; i < x1.data.size(); ++i) x1.data[i] += a.data[i];
    const Tensor h2 = layer_norm(x1, lp.ln_mlp.gain, lp.ln_mlp.shift, kLayerNormEps);
    const Tensor m = linear_apply(lp.fc_out, gelu(linear_apply(lp.fc_in, h2)));
    for (size_t i = 0; i < x1.data.size(); ++i) x1.data[i] += m.data[i];
    return x1;
}

// seq [(S+1) x p_c] -> context features [(S+1) x d_e]. Output row t has seen
// sequence rows 0..t, i.e. latent elements < t; it is the conditioning
// feature for the element at slot t.
inline Tensor forward_global(const ModelConfig& cfg, const ModelWeights& w, const Tensor& seq) {
    if (seq.rank() != 2 || seq.dim(1) != cfg.pc())
        throw std::invalid_argument("forward_global: sequence " + shape_str(seq.shape) +
                                    " does not match p_c " + std::to_string(cfg.pc()));
    const int64_t s1 = seq.dim(0);
    if (s1 > w.pos_table.dim(0))
        throw CapacityError("forward_global: sequence length " + std::to_string(s1) +
                            " exceeds position table " + std::to_string(w.pos_table.dim(0)) +
                            "; use the sliding window");
    Tensor x = linear_apply(w.embedding, seq);
    for (int64_t t = 0; t < s1; ++t) {
        auto dst = x.row(t);
        auto pos = w.pos_table.row(t);
        for (int64_t d = 0; d < x.last_dim(); ++d) dst[d] += pos[d];
    }
    for (const LayerParams& lp : w.layers)
        x = transformer_layer(lp, x, cfg.heads, cfg.scale_mode);
    return layer_norm(x, w.ln_final.gain, w.ln_final.shift, kLayerNormEps);
}

// Context feature for one target element under the sliding window: the
// window sequence is the causal spatial neighborhood restricted to elements
// before the target, with positions indexed by within-window slot.
inline Tensor forward_window(const ModelConfig& cfg, const ModelWeights& w, const Tensor& latent,
                             SeqElement target) {
    if (latent.rank() != 3 || latent.dim(2) != cfg.bottleneck)
        throw std::invalid_argument("forward_window: latent " + shape_str(latent.shape) +
                                    " does not match bottleneck " +
                                    std::to_string(cfg.bottleneck));
    const SequenceLayout lay = cfg.layout(static_cast<int>(latent.dim(0)),
                                          static_cast<int>(latent.dim(1)));
    const std::vector<SeqElement> ctx = window_context(lay, cfg.receptive_h, cfg.receptive_w, target);
    const Tensor seq = gather_sequence(lay, latent, ctx);
    const Tensor out = forward_global(cfg, w, seq);
    auto last = out.row(static_cast<int64_t>(ctx.size()));
    return Tensor({cfg.embed_dim}, std::vector<float>(last.begin(), last.end()));
}

// --- incremental path -------------------------------------------------------

// One window's forward pass, grown element by element. output(t) is valid as
// soon as row t has been appended and never changes afterwards (causality),
// which is what lets the decoder interleave appends with symbol decoding.
class SequenceRun {
public:
    SequenceRun(const ModelConfig& cfg, const ModelWeights& w) : cfg_(&cfg), w_(&w) {
        caches_.resize(static_cast<size_t>(cfg.layers));
        scratch_.resize(1);
    }

    int64_t rows() const { return rows_; }

    // element: p_c channel values; the start token is an all-zero element
    void append(std::span<const float> element) {
        const ModelConfig& cfg = *cfg_;
        const ModelWeights& w = *w_;
        const int d_e = cfg.embed_dim;
        if (rows_ + 1 > w.pos_table.dim(0))
            throw CapacityError("sequence run: window capacity " +
                                std::to_string(w.pos_table.dim(0)) + " exceeded");
        std::vector<float> x(static_cast<size_t>(d_e));
        linear_row(element, w.embedding, x);
        auto pos = w.pos_table.row(rows_);
        for (int d = 0; d < d_e; ++d) x[d] += pos[d];

        scratch_.resize(static_cast<size_t>(rows_ + 1));
        std::vector<float> h(static_cast<size_t>(d_e)), qrow(static_cast<size_t>(d_e));
        std::vector<float> att(static_cast<size_t>(d_e)), tmp(static_cast<size_t>(d_e));
        std::vector<float> mlp_h(static_cast<size_t>(cfg.mlp_dim));
        const float scale = attention_scale(cfg.head_dim(), cfg.scale_mode);

        for (int l = 0; l < cfg.layers; ++l) {
            const LayerParams& lp = w.layers[static_cast<size_t>(l)];
            LayerCache& cache = caches_[static_cast<size_t>(l)];
            layer_norm_row(x, lp.ln_attn.gain.data, lp.ln_attn.shift.data, kLayerNormEps, h);
            linear_row(h, lp.attn.q, qrow);
            const size_t off = cache.k.size();
            cache.k.resize(off + static_cast<size_t>(d_e));
            cache.v.resize(off + static_cast<size_t>(d_e));
            linear_row(h, lp.attn.k, std::span<float>(cache.k.data() + off, static_cast<size_t>(d_e)));
            linear_row(h, lp.attn.v, std::span<float>(cache.v.data() + off, static_cast<size_t>(d_e)));
            detail::attend_row(qrow, cache.k.data(), cache.v.data(), rows_ + 1, d_e, cfg.heads,
                               scale, scratch_, att);
            linear_row(att, lp.attn.out, tmp);
            for (int d = 0; d < d_e; ++d) x[d] += tmp[d];
            layer_norm_row(x, lp.ln_mlp.gain.data, lp.ln_mlp.shift.data, kLayerNormEps, h);
            linear_row(h, lp.fc_in, mlp_h);
            for (float& v : mlp_h) v = gelu_scalar(v);
            linear_row(mlp_h, lp.fc_out, tmp);
            for (int d = 0; d < d_e; ++d) x[d] += tmp[d];
        }
        const size_t out_off = outputs_.size();
        outputs_.resize(out_off + static_cast<size_t>(d_e));
        layer_norm_row(x, w.ln_final.gain.data, w.ln_final.shift.data, kLayerNormEps,
                       std::span<float>(outputs_.data() + out_off, static_cast<size_t>(d_e)));
        ++rows_;
    }

    void append_start_token() {
        const std::vector<float> zero(static_cast<size_t>(cfg_->pc()), 0.0f);
        append(zero);
    }

    std::span<const float> output(int64_t t) const {
        if (t < 0 || t >= rows_) throw std::out_of_range("sequence run: output row not computed");
        return {outputs_.data() + t * cfg_->embed_dim, static_cast<size_t>(cfg_->embed_dim)};
    }

private:
    struct LayerCache {
        std::vector<float> k, v;  // [rows x d_e]
    };
    const ModelConfig* cfg_;
    const ModelWeights* w_;
    int64_t rows_ = 0;
    std::vector<LayerCache> caches_;
    std::vector<float> outputs_;
    std::vector<float> scratch_;
};

}  // namespace scc
