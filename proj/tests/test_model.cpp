#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include "scc/model.hpp"
#include "scc/weights_io.hpp"

using namespace scc;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg = ModelConfig::toy();
    cfg.layers = 2;
    cfg.embed_dim = 32;
    cfg.mlp_dim = 64;
    cfg.heads = 4;
    cfg.receptive_h = 4;
    cfg.receptive_w = 4;
    return cfg;
}

AttentionParams random_attention(SeededRng& rng, int d_e, double std) {
    AttentionParams p;
    p.q = LinearParams(seeded_normal(rng, {d_e, d_e}, std), Tensor::zeros({d_e}));
    p.k = LinearParams(seeded_normal(rng, {d_e, d_e}, std), Tensor::zeros({d_e}));
    p.v = LinearParams(seeded_normal(rng, {d_e, d_e}, std), Tensor::zeros({d_e}));
    p.out = LinearParams(seeded_normal(rng, {d_e, d_e}, std), Tensor::zeros({d_e}));
    return p;
}

// brute-force per-head reference with an explicit masked score matrix
Tensor mha_reference(const AttentionParams& p, const Tensor& x, int heads, AttentionScale mode) {
    const int64_t s = x.dim(0);
    const int d_e = static_cast<int>(x.dim(1));
    const int d_h = d_e / heads;
    const double scale =
        mode == AttentionScale::InvSqrtDk ? 1.0 / std::sqrt(static_cast<double>(d_h)) : 1.0 / d_h;
    const Tensor q = linear_apply(p.q, x), k = linear_apply(p.k, x), v = linear_apply(p.v, x);
    Tensor att = Tensor::zeros({s, d_e});
    for (int hd = 0; hd < heads; ++hd) {
        for (int64_t t = 0; t < s; ++t) {
            std::vector<double> score(static_cast<size_t>(s),
                                      -std::numeric_limits<double>::infinity());
            for (int64_t jj = 0; jj <= t; ++jj) {
                double dot = 0.0;
                for (int d = 0; d < d_h; ++d)
                    dot += static_cast<double>(q.at2(t, hd * d_h + d)) * k.at2(jj, hd * d_h + d);
                score[static_cast<size_t>(jj)] = dot * scale;
            }
            double mx = -std::numeric_limits<double>::infinity();
            for (double sc : score) mx = std::max(mx, sc);
            double sum = 0.0;
            std::vector<double> e(static_cast<size_t>(s), 0.0);
            for (int64_t jj = 0; jj <= t; ++jj) {
                e[static_cast<size_t>(jj)] = std::exp(score[static_cast<size_t>(jj)] - mx);
                sum += e[static_cast<size_t>(jj)];
            }
            for (int64_t jj = 0; jj <= t; ++jj)
                for (int d = 0; d < d_h; ++d)
                    att.at2(t, hd * d_h + d) += static_cast<float>(
                        e[static_cast<size_t>(jj)] / sum * v.at2(jj, hd * d_h + d));
        }
    }
    return linear_apply(p.out, att);
}

bool rows_equal_bits(const Tensor& a, const Tensor& b, int64_t n_rows) {
    for (int64_t t = 0; t < n_rows; ++t)
        for (size_t d = 0; d < a.row(t).size(); ++d)
            if (std::bit_cast<uint32_t>(a.row(t)[d]) != std::bit_cast<uint32_t>(b.row(t)[d]))
                return false;
    return true;
}

}  // namespace

TEST_CASE("single-slot attention is identity weighting through the output projection") {
    SeededRng rng(1);
    const int d_e = 16;
    AttentionParams p = random_attention(rng, d_e, 0.3);
    const Tensor x = seeded_normal(rng, {1, d_e}, 1.0);
    const Tensor got = masked_mha(p, x, {1}, 4, AttentionScale::InvSqrtDk);
    const Tensor want = linear_apply(p.out, linear_apply(p.v, x));
    CHECK(got.same_bits(want));
}

TEST_CASE("zero value projection broadcasts the output bias") {
    SeededRng rng(2);
    const int d_e = 16;
    AttentionParams p = random_attention(rng, d_e, 0.3);
    p.v = LinearParams(Tensor::zeros({d_e, d_e}), Tensor::zeros({d_e}));
    p.out.bias = seeded_normal(rng, {d_e}, 1.0);
    const Tensor x = seeded_normal(rng, {5, d_e}, 1.0);
    const Tensor got = masked_mha(p, x, {5}, 4, AttentionScale::InvSqrtDk);
    for (int64_t t = 0; t < 5; ++t)
        for (int d = 0; d < d_e; ++d) CHECK(got.at2(t, d) == p.out.bias.data[static_cast<size_t>(d)]);
}

TEST_CASE("masked_mha matches the naive per-head oracle within 1e-5") {
    SeededRng rng(3);
    for (int heads : {1, 2, 4}) {
        for (int trial = 0; trial < 10; ++trial) {
            const int d_e = 16;
            const int64_t s = 1 + static_cast<int64_t>(rng.next_u64() % 12);
            AttentionParams p = random_attention(rng, d_e, 0.4);
            const Tensor x = seeded_normal(rng, {s, d_e}, 1.0);
            const Tensor got = masked_mha(p, x, {s}, heads, AttentionScale::InvSqrtDk);
            const Tensor want = mha_reference(p, x, heads, AttentionScale::InvSqrtDk);
            for (size_t i = 0; i < got.data.size(); ++i)
                REQUIRE(std::abs(got.data[i] - want.data[i]) <= 1e-5f);
        }
    }
}

TEST_CASE("both attention scale modes are supported") {
    SeededRng rng(5);
    const int d_e = 16;
    AttentionParams p = random_attention(rng, d_e, 0.4);
    const Tensor x = seeded_normal(rng, {6, d_e}, 1.0);
    for (AttentionScale mode : {AttentionScale::InvSqrtDk, AttentionScale::InvDk}) {
        const Tensor got = masked_mha(p, x, {6}, 2, mode);
        const Tensor want = mha_reference(p, x, 2, mode);
        for (size_t i = 0; i < got.data.size(); ++i)
            REQUIRE(std::abs(got.data[i] - want.data[i]) <= 1e-5f);
    }
    CHECK_FALSE(masked_mha(p, x, {6}, 2, AttentionScale::InvSqrtDk)
                    .same_bits(masked_mha(p, x, {6}, 2, AttentionScale::InvDk)));
}

TEST_CASE("transformer layer with zero weights is the identity") {
    const int d_e = 8;
    LayerParams lp;
    lp.ln_attn = {Tensor({static_cast<int64_t>(d_e)}, std::vector<float>(d_e, 1.0f)),
                  Tensor::zeros({d_e})};
    lp.ln_mlp = lp.ln_attn;
    lp.attn.q = LinearParams(Tensor::zeros({d_e, d_e}), Tensor::zeros({d_e}));
    lp.attn.k = lp.attn.q;
    lp.attn.v = lp.attn.q;
    lp.attn.out = lp.attn.q;
    lp.fc_in = LinearParams(Tensor::zeros({d_e, 2 * d_e}), Tensor::zeros({2 * d_e}));
    lp.fc_out = LinearParams(Tensor::zeros({2 * d_e, d_e}), Tensor::zeros({d_e}));
    SeededRng rng(6);
    const Tensor x = seeded_normal(rng, {5, d_e}, 1.0);
    const Tensor y = transformer_layer(lp, x, 2, AttentionScale::InvSqrtDk);
    CHECK(y.same_bits(x));
}

TEST_CASE("transformer layer preserves shape and is causal") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 9);
    SeededRng rng(10);
    for (int64_t s : {1, 3, 9}) {
        const Tensor x = seeded_normal(rng, {s, cfg.embed_dim}, 1.0);
        const Tensor y = transformer_layer(w.layers[0], x, cfg.heads, cfg.scale_mode);
        REQUIRE(y.shape == x.shape);
    }
    // causality probe: zeroing rows beyond t0 leaves rows <= t0 untouched
    const Tensor x = seeded_normal(rng, {8, cfg.embed_dim}, 1.0);
    const Tensor full = transformer_layer(w.layers[0], x, cfg.heads, cfg.scale_mode);
    for (int64_t t0 = 0; t0 < 8; ++t0) {
        Tensor cut = x;
        for (int64_t t = t0 + 1; t < 8; ++t)
            for (auto& v : cut.row(t)) v = 0.0f;
        const Tensor y = transformer_layer(w.layers[0], cut, cfg.heads, cfg.scale_mode);
        REQUIRE(rows_equal_bits(full, y, t0 + 1));
    }
}

TEST_CASE("forward_global row 0 depends only on the start token") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 11);
    const SequenceLayout lay = cfg.layout(2, 2);
    SeededRng rng(12);
    const Tensor la = seeded_normal(rng, {2, 2, cfg.bottleneck}, 2.0);
    const Tensor lb = seeded_normal(rng, {2, 2, cfg.bottleneck}, 2.0);
    const Tensor oa = forward_global(cfg, w, to_sequence(lay, la));
    const Tensor ob = forward_global(cfg, w, to_sequence(lay, lb));
    CHECK(rows_equal_bits(oa, ob, 1));
    CHECK_FALSE(oa.same_bits(ob));
}

TEST_CASE("exhaustive causality at 2x2 with two segments") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 13);
    const SequenceLayout lay = cfg.layout(2, 2);
    SeededRng rng(14);
    const Tensor latent = seeded_normal(rng, {2, 2, cfg.bottleneck}, 2.0);
    const Tensor base = forward_global(cfg, w, to_sequence(lay, latent));
    for (int64_t t = 0; t < lay.seq_len(); ++t) {
        Tensor perturbed = latent;
        for (int64_t s = t + 1; s < lay.seq_len(); ++s) {
            const SeqElement e = lay.coords_of(s);
            const int64_t off = (static_cast<int64_t>(e.i) * 2 + e.j) * cfg.bottleneck +
                                static_cast<int64_t>(e.k) * cfg.pc();
            for (int c = 0; c < cfg.pc(); ++c) perturbed.data[off + c] = -7.0f - static_cast<float>(s);
        }
        const Tensor out = forward_global(cfg, w, to_sequence(lay, perturbed));
        REQUIRE(rows_equal_bits(base, out, t + 1));
    }
}

TEST_CASE("base configuration accepted, bad head count rejected") {
    ModelConfig base = ModelConfig::base();
    CHECK(base.layers == 8);
    CHECK(base.embed_dim == 384);
    CHECK(base.mlp_dim == 4 * 384);
    CHECK(base.heads == 12);
    CHECK(base.channel_segments == 4);
    CHECK(base.order == CodingOrder::ChannelFirst);
    CHECK(base.bottleneck == 192);
    CHECK(base.receptive_h == 16);
    CHECK(base.receptive_w == 16);
    CHECK_NOTHROW(base.validate());
    base.heads = 13;
    CHECK_THROWS_AS(base.validate(), std::invalid_argument);
}

TEST_CASE("position table length follows the window, not the image") {
    const ModelConfig cfg = tiny_config();  // R = 4x4, N_cs = 2 -> 32 + 1 rows
    const ModelWeights w = make_weights(cfg, 15);
    CHECK(w.pos_table.dim(0) == cfg.window_seq_len() + 1);
    // a 5x5 latent exceeds the window: the global forward must refuse
    const SequenceLayout lay = cfg.layout(5, 5);
    SeededRng rng(16);
    const Tensor latent = seeded_normal(rng, {5, 5, cfg.bottleneck}, 1.0);
    CHECK_THROWS_AS((void)forward_global(cfg, w, to_sequence(lay, latent)), CapacityError);
    // but the sliding window handles every target
    CHECK_NOTHROW((void)forward_window(cfg, w, latent, {4, 4, 1}));
}

TEST_CASE("window equals global wherever the window holds the full prefix") {
    const ModelConfig cfg = ModelConfig::toy();  // R = 8
    const ModelWeights w = make_weights(cfg, 17);
    const SequenceLayout lay = cfg.layout(4, 4);
    SeededRng rng(18);
    const Tensor latent = seeded_normal(rng, {4, 4, cfg.bottleneck}, 2.0);
    const Tensor full = forward_global(cfg, w, to_sequence(lay, latent));
    for (int64_t s = 0; s < lay.seq_len(); ++s) {
        const SeqElement t = lay.coords_of(s);
        // covered = the window holds the entire coding prefix
        if (static_cast<int64_t>(window_context(lay, cfg.receptive_h, cfg.receptive_w, t).size()) !=
            s)
            continue;
        const Tensor win = forward_window(cfg, w, latent, t);
        auto want = full.row(s);
        for (int d = 0; d < cfg.embed_dim; ++d)
            REQUIRE(std::bit_cast<uint32_t>(win.data[static_cast<size_t>(d)]) ==
                    std::bit_cast<uint32_t>(want[d]));
    }
    // single-column latents are covered at every target
    const SequenceLayout col = cfg.layout(6, 1);
    const Tensor col_latent = seeded_normal(rng, {6, 1, cfg.bottleneck}, 2.0);
    const Tensor col_full = forward_global(cfg, w, to_sequence(col, col_latent));
    for (int64_t s = 0; s < col.seq_len(); ++s) {
        const Tensor win = forward_window(cfg, w, col_latent, col.coords_of(s));
        for (int d = 0; d < cfg.embed_dim; ++d)
            REQUIRE(std::bit_cast<uint32_t>(win.data[static_cast<size_t>(d)]) ==
                    std::bit_cast<uint32_t>(col_full.row(s)[d]));
    }
}

TEST_CASE("the bottom-right window pass reproduces every global row") {
    // its window spans the whole image, so its sequence is the global
    // sequence; causality makes every output row identical
    const ModelConfig cfg = ModelConfig::toy();
    const ModelWeights w = make_weights(cfg, 17);
    const SequenceLayout lay = cfg.layout(4, 4);
    SeededRng rng(19);
    const Tensor latent = seeded_normal(rng, {4, 4, cfg.bottleneck}, 2.0);
    const Tensor full = forward_global(cfg, w, to_sequence(lay, latent));
    const SeqElement last{3, 3, cfg.channel_segments - 1};
    const auto ctx = window_context(lay, cfg.receptive_h, cfg.receptive_w, last);
    REQUIRE(static_cast<int64_t>(ctx.size()) == lay.seq_len() - 1);
    const Tensor win_out = forward_global(cfg, w, gather_sequence(lay, latent, ctx));
    CHECK(rows_equal_bits(full, win_out, lay.seq_len()));
}

TEST_CASE("interior windows exclude prior elements right of the target column") {
    const ModelConfig cfg = ModelConfig::toy();
    const ModelWeights w = make_weights(cfg, 17);
    const SequenceLayout lay = cfg.layout(4, 4);
    SeededRng rng(20);
    const Tensor latent = seeded_normal(rng, {4, 4, cfg.bottleneck}, 2.0);
    const Tensor full = forward_global(cfg, w, to_sequence(lay, latent));
    const SeqElement interior{1, 0, 0};
    const int64_t s = lay.slot_of(interior);
    const Tensor win = forward_window(cfg, w, latent, interior);
    bool differs = false;
    for (int d = 0; d < cfg.embed_dim; ++d)
        differs = differs || (win.data[static_cast<size_t>(d)] != full.row(s)[d]);
    CHECK(differs);
}

TEST_CASE("forward_window rejects latents that do not match the bottleneck") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 26);
    const Tensor latent = Tensor::zeros({3, 3, cfg.bottleneck / 2});
    CHECK_THROWS_AS((void)forward_window(cfg, w, latent, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("window for the first element sees only the start token") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 19);
    const SequenceLayout lay = cfg.layout(3, 3);
    SeededRng rng(20);
    const Tensor latent = seeded_normal(rng, {3, 3, cfg.bottleneck}, 2.0);
    const Tensor win = forward_window(cfg, w, latent, {0, 0, 0});
    const Tensor global = forward_global(cfg, w, to_sequence(lay, latent));
    for (int d = 0; d < cfg.embed_dim; ++d)
        CHECK(std::bit_cast<uint32_t>(win.data[static_cast<size_t>(d)]) ==
              std::bit_cast<uint32_t>(global.row(0)[d]));
}

TEST_CASE("position encoding makes the forward permutation-variant") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 21);
    SeededRng rng(22);
    Tensor seq = Tensor::zeros({5, cfg.pc()});
    for (int64_t t = 1; t < 5; ++t)
        for (auto& v : seq.row(t)) v = static_cast<float>(rng.next_normal());
    Tensor swapped = seq;
    for (int64_t d = 0; d < seq.last_dim(); ++d)
        std::swap(swapped.row(2)[static_cast<size_t>(d)], swapped.row(3)[static_cast<size_t>(d)]);
    const Tensor a = forward_global(cfg, w, seq);
    const Tensor b = forward_global(cfg, w, swapped);
    // last row has seen both swapped elements; with positions it must differ
    bool differs = false;
    for (size_t d = 0; d < a.row(4).size(); ++d)
        differs = differs || (a.row(4)[d] != b.row(4)[d]);
    CHECK(differs);
}

TEST_CASE("incremental run matches the batch forward bit for bit") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 23);
    const SequenceLayout lay = cfg.layout(4, 4);
    SeededRng rng(24);
    const Tensor latent = seeded_normal(rng, {4, 4, cfg.bottleneck}, 2.0);
    const Tensor seq = to_sequence(lay, latent);
    const Tensor batch = forward_global(cfg, w, seq);
    SequenceRun run(cfg, w);
    for (int64_t t = 0; t < seq.dim(0); ++t) {
        run.append(seq.row(t));
        // rows computed so far must already be final
        for (int64_t r = 0; r <= t; ++r) {
            auto got = run.output(r);
            auto want = batch.row(r);
            for (size_t d = 0; d < got.size(); ++d)
                REQUIRE(std::bit_cast<uint32_t>(got[d]) == std::bit_cast<uint32_t>(want[d]));
        }
    }
    CHECK_THROWS_AS(run.output(seq.dim(0)), std::out_of_range);
}

TEST_CASE("sequence run enforces the window capacity") {
    ModelConfig cfg = tiny_config();
    cfg.receptive_h = 1;
    cfg.receptive_w = 1;  // capacity: 1*1*2 + 1 = 3 rows
    const ModelWeights w = make_weights(cfg, 25);
    SequenceRun run(cfg, w);
    const std::vector<float> elem(static_cast<size_t>(cfg.pc()), 0.5f);
    run.append_start_token();
    run.append(elem);
    run.append(elem);
    CHECK_THROWS_AS(run.append(elem), CapacityError);
}

TEST_CASE("the full-size configuration runs through the window forward") {
    const ModelConfig base = ModelConfig::base();
    const ModelWeights w = make_weights(base, 51);
    CHECK(w.pos_table.dim(0) == 16 * 16 * 4 + 1);
    CHECK(w.head.fc1.in_dim() == 768);
    SeededRng rng(52);
    const Tensor latent = seeded_normal(rng, {2, 2, base.bottleneck}, 1.0);
    const Tensor ctx = forward_window(base, w, latent, {1, 1, 3});
    REQUIRE(ctx.numel() == base.embed_dim);
    for (float v : ctx.data) REQUIRE(std::isfinite(v));
}

TEST_CASE("weights are a pure function of config and seed") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights a = make_weights(cfg, 31);
    const ModelWeights b = make_weights(cfg, 31);
    const ModelWeights c = make_weights(cfg, 32);
    CHECK(a.embedding.weight.same_bits(b.embedding.weight));
    CHECK(a.pos_table.same_bits(b.pos_table));
    CHECK(a.layers[1].fc_out.weight.same_bits(b.layers[1].fc_out.weight));
    CHECK_FALSE(a.pos_table.same_bits(c.pos_table));
}

TEST_CASE("weights container: bitwise roundtrip, corruption and version checks") {
    const ModelConfig cfg = tiny_config();
    const ModelWeights w = make_weights(cfg, 33);
    std::vector<uint8_t> bytes = save_weights(w);
    const ModelWeights back = load_weights(bytes);
    CHECK(back.config == cfg);
    CHECK(back.embedding.weight.same_bits(w.embedding.weight));
    CHECK(back.pos_table.same_bits(w.pos_table));
    for (size_t l = 0; l < w.layers.size(); ++l) {
        CHECK(back.layers[l].attn.q.weight.same_bits(w.layers[l].attn.q.weight));
        CHECK(back.layers[l].fc_in.weight.same_bits(w.layers[l].fc_in.weight));
    }
    CHECK(back.head.fc1.weight.same_bits(w.head.fc1.weight));
    CHECK(back.head.fc3.weight.same_bits(w.head.fc3.weight));

    auto corrupted = bytes;
    corrupted[0] ^= 0xFF;
    CHECK_THROWS_AS((void)load_weights(corrupted), CorruptStreamError);

    auto wrong_version = bytes;
    wrong_version[4] = 0x7F;
    CHECK_THROWS_AS((void)load_weights(wrong_version), CorruptStreamError);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 9);
    CHECK_THROWS_AS((void)load_weights(truncated), CorruptStreamError);
}
