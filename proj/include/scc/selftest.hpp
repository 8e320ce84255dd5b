#pragma once

// Full invariant suite at toy scale: structural checks (causality, window
// equivalence, scheduler equivalence, lossless roundtrip, rate agreement,
// distribution sanity) runnable from the CLI. Each check passes or fails
// independently and carries a one-line detail.

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "scc/codec.hpp"
#include "scc/weights_io.hpp"

namespace scc {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace selftest_detail {

inline ModelConfig toy_config(int n_cs = 2) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.channel_segments = n_cs;
    return cfg;
}

inline bool rows_equal_bits(const Tensor& a, const Tensor& b, int64_t row_count) {
    for (int64_t t = 0; t < row_count; ++t) {
        auto ra = a.row(t), rb = b.row(t);
        for (size_t d = 0; d < ra.size(); ++d)
            if (std::bit_cast<uint32_t>(ra[d]) != std::bit_cast<uint32_t>(rb[d])) return false;
    }
    return true;
}

inline bool check_causality(const ModelConfig& cfg, int h, int w, uint64_t seed) {
    const ModelWeights weights = make_weights(cfg, seed);
    const SequenceLayout lay = cfg.layout(h, w);
    SeededRng rng(seed + 1);
    Tensor latent = seeded_normal(rng, {h, w, cfg.bottleneck}, 2.0);
    const Tensor base = forward_global(cfg, weights, to_sequence(lay, latent));
    for (int64_t t = 0; t < lay.seq_len(); ++t) {
        Tensor perturbed = latent;
        for (int64_t s = t + 1; s < lay.seq_len(); ++s) {
            const SeqElement e = lay.coords_of(s);
            const int64_t off = (static_cast<int64_t>(e.i) * w + e.j) * cfg.bottleneck +
                                static_cast<int64_t>(e.k) * cfg.pc();
            for (int c = 0; c < cfg.pc(); ++c) perturbed.data[off + c] += 3.0f + static_cast<float>(c);
        }
        const Tensor out = forward_global(cfg, weights, to_sequence(lay, perturbed));
        if (!rows_equal_bits(base, out, t + 1)) return false;
    }
    return true;
}

}  // namespace selftest_detail

inline std::vector<CheckResult> run_selftest(int threads = 0) {
    using namespace selftest_detail;
    std::vector<CheckResult> results;
    auto run = [&](const std::string& name, const std::function<std::string()>& body) {
        CheckResult r;
        r.name = name;
        try {
            r.detail = body();
            r.pass = true;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = e.what();
        }
        results.push_back(std::move(r));
    };

    run("tensor-kernels", [] {
        // matmul against an independently ordered triple loop, bitwise
        SeededRng rng(11);
        const Tensor a = seeded_normal(rng, {9, 7}, 1.0);
        const Tensor b = seeded_normal(rng, {7, 5}, 1.0);
        const Tensor c = matmul(a, b);
        for (int64_t i = 0; i < 9; ++i)
            for (int64_t j = 0; j < 5; ++j) {
                float acc = 0.0f;
                for (int64_t t = 0; t < 7; ++t) acc += a.at2(i, t) * b.at2(t, j);
                if (std::bit_cast<uint32_t>(acc) != std::bit_cast<uint32_t>(c.at2(i, j)))
                    throw std::runtime_error("matmul differs from scalar oracle");
            }
        const Tensor sm = softmax_lastdim(seeded_normal(rng, {6, 8}, 3.0));
        for (int64_t r = 0; r < 6; ++r) {
            float sum = 0.0f;
            for (float v : sm.row(r)) sum += v;
            if (std::abs(sum - 1.0f) > 1e-6f) throw std::runtime_error("softmax row sum off");
        }
        return std::string("matmul bit-exact, softmax normalized");
    });

    run("attention-oracle", [] {
        SeededRng rng(23);
        const int d_e = 32, heads = 4, s = 9;
        AttentionParams p;
        p.q = LinearParams(seeded_normal(rng, {d_e, d_e}, 0.2), Tensor::zeros({d_e}));
        p.k = LinearParams(seeded_normal(rng, {d_e, d_e}, 0.2), Tensor::zeros({d_e}));
        p.v = LinearParams(seeded_normal(rng, {d_e, d_e}, 0.2), Tensor::zeros({d_e}));
        p.out = LinearParams(seeded_normal(rng, {d_e, d_e}, 0.2), Tensor::zeros({d_e}));
        const Tensor x = seeded_normal(rng, {s, d_e}, 1.0);
        const Tensor got = masked_mha(p, x, {s}, heads, AttentionScale::InvSqrtDk);
        // naive reference in double with explicit score matrix
        const Tensor q = linear_apply(p.q, x), k = linear_apply(p.k, x), v = linear_apply(p.v, x);
        const int d_h = d_e / heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(d_h));
        Tensor att = Tensor::zeros({s, d_e});
        for (int hd = 0; hd < heads; ++hd)
            for (int64_t t = 0; t < s; ++t) {
                std::vector<double> sc(static_cast<size_t>(s), -1e30);
                for (int64_t jj = 0; jj <= t; ++jj) {
                    double dot = 0;
                    for (int d = 0; d < d_h; ++d)
                        dot += static_cast<double>(q.at2(t, hd * d_h + d)) * k.at2(jj, hd * d_h + d);
                    sc[jj] = dot * scale;
                }
                double mx = sc[0];
                for (int64_t jj = 1; jj <= t; ++jj) mx = std::max(mx, sc[jj]);
                double sum = 0;
                for (int64_t jj = 0; jj <= t; ++jj) {
                    sc[jj] = std::exp(sc[jj] - mx);
                    sum += sc[jj];
                }
                for (int64_t jj = 0; jj <= t; ++jj)
                    for (int d = 0; d < d_h; ++d)
                        att.at2(t, hd * d_h + d) +=
                            static_cast<float>(sc[jj] / sum * v.at2(jj, hd * d_h + d));
            }
        const Tensor want = linear_apply(p.out, att);
        for (size_t i = 0; i < want.data.size(); ++i)
            if (std::abs(want.data[i] - got.data[i]) > 1e-5f)
                throw std::runtime_error("attention deviates from reference");
        return std::string("masked attention matches reference within 1e-5");
    });

    run("causality-exhaustive", [] {
        if (!check_causality(toy_config(2), 2, 2, 101))
            throw std::runtime_error("future element leaked into past feature");
        return std::string("2x2 latent, all prefixes bit-stable");
    });

    run("window-global-equivalence", [] {
        const ModelConfig cfg = toy_config(2);
        const ModelWeights weights = make_weights(cfg, 5);
        const SequenceLayout lay = cfg.layout(4, 4);
        SeededRng rng(6);
        const Tensor latent = seeded_normal(rng, {4, 4, cfg.bottleneck}, 2.0);
        const Tensor full = forward_global(cfg, weights, to_sequence(lay, latent));
        // the bottom-right window holds the whole image: every output row of
        // its pass must equal the corresponding global row
        const SeqElement last{3, 3, cfg.channel_segments - 1};
        const auto ctx = window_context(lay, cfg.receptive_h, cfg.receptive_w, last);
        const Tensor win_out = forward_global(cfg, weights, gather_sequence(lay, latent, ctx));
        if (!rows_equal_bits(full, win_out, lay.seq_len()))
            throw std::runtime_error("bottom-right window pass deviates from global rows");
        // per-target windows agree wherever they hold the full prefix
        for (int64_t s = 0; s < lay.seq_len(); ++s) {
            const SeqElement t = lay.coords_of(s);
            if (static_cast<int64_t>(
                    window_context(lay, cfg.receptive_h, cfg.receptive_w, t).size()) != s)
                continue;
            const Tensor win = forward_window(cfg, weights, latent, t);
            for (int d = 0; d < cfg.embed_dim; ++d)
                if (std::bit_cast<uint32_t>(win.data[static_cast<size_t>(d)]) !=
                    std::bit_cast<uint32_t>(full.row(s)[d]))
                    throw std::runtime_error("window/global mismatch at slot " + std::to_string(s));
        }
        return std::string("window pass reproduces global rows bit-exactly");
    });

    std::vector<uint8_t> reference_stream;
    LatentSymbols reference_latent;
    run("scheduler-equivalence", [&]() {
        CodecSettings st;
        st.model = toy_config(2);
        st.model_seed = 41;
        st.hyper_seed = 42;
        reference_latent = gen_synthetic_latent(77, 8, 8, 8, 0.5, st.symbol_bound);
        const ScheduleMode modes[] = {ScheduleMode::DS, ScheduleMode::PadBatch, ScheduleMode::BDS,
                                      ScheduleMode::BdsScs};
        EncodeResult first;
        for (size_t m = 0; m < 4; ++m) {
            st.mode = modes[m];
            EncodeResult r = encode_latent(reference_latent, st);
            if (m == 0) {
                first = std::move(r);
            } else {
                if (!r.params.same_bits(first.params))
                    throw std::runtime_error(std::string("entropy params differ under ") +
                                             schedule_mode_name(modes[m]));
                if (r.stream != first.stream)
                    throw std::runtime_error(std::string("bitstream differs under ") +
                                             schedule_mode_name(modes[m]));
            }
        }
        reference_stream = first.stream;
        return std::string("ds/pb/bds/bds-scs bit-identical params and bytes");
    });

    run("wavefront-roundtrip", [&]() {
        if (reference_stream.empty()) throw std::runtime_error("no stream from equivalence check");
        const LatentSymbols out = decode_latent(reference_stream, threads);
        if (out.symbols != reference_latent.symbols)
            throw std::runtime_error("decoded symbols differ from encoder input");
        return std::string("decode(encode(x)) == x on 8x8x8");
    });

    run("rate-agreement", [&]() {
        if (reference_stream.empty()) throw std::runtime_error("no stream available");
        CodecSettings st;
        st.model = toy_config(2);
        st.model_seed = 41;
        st.hyper_seed = 42;
        st.mode = ScheduleMode::BdsScs;
        const EncodeResult r = encode_latent(reference_latent, st);
        const double payload_bits = 8.0 * static_cast<double>(r.payload_bytes);
        const double slack = 0.001 * r.estimate.total_bits + 64.0;
        if (std::abs(payload_bits - r.estimate.total_bits) > slack)
            throw std::runtime_error("payload " + std::to_string(payload_bits) + " vs estimate " +
                                     std::to_string(r.estimate.total_bits));
        std::ostringstream os;
        os << "payload " << payload_bits << " bits, estimate " << r.estimate.total_bits << " bits";
        return os.str();
    });

    run("gmm-normalization", [] {
        SeededRng rng(301);
        for (int trial = 0; trial < 500; ++trial) {
            const int km = 3, bound = 32;
            std::vector<float> w(km), mu(km), sg(km);
            float wsum = 0.0f;
            for (int q = 0; q < km; ++q) {
                w[q] = static_cast<float>(rng.next_unit()) + 1e-3f;
                wsum += w[q];
            }
            for (int q = 0; q < km; ++q) w[q] /= wsum;
            for (int q = 0; q < km; ++q) mu[q] = static_cast<float>(rng.next_normal() * 4.0);
            for (int q = 0; q < km; ++q)
                sg[q] = std::min(std::max(static_cast<float>(std::exp(rng.next_normal())), kSigmaMin),
                                 kSigmaMax);
            const auto pmf = gmm_pmf_all(w, mu, sg, bound);
            double sum = 0.0;
            for (double p : pmf) sum += p;
            if (std::abs(sum - 1.0) > 1e-5) throw std::runtime_error("pmf sum " + std::to_string(sum));
            double cum = 0.0;
            for (double p : pmf) {
                if (p < 0.0) throw std::runtime_error("negative pmf entry");
                cum += p;
            }
        }
        return std::string("500 random mixtures normalized within 1e-5");
    });

    run("cdf-quantization", [] {
        SeededRng rng(302);
        for (int trial = 0; trial < 500; ++trial) {
            const int n = 3 + static_cast<int>(rng.next_u64() % 63);
            std::vector<double> pmf(static_cast<size_t>(n));
            double sum = 0.0;
            for (double& p : pmf) {
                p = rng.next_unit() + 1e-9;
                sum += p;
            }
            for (double& p : pmf) p /= sum;
            const CdfTable t = build_cdf(pmf, -n / 2);
            if (t.cum.front() != 0 || t.cum.back() != kFreqTotal)
                throw std::runtime_error("cdf endpoints wrong");
            for (int i = 0; i < t.size(); ++i)
                if (t.freq(i) < 1) throw std::runtime_error("frequency floor violated");
        }
        return std::string("500 random tables total exactly 65536, floor 1");
    });

    run("wavefront-soundness", [] {
        for (int n_cs : {1, 2}) {
            const ModelConfig cfg = toy_config(n_cs);
            const SequenceLayout lay = cfg.layout(8, 8);
            for (ScheduleMode mode : {ScheduleMode::DS, ScheduleMode::PadBatch, ScheduleMode::BDS,
                                      ScheduleMode::BdsScs, ScheduleMode::Wavefront}) {
                const Schedule s = build_schedule(enumerate_windows(lay, cfg, mode), mode);
                const CausalityReport rep = verify_causality(s, lay, cfg);
                if (!rep.pass)
                    throw std::runtime_error(std::string(schedule_mode_name(mode)) + ": " +
                                             rep.first_violation);
            }
            const Schedule wf = build_schedule(enumerate_windows(lay, cfg, ScheduleMode::Wavefront),
                                               ScheduleMode::Wavefront);
            if (static_cast<int>(wf.groups.size()) != 15)
                throw std::runtime_error("8x8 wavefront should have 15 diagonals");
        }
        return std::string("all schedules dependency-closed, diagonals correct");
    });

    run("weights-container", [] {
        const ModelConfig cfg = toy_config(2);
        const ModelWeights w = make_weights(cfg, 99);
        std::vector<uint8_t> bytes = save_weights(w);
        const ModelWeights back = load_weights(bytes);
        bool same = back.embedding.weight.same_bits(w.embedding.weight) &&
                    back.pos_table.same_bits(w.pos_table) &&
                    back.head.fc3.weight.same_bits(w.head.fc3.weight);
        if (!same) throw std::runtime_error("weights changed across save/load");
        bytes[1] ^= 0x40;  // corrupt the magic
        try {
            (void)load_weights(bytes);
            throw std::runtime_error("corrupted container accepted");
        } catch (const CorruptStreamError&) {
        }
        return std::string("container round-trips bitwise; corruption detected");
    });

    run("thread-independence", [&]() {
        CodecSettings st;
        st.model = toy_config(2);
        st.model_seed = 8;
        st.hyper_seed = 9;
        st.mode = ScheduleMode::BDS;
        const LatentSymbols lat = gen_synthetic_latent(55, 6, 6, 8, 0.3, st.symbol_bound);
        st.threads = 1;
        const EncodeResult a = encode_latent(lat, st);
        st.threads = 4;
        const EncodeResult b = encode_latent(lat, st);
        if (a.stream != b.stream) throw std::runtime_error("stream depends on worker count");
        const LatentSymbols d1 = decode_latent(a.stream, 1);
        const LatentSymbols d4 = decode_latent(a.stream, 4);
        if (d1.symbols != d4.symbols) throw std::runtime_error("decode depends on worker count");
        return std::string("1 vs 4 workers byte-identical");
    });

    return results;
}

}  // namespace scc
