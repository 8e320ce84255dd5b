#pragma once

// End-to-end latent codec: file formats, entropy-parameter computation under
// any encoder schedule, wavefront decoding, synthetic latent generation.
//
// Stream layout (little-endian):
//   magic "SCBS" | u32 version | u32 H | u32 W | u32 C | u32 N_cs |
//   u32 order (0=cfo, 1=sfo) | u32 R_h | u32 R_w | u32 layers | u32 d_e |
//   u32 d_mlp | u32 heads | u32 k_m | u32 scale_mode (0=1/sqrt(dk), 1=1/dk) |
//   i32 symbol_bound | u64 model_seed | u64 hyper_seed | u64 payload_len |
//   payload bytes (range coder, see range_coder.hpp)
//
// The decoder rebuilds the model weights and hyper features from the seeds,
// so encoder and decoder provably share parameters. Payload symbols are
// ordered by the wavefront schedule: priority groups ascending, then segment
// step, then windows by target slot, then channels — independent of the
// encoder schedule that produced the entropy parameters.
//
// Latent file: magic "SCLT" | u32 H | u32 W | u32 C |
//   u32 elem_type (0 = int16 symbols, 1 = float32 reals) | row-major data.

#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scc/bytes.hpp"
#include "scc/config.hpp"
#include "scc/entropy.hpp"
#include "scc/layout.hpp"
#include "scc/model.hpp"
#include "scc/parallel.hpp"
#include "scc/range_coder.hpp"
#include "scc/scheduler.hpp"

namespace scc {

inline constexpr uint32_t kStreamVersion = 1;

struct CodecSettings {
    ModelConfig model;
    int symbol_bound = 32;
    uint64_t model_seed = 1;
    uint64_t hyper_seed = 1;  // 0 selects the all-zero hyper ablation
    ScheduleMode mode = ScheduleMode::BdsScs;
    int threads = 0;  // 0 = hardware concurrency
};

struct LatentSymbols {
    int H = 0, W = 0, C = 0;
    std::vector<int16_t> symbols;  // raster order, channel-minor

    int64_t count() const { return static_cast<int64_t>(H) * W * C; }
};

// --- file formats ------------------------------------------------------------

struct LatentFileData {
    int H = 0, W = 0, C = 0;
    bool is_float = false;
    std::vector<int16_t> ints;
    std::vector<float> floats;
};

inline std::vector<uint8_t> write_latent_bytes(const LatentFileData& lat) {
    ByteWriter bw;
    bw.magic("SCLT");
    bw.u32(static_cast<uint32_t>(lat.H));
    bw.u32(static_cast<uint32_t>(lat.W));
    bw.u32(static_cast<uint32_t>(lat.C));
    bw.u32(lat.is_float ? 1u : 0u);
    if (lat.is_float)
        for (float v : lat.floats) bw.f32(v);
    else
        for (int16_t v : lat.ints) {
            bw.u8(static_cast<uint8_t>(static_cast<uint16_t>(v) & 0xFF));
            bw.u8(static_cast<uint8_t>(static_cast<uint16_t>(v) >> 8));
        }
    return bw.bytes;
}

inline LatentFileData read_latent_bytes(std::span<const uint8_t> bytes) {
    ByteReader br(bytes);
    br.expect_magic("SCLT", "latent file");
    LatentFileData lat;
    lat.H = static_cast<int>(br.u32());
    lat.W = static_cast<int>(br.u32());
    lat.C = static_cast<int>(br.u32());
    if (lat.H < 1 || lat.W < 1 || lat.C < 1)
        throw CorruptStreamError("latent file: dimensions must be >= 1");
    const uint32_t elem_type = br.u32();
    const int64_t n = static_cast<int64_t>(lat.H) * lat.W * lat.C;
    if (elem_type == 0) {
        if (br.remaining() != static_cast<size_t>(n) * 2)
            throw CorruptStreamError("latent file: size does not match header");
        lat.ints.resize(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) {
            const uint16_t lo = br.u8(), hi = br.u8();
            lat.ints[static_cast<size_t>(i)] = static_cast<int16_t>(lo | (hi << 8));
        }
    } else if (elem_type == 1) {
        if (br.remaining() != static_cast<size_t>(n) * 4)
            throw CorruptStreamError("latent file: size does not match header");
        lat.is_float = true;
        lat.floats.resize(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) lat.floats[static_cast<size_t>(i)] = br.f32();
    } else {
        throw CorruptStreamError("latent file: unknown element type " + std::to_string(elem_type));
    }
    return lat;
}

struct CodecHeader {
    uint32_t version = kStreamVersion;
    int H = 0, W = 0;
    ModelConfig model;
    int32_t symbol_bound = 32;
    uint64_t model_seed = 0, hyper_seed = 0;
    uint64_t payload_len = 0;

    void write(ByteWriter& bw) const {
        bw.magic("SCBS");
        bw.u32(version);
        bw.u32(static_cast<uint32_t>(H));
        bw.u32(static_cast<uint32_t>(W));
        bw.u32(static_cast<uint32_t>(model.bottleneck));
        bw.u32(static_cast<uint32_t>(model.channel_segments));
        bw.u32(static_cast<uint32_t>(model.order));
        bw.u32(static_cast<uint32_t>(model.receptive_h));
        bw.u32(static_cast<uint32_t>(model.receptive_w));
        bw.u32(static_cast<uint32_t>(model.layers));
        bw.u32(static_cast<uint32_t>(model.embed_dim));
        bw.u32(static_cast<uint32_t>(model.mlp_dim));
        bw.u32(static_cast<uint32_t>(model.heads));
        bw.u32(static_cast<uint32_t>(model.mixture_components));
        bw.u32(static_cast<uint32_t>(model.scale_mode));
        bw.i32(symbol_bound);
        bw.u64(model_seed);
        bw.u64(hyper_seed);
        bw.u64(payload_len);
    }

    static CodecHeader parse(ByteReader& br) {
        br.expect_magic("SCBS", "stream");
        CodecHeader h;
        h.version = br.u32();
        if (h.version != kStreamVersion)
            throw CorruptStreamError("stream: unsupported version " + std::to_string(h.version));
        h.H = static_cast<int>(br.u32());
        h.W = static_cast<int>(br.u32());
        h.model.bottleneck = static_cast<int>(br.u32());
        h.model.channel_segments = static_cast<int>(br.u32());
        const uint32_t order = br.u32();
        if (order > 1) throw CorruptStreamError("stream: unknown coding order tag");
        h.model.order = static_cast<CodingOrder>(order);
        h.model.receptive_h = static_cast<int>(br.u32());
        h.model.receptive_w = static_cast<int>(br.u32());
        h.model.layers = static_cast<int>(br.u32());
        h.model.embed_dim = static_cast<int>(br.u32());
        h.model.mlp_dim = static_cast<int>(br.u32());
        h.model.heads = static_cast<int>(br.u32());
        h.model.mixture_components = static_cast<int>(br.u32());
        const uint32_t scale = br.u32();
        if (scale > 1) throw CorruptStreamError("stream: unknown attention scale tag");
        h.model.scale_mode = static_cast<AttentionScale>(scale);
        h.symbol_bound = br.i32();
        h.model_seed = br.u64();
        h.hyper_seed = br.u64();
        h.payload_len = br.u64();
        if (h.H < 1 || h.W < 1)
            throw CorruptStreamError("stream: latent dimensions must be >= 1");
        if (h.symbol_bound < 1)
            throw CorruptStreamError("stream: symbol bound must be >= 1");
        try {
            h.model.validate();
        } catch (const std::invalid_argument& e) {
            throw CorruptStreamError(std::string("stream: invalid model config: ") + e.what());
        }
        return h;
    }
};

// --- entropy parameter computation (encoder side) ----------------------------

namespace detail {

inline Tensor latent_to_tensor(const LatentSymbols& lat) {
    Tensor t = Tensor::zeros({lat.H, lat.W, lat.C});
    for (size_t i = 0; i < lat.symbols.size(); ++i) t.data[i] = static_cast<float>(lat.symbols[i]);
    return t;
}

inline void store_segment_params(const SegmentParams& sp, int i, int j, int k,
                                 const SequenceLayout& lay, GmmField& field) {
    const int pc = lay.pc(), km = sp.km;
    const int64_t base = (static_cast<int64_t>(i) * lay.W + j) * lay.C +
                         static_cast<int64_t>(k) * pc;
    for (int c = 0; c < pc; ++c)
        for (int q = 0; q < km; ++q) {
            field.w[(base + c) * km + q] = sp.w[static_cast<size_t>(c) * km + q];
            field.mu[(base + c) * km + q] = sp.mu[static_cast<size_t>(c) * km + q];
            field.sigma[(base + c) * km + q] = sp.sigma[static_cast<size_t>(c) * km + q];
        }
}

// Evaluates one window with the batch forward pass and writes the mixture
// parameters of the element(s) it serves. pad_to >= 0 pads the input
// sequence with zero rows up to that context length (PadBatch); the causal
// mask keeps padding out of every harvested row.
inline void eval_window(const ModelConfig& cfg, const ModelWeights& weights, const Tensor& hyper,
                        const SequenceLayout& lay, const Tensor& latent_f, const WindowSpec& spec,
                        int64_t pad_to, GmmField& field) {
    const int64_t n = spec.context_len();
    Tensor seq;
    if (pad_to > n) {
        seq = Tensor::zeros({pad_to + 1, lay.pc()});
        for (int64_t t = 0; t < n; ++t) copy_segment(lay, latent_f, spec.context[t], seq.row(t + 1));
    } else {
        seq = gather_sequence(lay, latent_f, spec.context);
    }
    const Tensor out = forward_global(cfg, weights, seq);
    const auto hvec = hyper.row(static_cast<int64_t>(spec.target.i) * lay.W + spec.target.j);
    if (spec.per_position) {
        // feature row for segment k is the window slot of element (i, j, k)
        for (int k = 0; k < lay.n_cs; ++k) {
            int64_t t = n;  // final segment: the target itself
            if (k < lay.n_cs - 1) {
                t = -1;
                for (int64_t c = 0; c < n; ++c)
                    if (spec.context[c].i == spec.target.i && spec.context[c].j == spec.target.j &&
                        spec.context[c].k == k) {
                        t = c;
                        break;
                    }
                if (t < 0)
                    throw std::logic_error("eval_window: own segment missing from window context");
            }
            const SegmentParams sp = entropy_head(weights.head, out.row(t), hvec, k, cfg);
            store_segment_params(sp, spec.target.i, spec.target.j, k, lay, field);
        }
    } else {
        const SegmentParams sp = entropy_head(weights.head, out.row(n), hvec, spec.target.k, cfg);
        store_segment_params(sp, spec.target.i, spec.target.j, spec.target.k, lay, field);
    }
}

}  // namespace detail

// Runs the schedule group by group; windows inside a group may run on any
// number of threads without changing a single bit of the output.
inline GmmField compute_entropy_params(const ModelConfig& cfg, const ModelWeights& weights,
                                       const Tensor& hyper, const SequenceLayout& lay,
                                       const Tensor& latent_f, const Schedule& sched, int threads) {
    GmmField field = GmmField::zeros(static_cast<int64_t>(lay.H) * lay.W * lay.C,
                                     cfg.mixture_components);
    for (const PriorityGroup& group : sched.groups) {
        int64_t pad_to = -1;
        if (sched.mode == ScheduleMode::PadBatch)
            for (const WindowSpec& w : group.windows)
                pad_to = std::max(pad_to, w.context_len());
        parallel_for(static_cast<int64_t>(group.windows.size()), threads, [&](int64_t wi) {
            detail::eval_window(cfg, weights, hyper, lay, latent_f, group.windows[wi], pad_to,
                                field);
        });
    }
    return field;
}

// Element indices (raster/channel order) in the order symbols enter the
// bitstream: wavefront group, then segment step, then window, then channel.
inline std::vector<int64_t> bitstream_element_order(const SequenceLayout& lay,
                                                    const Schedule& wavefront) {
    std::vector<int64_t> order;
    order.reserve(static_cast<size_t>(lay.H) * lay.W * lay.C);
    const int pc = lay.pc();
    for (const PriorityGroup& group : wavefront.groups)
        for (int k = 0; k < lay.n_cs; ++k)
            for (const WindowSpec& w : group.windows) {
                const int64_t base = (static_cast<int64_t>(w.target.i) * lay.W + w.target.j) *
                                         lay.C +
                                     static_cast<int64_t>(k) * pc;
                for (int c = 0; c < pc; ++c) order.push_back(base + c);
            }
    return order;
}

// --- encode / decode ----------------------------------------------------------

struct EncodeResult {
    std::vector<uint8_t> stream;  // header + payload
    GmmField params;
    RateEstimate estimate;
    int64_t payload_bytes = 0;
    int64_t windows_evaluated = 0;
    int64_t groups = 0;
};

inline EncodeResult encode_latent(const LatentSymbols& lat, const CodecSettings& st) {
    st.model.validate();
    if (!is_encoder_mode(st.mode))
        throw std::invalid_argument("encode: wavefront is the decoder schedule");
    if (lat.C != st.model.bottleneck)
        throw std::invalid_argument("encode: latent has " + std::to_string(lat.C) +
                                    " channels, config bottleneck is " +
                                    std::to_string(st.model.bottleneck));
    if (static_cast<int64_t>(lat.symbols.size()) != lat.count())
        throw std::invalid_argument("encode: latent size mismatch");
    const int bound = st.symbol_bound;
    for (int16_t s : lat.symbols)
        if (s < -bound || s > bound)
            throw std::invalid_argument("encode: symbol " + std::to_string(s) +
                                        " overflows bound " + std::to_string(bound));

    const SequenceLayout lay = st.model.layout(lat.H, lat.W);
    const Tensor latent_f = detail::latent_to_tensor(lat);
    const ModelWeights weights = make_weights(st.model, st.model_seed);
    const Tensor hyper = hyper_features(st.hyper_seed, lat.H, lat.W, st.model.bottleneck);

    const Schedule sched = build_schedule(enumerate_windows(lay, st.model, st.mode), st.mode);
    EncodeResult res;
    res.params = compute_entropy_params(st.model, weights, hyper, lay, latent_f, sched, st.threads);
    res.windows_evaluated = sched.window_count();
    res.groups = static_cast<int64_t>(sched.groups.size());

    const Schedule wavefront =
        build_schedule(enumerate_windows(lay, st.model, ScheduleMode::Wavefront),
                       ScheduleMode::Wavefront);
    const std::vector<int64_t> order = bitstream_element_order(lay, wavefront);
    std::vector<int> coded_symbols(order.size());
    std::vector<CdfTable> tables(order.size());
    for (size_t idx = 0; idx < order.size(); ++idx) {
        const int64_t e = order[idx];
        tables[idx] = build_cdf(gmm_pmf_all(res.params, e, bound), -bound);
        coded_symbols[idx] = lat.symbols[static_cast<size_t>(e)];
    }
    const std::vector<uint8_t> payload = encode_symbols(coded_symbols, tables);
    res.estimate = estimate_rate(res.params, lat.symbols, bound);
    res.payload_bytes = static_cast<int64_t>(payload.size());

    CodecHeader header;
    header.H = lat.H;
    header.W = lat.W;
    header.model = st.model;
    header.symbol_bound = bound;
    header.model_seed = st.model_seed;
    header.hyper_seed = st.hyper_seed;
    header.payload_len = payload.size();
    ByteWriter bw;
    header.write(bw);
    bw.raw(payload);
    res.stream = std::move(bw.bytes);
    return res;
}

inline LatentSymbols decode_latent(std::span<const uint8_t> stream, int threads = 0) {
    ByteReader br(stream);
    const CodecHeader header = CodecHeader::parse(br);
    if (br.remaining() != header.payload_len)
        throw CorruptStreamError("stream: payload length " + std::to_string(br.remaining()) +
                                 " does not match header " + std::to_string(header.payload_len));
    const auto payload = br.raw(static_cast<size_t>(header.payload_len));

    const ModelConfig& cfg = header.model;
    const int bound = header.symbol_bound;
    const SequenceLayout lay = cfg.layout(header.H, header.W);
    const ModelWeights weights = make_weights(cfg, header.model_seed);
    const Tensor hyper = hyper_features(header.hyper_seed, header.H, header.W, cfg.bottleneck);
    const Schedule wavefront =
        build_schedule(enumerate_windows(lay, cfg, ScheduleMode::Wavefront), ScheduleMode::Wavefront);

    LatentSymbols out;
    out.H = header.H;
    out.W = header.W;
    out.C = cfg.bottleneck;
    out.symbols.assign(static_cast<size_t>(out.count()), 0);
    Tensor latent_f = Tensor::zeros({out.H, out.W, out.C});

    RangeDecoder dec(payload);
    const int pc = lay.pc();

    for (const PriorityGroup& group : wavefront.groups) {
        const size_t nw = group.windows.size();
        // per-window incremental runs; own_row[k] = output row serving segment k
        std::vector<SequenceRun> runs;
        runs.reserve(nw);
        std::vector<std::vector<int64_t>> own_row(nw);
        for (size_t wi = 0; wi < nw; ++wi) {
            const WindowSpec& spec = group.windows[wi];
            runs.emplace_back(cfg, weights);
            runs.back().append_start_token();
            own_row[wi].assign(static_cast<size_t>(lay.n_cs), spec.context_len());
            for (int64_t c = 0; c < spec.context_len(); ++c)
                if (spec.context[c].i == spec.target.i && spec.context[c].j == spec.target.j)
                    own_row[wi][static_cast<size_t>(spec.context[c].k)] = c;
        }
        std::vector<SegmentParams> seg(nw);
        for (int k = 0; k < lay.n_cs; ++k) {
            parallel_for(static_cast<int64_t>(nw), threads, [&](int64_t wi) {
                const WindowSpec& spec = group.windows[static_cast<size_t>(wi)];
                SequenceRun& run = runs[static_cast<size_t>(wi)];
                const int64_t t = own_row[static_cast<size_t>(wi)][static_cast<size_t>(k)];
                std::vector<float> buf(static_cast<size_t>(pc));
                while (run.rows() < t + 1) {
                    copy_segment(lay, latent_f, spec.context[run.rows() - 1], buf);
                    run.append(buf);
                }
                const auto hvec =
                    hyper.row(static_cast<int64_t>(spec.target.i) * lay.W + spec.target.j);
                seg[static_cast<size_t>(wi)] = entropy_head(weights.head, run.output(t), hvec, k, cfg);
            });
            for (size_t wi = 0; wi < nw; ++wi) {
                const WindowSpec& spec = group.windows[wi];
                const SegmentParams& sp = seg[wi];
                const int64_t base = (static_cast<int64_t>(spec.target.i) * lay.W + spec.target.j) *
                                         lay.C +
                                     static_cast<int64_t>(k) * pc;
                for (int c = 0; c < pc; ++c) {
                    const std::span<const float> w_c{sp.w.data() + static_cast<size_t>(c) * sp.km,
                                                     static_cast<size_t>(sp.km)};
                    const std::span<const float> mu_c{sp.mu.data() + static_cast<size_t>(c) * sp.km,
                                                      static_cast<size_t>(sp.km)};
                    const std::span<const float> sg_c{
                        sp.sigma.data() + static_cast<size_t>(c) * sp.km, static_cast<size_t>(sp.km)};
                    const CdfTable table = build_cdf(gmm_pmf_all(w_c, mu_c, sg_c, bound), -bound);
                    const int sym = dec.decode_symbol(table);
                    out.symbols[static_cast<size_t>(base + c)] = static_cast<int16_t>(sym);
                    latent_f.data[static_cast<size_t>(base + c)] = static_cast<float>(sym);
                }
            }
        }
    }
    if (dec.consumed() != payload.size())
        throw CorruptStreamError("stream: " + std::to_string(payload.size() - dec.consumed()) +
                                 " unread payload bytes");
    return out;
}

// --- synthetic data -----------------------------------------------------------

// Quantized separable AR(1) Gaussian field: unit-variance innovations
// filtered along columns then rows with coefficient rho, per channel,
// rounded and clamped to [-bound, bound].
inline LatentSymbols gen_synthetic_latent(uint64_t seed, int h, int w, int c, double rho,
                                          int bound = 32) {
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("gen: correlation must be in [0, 1)");
    if (h < 1 || w < 1 || c < 1) throw std::invalid_argument("gen: dimensions must be >= 1");
    SeededRng rng(seed);
    LatentSymbols lat;
    lat.H = h;
    lat.W = w;
    lat.C = c;
    lat.symbols.resize(static_cast<size_t>(lat.count()));
    const double mix = std::sqrt(1.0 - rho * rho);
    std::vector<double> field(static_cast<size_t>(h) * w);
    for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const double e = rng.next_normal();
                const double left = (j == 0) ? e : rho * field[static_cast<size_t>(i) * w + j - 1] + mix * e;
                field[static_cast<size_t>(i) * w + j] = left;
            }
        for (int j = 0; j < w; ++j)
            for (int i = 1; i < h; ++i)
                field[static_cast<size_t>(i) * w + j] =
                    rho * field[static_cast<size_t>(i - 1) * w + j] +
                    mix * field[static_cast<size_t>(i) * w + j];
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                lat.symbols[(static_cast<size_t>(i) * w + j) * c + ch] =
                    quantize_scalar(static_cast<float>(field[static_cast<size_t>(i) * w + j]), bound);
    }
    return lat;
}

// --- whole-file helpers --------------------------------------------------------

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline LatentSymbols to_symbols(const LatentFileData& lat, int bound) {
    LatentSymbols s;
    s.H = lat.H;
    s.W = lat.W;
    s.C = lat.C;
    if (lat.is_float) {
        Tensor t({lat.H, lat.W, lat.C}, lat.floats);
        s.symbols = quantize(t, bound);
    } else {
        s.symbols = lat.ints;
    }
    return s;
}

}  // namespace scc
