#pragma once

// Scheduling benchmark: per mode and latent size, the number of window
// evaluations, priority groups, largest group and wall time. Encoder rows
// time encode_latent under that schedule; the wavefront row times a decode.

#include <chrono>
#include <sstream>
#include <string>
#include <vector>

#include "scc/codec.hpp"

namespace scc {

struct LatentSize {
    int H = 0, W = 0, C = 0;
};

struct BenchRow {
    std::string mode;
    int H = 0, W = 0, C = 0, n_cs = 0;
    int64_t windows = 0, groups = 0, max_group = 0;
    double wall_ms = 0.0;
};

inline std::vector<BenchRow> run_bench(const ModelConfig& cfg, const std::vector<LatentSize>& sizes,
                                       const std::vector<ScheduleMode>& modes, int threads,
                                       int symbol_bound = 32, uint64_t data_seed = 7) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    for (const LatentSize& sz : sizes) {
        if (sz.C != cfg.bottleneck)
            throw std::invalid_argument("bench: size channels must equal config bottleneck");
        const LatentSymbols lat = gen_synthetic_latent(data_seed, sz.H, sz.W, sz.C, 0.5, symbol_bound);
        const SequenceLayout lay = cfg.layout(sz.H, sz.W);
        std::vector<uint8_t> stream;  // produced lazily for the wavefront row
        for (ScheduleMode mode : modes) {
            BenchRow row;
            row.mode = schedule_mode_name(mode);
            row.H = sz.H;
            row.W = sz.W;
            row.C = sz.C;
            row.n_cs = cfg.channel_segments;
            const Schedule sched = build_schedule(enumerate_windows(lay, cfg, mode), mode);
            row.windows = sched.window_count();
            row.groups = static_cast<int64_t>(sched.groups.size());
            row.max_group = sched.max_group_size();
            if (is_encoder_mode(mode)) {
                CodecSettings st;
                st.model = cfg;
                st.symbol_bound = symbol_bound;
                st.mode = mode;
                st.threads = threads;
                const auto t0 = clock::now();
                EncodeResult r = encode_latent(lat, st);
                const auto t1 = clock::now();
                row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                if (stream.empty()) stream = std::move(r.stream);
            } else {
                if (stream.empty()) {
                    CodecSettings st;
                    st.model = cfg;
                    st.symbol_bound = symbol_bound;
                    st.mode = ScheduleMode::BdsScs;
                    st.threads = threads;
                    stream = encode_latent(lat, st).stream;
                }
                const auto t0 = clock::now();
                (void)decode_latent(stream, threads);
                const auto t1 = clock::now();
                row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "mode,H,W,C,N_cs,windows,groups,max_group,wall_ms\n";
    for (const BenchRow& r : rows)
        os << r.mode << "," << r.H << "," << r.W << "," << r.C << "," << r.n_cs << "," << r.windows
           << "," << r.groups << "," << r.max_group << "," << r.wall_ms << "\n";
    return os.str();
}

}  // namespace scc
