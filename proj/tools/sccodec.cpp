// Command-line front end: synthetic latent generation, encode, decode,
// scheduling benchmark and self test.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "scc/bench.hpp"
#include "scc/codec.hpp"
#include "scc/config_json.hpp"
#include "scc/selftest.hpp"

namespace {

scc::ScheduleMode parse_mode(const std::string& s) {
    if (s == "ds") return scc::ScheduleMode::DS;
    if (s == "pb") return scc::ScheduleMode::PadBatch;
    if (s == "bds") return scc::ScheduleMode::BDS;
    if (s == "bds-scs") return scc::ScheduleMode::BdsScs;
    if (s == "wavefront") return scc::ScheduleMode::Wavefront;
    throw CLI::ValidationError("mode", "expected ds|pb|bds|bds-scs, got '" + s + "'");
}

std::vector<scc::LatentSize> parse_sizes(const std::string& list) {
    std::vector<scc::LatentSize> sizes;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        scc::LatentSize sz;
        if (std::sscanf(item.c_str(), "%dx%dx%d", &sz.H, &sz.W, &sz.C) != 3)
            throw CLI::ValidationError("sizes", "expected HxWxC entries, got '" + item + "'");
        sizes.push_back(sz);
    }
    return sizes;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatio-channel autoregressive latent codec"};
    app.require_subcommand(1);

    std::string config_path, mode_str = "bds-scs", out_path, in_path;
    uint64_t seed = 1, hyper_seed = 1;
    int threads = 0;

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic quantized latent");
    int gh = 16, gw = 16, gc = 8;
    double rho = 0.5;
    uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--height", gh, "latent height")->required();
    gen->add_option("--width", gw, "latent width")->required();
    gen->add_option("--channels", gc, "latent channels")->required();
    gen->add_option("--rho", rho, "spatial AR(1) correlation in [0,1)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output latent file")->required();
    int gen_bound = 32;
    gen->add_option("--bound", gen_bound, "symbol bound B");

    // encode
    auto* enc = app.add_subcommand("encode", "encode a latent file into a bitstream");
    enc->add_option("latent", in_path, "input latent file")->required();
    enc->add_option("--config", config_path, "model config JSON");
    enc->add_option("--mode", mode_str, "encoder schedule: ds|pb|bds|bds-scs");
    enc->add_option("--seed", seed, "model weight seed");
    enc->add_option("--hyper-seed", hyper_seed, "hyper feature seed (0 = zero hyper)");
    enc->add_option("--threads", threads, "worker threads (0 = auto)");
    enc->add_option("--out", out_path, "output bitstream file")->required();

    // decode
    auto* dec = app.add_subcommand("decode", "decode a bitstream back to a latent file");
    std::string dec_in, dec_out;
    int dec_threads = 0;
    dec->add_option("stream", dec_in, "input bitstream file")->required();
    dec->add_option("--threads", dec_threads, "worker threads (0 = auto)");
    dec->add_option("--out", dec_out, "output latent file")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "time the scheduling strategies");
    std::string sizes_str = "16x16x8", modes_str = "ds,pb,bds,bds-scs,wavefront", bench_out;
    bench->add_option("--config", config_path, "model config JSON");
    bench->add_option("--sizes", sizes_str, "comma list of HxWxC latent sizes");
    bench->add_option("--modes", modes_str, "comma list of schedule modes");
    bench->add_option("--threads", threads, "worker threads (0 = auto)");
    bench->add_option("--out", bench_out, "write CSV here instead of stdout");

    // selftest
    auto* self = app.add_subcommand("selftest", "run the invariant suite at toy scale");
    self->add_option("--threads", threads, "worker threads (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const scc::LatentSymbols lat =
                scc::gen_synthetic_latent(gen_seed, gh, gw, gc, rho, gen_bound);
            scc::LatentFileData file;
            file.H = lat.H;
            file.W = lat.W;
            file.C = lat.C;
            file.ints = lat.symbols;
            scc::write_file(gen_out, scc::write_latent_bytes(file));
            std::cout << "wrote " << gen_out << " (" << gh << "x" << gw << "x" << gc << ")\n";
        } else if (enc->parsed()) {
            scc::CodecSettings st;
            st.model = scc::ModelConfig::toy();
            if (!config_path.empty()) scc::load_config_file(config_path, st.model, &st.symbol_bound);
            st.mode = parse_mode(mode_str);
            st.model_seed = seed;
            st.hyper_seed = hyper_seed;
            st.threads = threads;
            const scc::LatentFileData file = scc::read_latent_bytes(scc::read_file(in_path));
            const scc::LatentSymbols lat = scc::to_symbols(file, st.symbol_bound);
            const scc::EncodeResult r = scc::encode_latent(lat, st);
            scc::write_file(out_path, r.stream);
            const double payload_bits = 8.0 * static_cast<double>(r.payload_bytes);
            std::cout << "wrote " << out_path << ": " << r.stream.size() << " bytes ("
                      << r.payload_bytes << " payload), estimate " << r.estimate.total_bits
                      << " bits, actual " << payload_bits << " bits, "
                      << r.estimate.bits_per_element << " bits/element, windows "
                      << r.windows_evaluated << ", groups " << r.groups << "\n";
        } else if (dec->parsed()) {
            const scc::LatentSymbols lat = scc::decode_latent(scc::read_file(dec_in), dec_threads);
            scc::LatentFileData file;
            file.H = lat.H;
            file.W = lat.W;
            file.C = lat.C;
            file.ints = lat.symbols;
            scc::write_file(dec_out, scc::write_latent_bytes(file));
            std::cout << "wrote " << dec_out << " (" << lat.H << "x" << lat.W << "x" << lat.C
                      << ")\n";
        } else if (bench->parsed()) {
            scc::ModelConfig cfg = scc::ModelConfig::toy();
            int bound = 32;
            if (!config_path.empty()) scc::load_config_file(config_path, cfg, &bound);
            std::vector<scc::ScheduleMode> modes;
            std::stringstream ms(modes_str);
            std::string item;
            while (std::getline(ms, item, ',')) modes.push_back(parse_mode(item));
            const auto rows = scc::run_bench(cfg, parse_sizes(sizes_str), modes, threads, bound);
            const std::string csv = scc::bench_csv(rows);
            if (bench_out.empty()) {
                std::cout << csv;
            } else {
                scc::write_file(bench_out, {reinterpret_cast<const uint8_t*>(csv.data()), csv.size()});
                std::cout << "wrote " << bench_out << "\n";
            }
        } else if (self->parsed()) {
            const auto results = scc::run_selftest(threads);
            bool all = true;
            for (const auto& r : results) {
                std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
                all = all && r.pass;
            }
            std::cout << (all ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
