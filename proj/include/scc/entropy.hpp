#pragma once

// Gaussian-mixture entropy model: the three-layer head mapping
// [context feature ‖ hyper vector] to per-channel mixture parameters,
// the discretized mixture pmf, and rate estimation.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scc/config.hpp"
#include "scc/tensor.hpp"

namespace scc {

inline constexpr float kSigmaMin = 1e-3f;
inline constexpr float kSigmaMax = 64.0f;

struct EntropyHeadParams {
    LinearParams fc1, fc2, fc3;
};

// Hidden widths interpolate between K1 and K2; integer division pins the
// rounding.
inline std::pair<int, int> entropy_head_widths(int k1, int k2) {
    return {(2 * k1 + k2) / 3, (k1 + 2 * k2) / 3};
}

inline EntropyHeadParams make_entropy_head(int k1, int k2, SeededRng& rng, double init_std) {
    auto [w1, w2] = entropy_head_widths(k1, k2);
    EntropyHeadParams head;
    head.fc1 = LinearParams(seeded_normal(rng, {k1, w1}, init_std), Tensor::zeros({w1}));
    head.fc2 = LinearParams(seeded_normal(rng, {w1, w2}, init_std), Tensor::zeros({w2}));
    head.fc3 = LinearParams(seeded_normal(rng, {w2, k2}, init_std), Tensor::zeros({k2}));
    return head;
}

// Deterministic stand-in for the hyperdecoder output: an [H x W x 2M]
// pseudo-normal tensor keyed by the stream header's hyper seed. Seed 0 is
// the sentinel for the all-zero (context-only) ablation mode.
inline Tensor hyper_features(uint64_t seed, int h, int w, int m) {
    if (seed == 0) return Tensor::zeros({h, w, 2 * m});
    SeededRng rng(seed);
    return seeded_normal(rng, {h, w, 2 * m}, 1.0);
}

// Mixture parameters for every latent element (i, j, c), element-major in
// raster/channel order: index = (i*W + j)*C + c.
struct GmmField {
    int km = 0;
    int64_t count = 0;  // H*W*C
    std::vector<float> w, mu, sigma;  // each count*km

    static GmmField zeros(int64_t count, int km) {
        GmmField f;
        f.km = km;
        f.count = count;
        f.w.assign(static_cast<size_t>(count * km), 0.0f);
        f.mu.assign(static_cast<size_t>(count * km), 0.0f);
        f.sigma.assign(static_cast<size_t>(count * km), 0.0f);
        return f;
    }
    std::span<const float> w_at(int64_t e) const { return {w.data() + e * km, static_cast<size_t>(km)}; }
    std::span<const float> mu_at(int64_t e) const { return {mu.data() + e * km, static_cast<size_t>(km)}; }
    std::span<const float> sigma_at(int64_t e) const { return {sigma.data() + e * km, static_cast<size_t>(km)}; }

    bool same_bits(const GmmField& o) const {
        if (km != o.km || count != o.count) return false;
        auto eq = [](const std::vector<float>& a, const std::vector<float>& b) {
            for (size_t i = 0; i < a.size(); ++i)
                if (std::bit_cast<uint32_t>(a[i]) != std::bit_cast<uint32_t>(b[i])) return false;
            return true;
        };
        return eq(w, o.w) && eq(mu, o.mu) && eq(sigma, o.sigma);
    }
};

// Mixture parameters for the p_c channels of one segment at one position.
struct SegmentParams {
    int pc = 0, km = 0;
    std::vector<float> w, mu, sigma;  // pc*km each, channel-major
};

namespace detail {
inline void check_finite(std::span<const float> v, int layer_index) {
    for (float x : v)
        if (!std::isfinite(x))
            throw std::runtime_error("entropy head: non-finite activation after layer " +
                                     std::to_string(layer_index));
}
}  // namespace detail

// Head output layout: per channel, k_m raw mixture weights, k_m means,
// k_m raw scales. Weights go through a softmax over components, scales
// through exp with clamping to [kSigmaMin, kSigmaMax]. One head is shared
// by all segments; `segment` only selects which channels the result is for.
inline SegmentParams entropy_head(const EntropyHeadParams& head, std::span<const float> ctx_feature,
                                  std::span<const float> hyper_vec, int segment,
                                  const ModelConfig& cfg) {
    if (static_cast<int>(ctx_feature.size()) != cfg.embed_dim ||
        static_cast<int>(hyper_vec.size()) != 2 * cfg.bottleneck)
        throw std::invalid_argument("entropy_head: feature sizes do not match config");
    if (segment < 0 || segment >= cfg.channel_segments)
        throw std::invalid_argument("entropy_head: segment index out of range");

    const int k1 = cfg.k1();
    std::vector<float> input(static_cast<size_t>(k1));
    std::copy(ctx_feature.begin(), ctx_feature.end(), input.begin());
    std::copy(hyper_vec.begin(), hyper_vec.end(), input.begin() + ctx_feature.size());

    std::vector<float> h1(static_cast<size_t>(head.fc1.out_dim()));
    linear_row(input, head.fc1, h1);
    for (float& v : h1) v = gelu_scalar(v);
    detail::check_finite(h1, 1);

    std::vector<float> h2(static_cast<size_t>(head.fc2.out_dim()));
    linear_row(h1, head.fc2, h2);
    for (float& v : h2) v = gelu_scalar(v);
    detail::check_finite(h2, 2);

    std::vector<float> raw(static_cast<size_t>(head.fc3.out_dim()));
    linear_row(h2, head.fc3, raw);
    detail::check_finite(raw, 3);

    const int pc = cfg.pc(), km = cfg.mixture_components;
    SegmentParams out;
    out.pc = pc;
    out.km = km;
    out.w.resize(static_cast<size_t>(pc * km));
    out.mu.resize(static_cast<size_t>(pc * km));
    out.sigma.resize(static_cast<size_t>(pc * km));
    for (int c = 0; c < pc; ++c) {
        const float* block = raw.data() + static_cast<size_t>(c) * 3 * km;
        float mx = block[0];
        for (int q = 1; q < km; ++q) mx = std::max(mx, block[q]);
        float sum = 0.0f;
        for (int q = 0; q < km; ++q) {
            out.w[c * km + q] = std::exp(block[q] - mx);
            sum += out.w[c * km + q];
        }
        for (int q = 0; q < km; ++q) out.w[c * km + q] /= sum;
        for (int q = 0; q < km; ++q) out.mu[c * km + q] = block[km + q];
        for (int q = 0; q < km; ++q) {
            float s = std::exp(block[2 * km + q]);
            out.sigma[c * km + q] = std::min(std::max(s, kSigmaMin), kSigmaMax);
        }
    }
    return out;
}

// --- discretized mixture ----------------------------------------------------

// Gaussian CDF, branch chosen for tail accuracy.
inline double gaussian_cdf(double z) {
    constexpr double inv_sqrt2 = 0.7071067811865476;
    if (z <= 0.0) return 0.5 * std::erfc(-z * inv_sqrt2);
    return 1.0 - 0.5 * std::erfc(z * inv_sqrt2);
}

// p(s) for the k_m-component mixture, integer bins of width 1 centered on s,
// with the open tails folded into the boundary symbols -B and +B so the pmf
// over [-B, B] sums to the total mixture weight.
inline double gmm_pmf(std::span<const float> w, std::span<const float> mu,
                      std::span<const float> sigma, int symbol, int bound) {
    if (symbol < -bound || symbol > bound)
        throw std::out_of_range("gmm_pmf: symbol " + std::to_string(symbol) + " outside [-" +
                                std::to_string(bound) + "," + std::to_string(bound) + "]");
    double p = 0.0;
    for (size_t q = 0; q < w.size(); ++q) {
        const double m = mu[q], s = sigma[q];
        const double hi = (symbol == bound) ? 1.0 : gaussian_cdf((symbol + 0.5 - m) / s);
        const double lo = (symbol == -bound) ? 0.0 : gaussian_cdf((symbol - 0.5 - m) / s);
        p += static_cast<double>(w[q]) * (hi - lo);
    }
    return p;
}

// Full pmf over [-B..B]. Boundary CDF values are computed once per component
// so the sum telescopes to exactly the component weights.
inline std::vector<double> gmm_pmf_all(std::span<const float> w, std::span<const float> mu,
                                       std::span<const float> sigma, int bound) {
    const int n = 2 * bound + 1;
    std::vector<double> pmf(static_cast<size_t>(n), 0.0);
    std::vector<double> cdf(static_cast<size_t>(n) + 1);
    for (size_t q = 0; q < w.size(); ++q) {
        const double m = mu[q], s = sigma[q];
        cdf[0] = 0.0;
        cdf[n] = 1.0;
        for (int b = 1; b < n; ++b) cdf[b] = gaussian_cdf((-bound + b - 0.5 - m) / s);
        for (int b = 0; b < n; ++b) pmf[b] += static_cast<double>(w[q]) * (cdf[b + 1] - cdf[b]);
    }
    return pmf;
}

inline std::vector<double> gmm_pmf_all(const GmmField& field, int64_t element, int bound) {
    return gmm_pmf_all(field.w_at(element), field.mu_at(element), field.sigma_at(element), bound);
}

struct RateEstimate {
    double total_bits = 0.0;
    double bits_per_element = 0.0;
};

// The coder quantizes every pmf to 16-bit frequencies with a floor of one
// count, so no coded symbol ever costs more than 16 bits. The estimate
// applies the same guard; deep-tail symbols whose model probability
// underflows are charged the floor, matching what the coder will do.
inline constexpr double kPmfFloor = 0x1p-16;

// Negative log2 likelihood of the symbols under the model — the ideal rate.
inline RateEstimate estimate_rate(const GmmField& field, std::span<const int16_t> symbols,
                                  int bound) {
    if (static_cast<int64_t>(symbols.size()) != field.count)
        throw std::invalid_argument("estimate_rate: symbol count does not match parameter field");
    double total = 0.0;
    for (int64_t e = 0; e < field.count; ++e) {
        const double p = gmm_pmf(field.w_at(e), field.mu_at(e), field.sigma_at(e), symbols[e], bound);
        if (!(p >= 0.0))
            throw std::runtime_error("estimate_rate: invalid probability for symbol " +
                                     std::to_string(symbols[e]) + " at element " + std::to_string(e));
        total -= std::log2(std::max(p, kPmfFloor));
    }
    RateEstimate r;
    r.total_bits = total;
    r.bits_per_element = field.count > 0 ? total / static_cast<double>(field.count) : 0.0;
    return r;
}

// Round half away from zero, clamp to [-B, B].
inline int16_t quantize_scalar(float x, int bound) {
    const float r = std::round(x);
    const float b = static_cast<float>(bound);
    return static_cast<int16_t>(std::min(std::max(r, -b), b));
}

inline std::vector<int16_t> quantize(const Tensor& latent_real, int bound) {
    for (float v : latent_real.data)
        if (!std::isfinite(v)) throw std::invalid_argument("quantize: non-finite input");
    std::vector<int16_t> out(latent_real.data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = quantize_scalar(latent_real.data[i], bound);
    return out;
}

}  // namespace scc
