#pragma once

// Minimal dense float32 tensor kernel. Every reduction runs in a fixed
// ascending order so results are bit-reproducible across runs, thread
// counts and batching strategies; the codec's scheduler-equivalence
// guarantees rest on this.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scc {

using Shape = std::vector<int64_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

struct Tensor {
    Shape shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel() != static_cast<int64_t>(data.size()))
            throw std::invalid_argument("tensor: shape " + shape_str(shape) +
                                        " does not match data length " + std::to_string(data.size()));
        for (int64_t dim : shape)
            if (dim < 1) throw std::invalid_argument("tensor: dimension < 1 in " + shape_str(shape));
    }

    static Tensor zeros(Shape s) {
        int64_t n = 1;
        for (int64_t dim : s) n *= dim;
        return Tensor(std::move(s), std::vector<float>(static_cast<size_t>(n), 0.0f));
    }

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t dim : shape) n *= dim;
        return shape.empty() ? 0 : n;
    }
    int64_t dim(size_t i) const { return shape.at(i); }
    size_t rank() const { return shape.size(); }

    // trailing-dimension row view for rank >= 1
    int64_t last_dim() const { return shape.back(); }
    int64_t rows() const { return numel() / last_dim(); }
    std::span<float> row(int64_t r) {
        return std::span<float>(data.data() + r * last_dim(), static_cast<size_t>(last_dim()));
    }
    std::span<const float> row(int64_t r) const {
        return std::span<const float>(data.data() + r * last_dim(), static_cast<size_t>(last_dim()));
    }

    float& at2(int64_t i, int64_t j) { return data[i * shape[1] + j]; }
    float at2(int64_t i, int64_t j) const { return data[i * shape[1] + j]; }

    bool same_bits(const Tensor& o) const {
        if (shape != o.shape) return false;
        for (size_t i = 0; i < data.size(); ++i)
            if (std::bit_cast<uint32_t>(data[i]) != std::bit_cast<uint32_t>(o.data[i])) return false;
        return true;
    }
};

struct LinearParams {
    Tensor weight;  // [in_dim x out_dim], row-major
    Tensor bias;    // [out_dim]

    LinearParams() = default;
    LinearParams(Tensor w, Tensor b) : weight(std::move(w)), bias(std::move(b)) {
        if (weight.rank() != 2 || bias.rank() != 1 || weight.dim(1) != bias.dim(0))
            throw std::invalid_argument("linear: weight " + shape_str(weight.shape) +
                                        " incompatible with bias " + shape_str(bias.shape));
    }
    int64_t in_dim() const { return weight.dim(0); }
    int64_t out_dim() const { return weight.dim(1); }
};

// Deterministic PRNG: splitmix64 stream, pseudo-normal draws via the
// Irwin-Hall sum of 12 uniforms (mean 0, variance exactly 1). Only
// IEEE adds/multiplies are involved, so the stream is identical on
// every conforming platform. Pinned as algorithm "splitmix64-ih12/1".
struct SeededRng {
    static constexpr const char* kAlgorithm = "splitmix64-ih12/1";
    uint64_t state = 0;

    explicit SeededRng(uint64_t seed) : state(seed) {}

    uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    // uniform in [0, 1), 53 significant bits
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double next_normal() {
        double acc = 0.0;
        for (int i = 0; i < 12; ++i) acc += next_unit();
        return acc - 6.0;
    }
};

// --- row kernels -----------------------------------------------------------
// These are the only reduction primitives the model uses. Both the batch
// forward pass and the incremental decoder path call them, which is what
// makes the two paths bit-identical.

// dst[o] = bias[o] + sum_i x[i] * W[i][o], i ascending
inline void linear_row(std::span<const float> x, const LinearParams& p, std::span<float> dst) {
    const int64_t in = p.in_dim(), out = p.out_dim();
    const float* w = p.weight.data.data();
    for (int64_t o = 0; o < out; ++o) dst[o] = p.bias.data[o];
    for (int64_t i = 0; i < in; ++i) {
        const float xi = x[i];
        const float* wrow = w + i * out;
        for (int64_t o = 0; o < out; ++o) dst[o] += xi * wrow[o];
    }
}

inline void layer_norm_row(std::span<const float> x, std::span<const float> gain,
                           std::span<const float> shift, float eps, std::span<float> dst) {
    const int64_t d = static_cast<int64_t>(x.size());
    float mean = 0.0f;
    for (int64_t i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (int64_t i = 0; i < d; ++i) {
        const float c = x[i] - mean;
        var += c * c;
    }
    var /= static_cast<float>(d);  // biased estimator
    const float denom = std::sqrt(var + eps);
    for (int64_t i = 0; i < d; ++i) dst[i] = (x[i] - mean) / denom * gain[i] + shift[i];
}

// x * Phi(x), exact Gaussian CDF via erfc, evaluated in double.
inline float gelu_scalar(float x) {
    const double xd = static_cast<double>(x);
    const double phi = 0.5 * std::erfc(-xd * 0.7071067811865476);  // 1/sqrt(2)
    return static_cast<float>(xd * phi);
}

// --- tensor ops ------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: shape mismatch " + shape_str(a.shape) + " * " +
                                    shape_str(b.shape));
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c = Tensor::zeros({m, n});
    // accumulation is ascending in t for every output element
    for (int64_t i = 0; i < m; ++i) {
        float* crow = c.data.data() + i * n;
        for (int64_t t = 0; t < k; ++t) {
            const float av = a.data[i * k + t];
            const float* brow = b.data.data() + t * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// Softmax over the last dimension. Masked positions (indices into the last
// dimension, shared by all rows) get probability exactly 0; logits are
// treated as -inf, so they never enter the max or the sum.
inline Tensor softmax_lastdim(const Tensor& x, std::span<const int64_t> masked = {}) {
    const int64_t d = x.last_dim();
    std::vector<bool> is_masked(static_cast<size_t>(d), false);
    for (int64_t idx : masked) {
        if (idx < 0 || idx >= d)
            throw std::invalid_argument("softmax: masked index " + std::to_string(idx) +
                                        " outside last dim " + std::to_string(d));
        is_masked[static_cast<size_t>(idx)] = true;
    }
    Tensor out = Tensor::zeros(x.shape);
    for (int64_t r = 0; r < x.rows(); ++r) {
        auto src = x.row(r);
        auto dst = out.row(r);
        float mx = -std::numeric_limits<float>::infinity();
        for (int64_t i = 0; i < d; ++i)
            if (!is_masked[i] && src[i] > mx) mx = src[i];
        if (mx == -std::numeric_limits<float>::infinity())
            throw std::invalid_argument("softmax: all positions masked in a row");
        float sum = 0.0f;
        for (int64_t i = 0; i < d; ++i) {
            if (is_masked[i]) {
                dst[i] = 0.0f;
            } else {
                dst[i] = std::exp(src[i] - mx);
                sum += dst[i];
            }
        }
        for (int64_t i = 0; i < d; ++i)
            if (!is_masked[i]) dst[i] /= sum;
    }
    return out;
}

inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, float eps) {
    const int64_t d = x.last_dim();
    if (gain.numel() != d || shift.numel() != d)
        throw std::invalid_argument("layer_norm: params " + shape_str(gain.shape) + "/" +
                                    shape_str(shift.shape) + " vs last dim " + std::to_string(d));
    if (eps <= 0.0f) throw std::invalid_argument("layer_norm: eps must be > 0");
    Tensor out = Tensor::zeros(x.shape);
    for (int64_t r = 0; r < x.rows(); ++r)
        layer_norm_row(x.row(r), gain.data, shift.data, eps, out.row(r));
    return out;
}

inline Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (float& v : out.data) v = gelu_scalar(v);
    return out;
}

inline Tensor linear_apply(const LinearParams& p, const Tensor& x) {
    if (x.last_dim() != p.in_dim())
        throw std::invalid_argument("linear: input " + shape_str(x.shape) + " vs weight " +
                                    shape_str(p.weight.shape));
    Shape out_shape = x.shape;
    out_shape.back() = p.out_dim();
    Tensor out = Tensor::zeros(out_shape);
    for (int64_t r = 0; r < x.rows(); ++r) linear_row(x.row(r), p, out.row(r));
    return out;
}

inline Tensor seeded_normal(SeededRng& rng, Shape shape, double scale) {
    if (scale <= 0.0) throw std::invalid_argument("seeded_normal: scale must be > 0");
    Tensor t = Tensor::zeros(std::move(shape));
    for (float& v : t.data) v = static_cast<float>(rng.next_normal() * scale);
    return t;
}

}  // namespace scc
