#pragma once

// Reproducible Gaussian variates.
//
// A stream is identified by (seed, stream id). Its uniform source is
// std::mt19937_64 seeded through std::seed_seq with the four 32-bit words
// {seed_lo, seed_hi, id_lo, id_hi}; both algorithms are fixed by the C++
// standard, so the raw bit sequence is identical on every conforming
// platform. Uniforms are u = ((x >> 11) + 0.5) * 2^-53, which lies strictly
// inside (0, 1). Normals come from Box-Muller on consecutive pairs (u1, u2):
//   z1 = sqrt(-2 ln u1) cos(2 pi u2),  z2 = sqrt(-2 ln u1) sin(2 pi u2),
// emitted z1 first.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

#include "rtucker/tensor.hpp"

namespace rtucker {

/// Purpose tags folded into stream ids so unrelated draws never share a stream.
enum class StreamTag : std::uint64_t {
    tucker_sketch = 1,  // G_{n,m}: (n, m)
    khatri_rao = 2,     // per-mode Omega'_m for mode n: (n, m)
    full_gaussian = 3,  // dense Omega for mode n: (n, 0)
    hooi_init = 4,      // initial factor for mode n: (n, 0)
    gen_factor = 16,    // testgen Tucker factors: (n, 0); core uses (N, 0)
    gen_noise = 17,
    gen_sparse_vector = 18,  // (term j, mode)
    gen_sparse_coords = 19,
};

/// Stream id layout: tag in bits 48..63, a in bits 24..47, b in bits 0..23.
constexpr std::uint64_t stream_id(StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0) {
    return (static_cast<std::uint64_t>(tag) << 48) | ((a & 0xFFFFFFu) << 24) | (b & 0xFFFFFFu);
}

class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t id) : seed_(seed), id_(id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t id() const noexcept { return id_; }

    /// Uniform variate in (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

    /// Standard normal variate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Raw 64-bit word, for integer sampling.
    std::uint64_t bits() { return engine_(); }

    /// Uniform integer in [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t seed_;
    std::uint64_t id_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// rows x cols matrix of standard normals, filled in row-major order.
inline Matrix gaussian_matrix(GaussianStream& stream, std::size_t rows, std::size_t cols) {
    Matrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = stream.normal();
    return g;
}

inline Matrix gaussian_matrix(std::uint64_t seed, std::uint64_t id, std::size_t rows, std::size_t cols) {
    GaussianStream stream(seed, id);
    return gaussian_matrix(stream, rows, cols);
}

}  // namespace rtucker
