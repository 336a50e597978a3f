#pragma once

// Deterministic synthetic tensor families.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "rtucker/errors.hpp"
#include "rtucker/random.hpp"
#include "rtucker/tensor.hpp"

namespace rtucker {

using AnyTensor = std::variant<DenseTensor, SparseTensor>;

/// a_{i1..iN} = 1 / (i1 + ... + iN), 1-based indices.
inline DenseTensor gen_reciprocal_sum(const Dims& dims) {
    return DenseTensor::generate(dims, [](std::span<const std::size_t> idx) {
        double s = 0.0;
        for (std::size_t i : idx) s += static_cast<double>(i + 1);
        return 1.0 / s;
    });
}

/// b_{ijk} = 1 / ln(i + 2j + 3k), 1-based indices; the argument is at least 6.
inline DenseTensor gen_log_reciprocal(const Dims& dims) {
    if (dims.size() != 3) throw ShapeError("log-reciprocal family is defined for order 3 only");
    return DenseTensor::generate(dims, [](std::span<const std::size_t> idx) {
        const double arg = static_cast<double>(idx[0] + 1) + 2.0 * static_cast<double>(idx[1] + 1) +
                           3.0 * static_cast<double>(idx[2] + 1);
        return 1.0 / std::log(arg);
    });
}

// ---------------------------------------------------------------------------
// Sums of sparse outer products
// ---------------------------------------------------------------------------

/// (index, value) pairs of a sparse vector, increasing index.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// Sums outer products into a hash map keyed by linear offset.
class OuterAccumulator {
public:
    explicit OuterAccumulator(Dims dims) : dims_(std::move(dims)) { check_dims(dims_); }

    void add(double weight, const std::vector<SparseVector>& vectors) {
        if (vectors.size() != dims_.size()) throw ShapeError("need one vector per mode");
        for (std::size_t m = 0; m < dims_.size(); ++m)
            for (const auto& [i, v] : vectors[m])
                if (i >= dims_[m]) throw ShapeError("vector index out of range in mode " + std::to_string(m + 1));
        recurse(vectors, dims_.size(), 0, weight);
    }

    SparseTensor tensor() const {
        std::vector<std::pair<std::size_t, double>> items(map_.begin(), map_.end());
        return SparseTensor::from_offsets(dims_, std::move(items));
    }

private:
    // Highest mode outermost so the offset builds as sum_m i_m * stride_m.
    void recurse(const std::vector<SparseVector>& v, std::size_t m, std::size_t offset, double value) {
        if (m == 0) {
            map_[offset] += value;
            return;
        }
        std::size_t stride = 1;
        for (std::size_t k = 0; k + 1 < m; ++k) stride *= dims_[k];
        for (const auto& [i, x] : v[m - 1]) recurse(v, m - 1, offset + i * stride, value * x);
    }

    Dims dims_;
    std::unordered_map<std::size_t, double> map_;
};

/// Bernoulli(density) support with uniform(0, 1) values, like MATLAB sprand.
inline SparseVector sparse_uniform_vector(GaussianStream& stream, std::size_t length, double density) {
    SparseVector out;
    for (std::size_t i = 0; i < length; ++i) {
        const bool keep = stream.uniform() < density;
        const double value = stream.uniform();
        if (keep) out.emplace_back(i, value);
    }
    return out;
}

inline double sparse_outer_weight(std::size_t j) { return (j <= 10 ? 1000.0 : 1.0) / static_cast<double>(j); }

/// Default per-mode densities: 0.015, 0.025, 0.035, 0.045, ...
inline std::vector<double> default_densities(std::size_t order) {
    std::vector<double> d;
    for (std::size_t m = 0; m < order; ++m) d.push_back(0.015 + 0.01 * static_cast<double>(m));
    return d;
}

struct SparseOuterOptions {
    std::size_t first_term = 1;
    std::size_t last_term = 0;  // 0 means dims[0]
};

/// sum_j w_j x_j^(1) o ... o x_j^(N), w_j = 1000/j for j <= 10 and 1/j after,
/// j = 1..I with I = dims[0]. The vectors of term j come from their own
/// stream, so any term range is reproducible on its own.
inline SparseTensor gen_sparse_outer(const Dims& dims, std::vector<double> densities, std::uint64_t seed,
                                     const SparseOuterOptions& options = {}) {
    check_dims(dims);
    if (densities.empty()) densities = default_densities(dims.size());
    if (densities.size() != dims.size()) throw ShapeError("need one density per mode");
    for (double d : densities)
        if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("density must lie in (0, 1], got " + std::to_string(d));
    const std::size_t last = options.last_term == 0 ? dims[0] : options.last_term;
    OuterAccumulator acc(dims);
    for (std::size_t j = options.first_term; j <= last; ++j) {
        std::vector<SparseVector> vectors;
        for (std::size_t m = 0; m < dims.size(); ++m) {
            GaussianStream stream(seed, stream_id(StreamTag::gen_sparse_vector, j, m));
            vectors.push_back(sparse_uniform_vector(stream, dims[m], densities[m]));
        }
        acc.add(sparse_outer_weight(j), vectors);
    }
    return acc.tensor();
}

/// Exactly nnz distinct uniform coordinates with uniform(0, 1) values;
/// colliding coordinates are redrawn.
inline SparseTensor gen_random_sparse(const Dims& dims, std::size_t nnz, std::uint64_t seed) {
    check_dims(dims);
    const std::size_t total = num_elements(dims);
    if (nnz > total)
        throw ShapeError("nnz " + std::to_string(nnz) + " exceeds the " + std::to_string(total) + " entries of " +
                         dims_to_string(dims));
    GaussianStream stream(seed, stream_id(StreamTag::gen_sparse_coords));
    std::unordered_set<std::size_t> seen;
    std::vector<std::pair<std::size_t, double>> items;
    items.reserve(nnz);
    while (items.size() < nnz) {
        const std::size_t off = stream.below(total);
        if (!seen.insert(off).second) continue;
        items.emplace_back(off, stream.uniform());
    }
    return SparseTensor::from_offsets(dims, std::move(items));
}

// ---------------------------------------------------------------------------
// Tucker signal plus Gaussian noise
// ---------------------------------------------------------------------------

struct NoisySpec {
    Dims core_dims;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

struct NoisyTensor {
    DenseTensor tensor;
    double beta = 0.0;
};

/// C = G x_1 B_1 ... x_N B_N + beta N with standard normal G, B_n and N, and
/// beta = ||A|| / (||N|| 10^(snr/20)). An infinite SNR gives beta = 0.
inline NoisyTensor gen_tucker_noise(const NoisySpec& spec, const Dims& dims) {
    check_dims(dims);
    check_dims(spec.core_dims);
    if (spec.core_dims.size() != dims.size()) throw ShapeError("core order differs from tensor order");
    for (std::size_t n = 0; n < dims.size(); ++n)
        if (spec.core_dims[n] > dims[n])
            throw RankError("core dims " + dims_to_string(spec.core_dims) + " exceed tensor dims " + dims_to_string(dims));
    if (std::isnan(spec.snr_db)) throw std::invalid_argument("snr must be a number");

    const std::size_t order = dims.size();
    GaussianStream core_stream(spec.seed, stream_id(StreamTag::gen_factor, order));
    DenseTensor a = DenseTensor::generate(spec.core_dims, [&](auto) { return core_stream.normal(); });
    for (std::size_t n = 0; n < order; ++n)
        a = mode_product(a, n,
                         gaussian_matrix(spec.seed, stream_id(StreamTag::gen_factor, n), dims[n], spec.core_dims[n]));
    if (spec.snr_db == std::numeric_limits<double>::infinity()) return {std::move(a), 0.0};

    GaussianStream noise_stream(spec.seed, stream_id(StreamTag::gen_noise));
    const DenseTensor noise = DenseTensor::generate(dims, [&](auto) { return noise_stream.normal(); });
    const double beta = frob_norm(a) / (frob_norm(noise) * std::pow(10.0, spec.snr_db / 20.0));
    std::vector<double> values(a.values().begin(), a.values().end());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += beta * noise[i];
    return {DenseTensor(dims, std::move(values)), beta};
}

/// Exact multilinear rank: the noiseless Tucker family.
inline DenseTensor gen_exact_rank(const Dims& dims, const Dims& core_dims, std::uint64_t seed) {
    return gen_tucker_noise(NoisySpec{core_dims, std::numeric_limits<double>::infinity(), seed}, dims).tensor;
}

// ---------------------------------------------------------------------------
// Family registry
// ---------------------------------------------------------------------------

enum class Family { reciprocal_sum, log_reciprocal, sparse_outer, random_sparse, tucker_noise, exact_rank };

inline const std::vector<std::pair<Family, std::string>>& family_names() {
    static const std::vector<std::pair<Family, std::string>> names{
        {Family::reciprocal_sum, "reciprocal-sum"}, {Family::log_reciprocal, "log-reciprocal"},
        {Family::sparse_outer, "sparse-outer"},     {Family::random_sparse, "random-sparse"},
        {Family::tucker_noise, "tucker-noise"},     {Family::exact_rank, "exact-rank"},
    };
    return names;
}

inline std::string family_name(Family f) {
    for (const auto& [k, name] : family_names())
        if (k == f) return name;
    return "?";
}

inline std::string family_list() {
    std::string out;
    for (const auto& [k, name] : family_names()) out += (out.empty() ? "" : ", ") + name;
    return out;
}

inline Family parse_family(const std::string& name) {
    for (const auto& [k, n] : family_names())
        if (n == name) return k;
    throw std::invalid_argument("unknown family '" + name + "'; valid: " + family_list());
}

/// Parameters for generate_family. Empty or zero fields take family defaults:
/// densities 0.015 + 0.01 m, nnz = 1.25e-4 of the entries (at least 1),
/// core dims max(1, I_n / 4).
struct FamilyParams {
    Dims dims;
    std::uint64_t seed = 0;
    double snr_db = std::numeric_limits<double>::infinity();
    Dims core_dims;
    std::size_t nnz = 0;
    std::vector<double> densities;
};

inline Dims default_core_dims(const Dims& dims) {
    Dims c;
    for (std::size_t d : dims) c.push_back(std::max<std::size_t>(1, d / 4));
    return c;
}

inline std::size_t default_nnz(const Dims& dims) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.25e-4 * static_cast<double>(num_elements(dims)))));
}

inline bool is_sparse_family(Family f) { return f == Family::sparse_outer || f == Family::random_sparse; }

inline AnyTensor generate_family(Family f, const FamilyParams& p) {
    const Dims core = p.core_dims.empty() ? default_core_dims(p.dims) : p.core_dims;
    switch (f) {
        case Family::reciprocal_sum: return gen_reciprocal_sum(p.dims);
        case Family::log_reciprocal: return gen_log_reciprocal(p.dims);
        case Family::sparse_outer: return gen_sparse_outer(p.dims, p.densities, p.seed);
        case Family::random_sparse: return gen_random_sparse(p.dims, p.nnz == 0 ? default_nnz(p.dims) : p.nnz, p.seed);
        case Family::tucker_noise: return gen_tucker_noise(NoisySpec{core, p.snr_db, p.seed}, p.dims).tensor;
        case Family::exact_rank: return gen_exact_rank(p.dims, core, p.seed);
    }
    throw std::invalid_argument("unknown family");
}

inline double norm_of(const AnyTensor& t) {
    return std::visit([](const auto& x) { return frob_norm(x); }, t);
}

inline const Dims& dims_of(const AnyTensor& t) {
    return std::visit([](const auto& x) -> const Dims& { return x.dims(); }, t);
}

}  // namespace rtucker
