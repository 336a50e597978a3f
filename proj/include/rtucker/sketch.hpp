#pragma once

// Sketch plans and the three ways of compressing a mode-n unfolding:
// Kronecker-structured mode products (Tucker-SVD), a Khatri-Rao product of
// per-mode Gaussians, and a single dense Gaussian.
//
// Stream assignment (all seeded by the plan seed):
//   G_{n,m}          stream_id(tucker_sketch, n, m)   L_{n,m} x (current I_m)
//   Omega'_m for n   stream_id(khatri_rao,    n, m)   I_m x L'
//   Omega for n      stream_id(full_gaussian, n, 0)   (prod_{k!=n} I_k) x L'
// with 0-based modes n, m. Each matrix is filled row-major from its stream.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rtucker/errors.hpp"
#include "rtucker/random.hpp"
#include "rtucker/tensor.hpp"

namespace rtucker {

struct SketchPlan {
    std::vector<std::size_t> target_rank;
    std::size_t oversampling = 0;
    /// sketch_dims[n][m] = L_{n,m} for m != n; the diagonal entry is unused (0).
    std::vector<std::vector<std::size_t>> sketch_dims;
    /// Processing order for the sequential algorithm, 0-based modes.
    std::vector<std::size_t> order;
    std::uint64_t seed = 0;

    std::size_t order_n() const { return target_rank.size(); }

    /// prod_{m != n} L_{n,m}
    std::size_t sketch_width(std::size_t n) const {
        std::size_t w = 1;
        for (std::size_t m = 0; m < sketch_dims.at(n).size(); ++m)
            if (m != n) w *= sketch_dims[n][m];
        return w;
    }
};

/// Modes sorted by non-increasing extent, ties broken by lower index.
inline std::vector<std::size_t> default_processing_order(const Dims& dims) {
    std::vector<std::size_t> p(dims.size());
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::stable_sort(p.begin(), p.end(), [&](std::size_t a, std::size_t b) { return dims[a] > dims[b]; });
    return p;
}

inline void check_target_rank(const Dims& dims, const std::vector<std::size_t>& rank) {
    if (rank.size() != dims.size())
        throw ShapeError("target rank has " + std::to_string(rank.size()) + " entries for an order-" +
                         std::to_string(dims.size()) + " tensor");
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (rank[n] == 0) throw RankError("target rank for mode " + std::to_string(n + 1) + " must be positive");
        if (rank[n] > dims[n])
            throw RankError("target rank " + std::to_string(rank[n]) + " exceeds mode " + std::to_string(n + 1) +
                            " extent " + std::to_string(dims[n]));
    }
}

/// Sampling size M = max(mu + K, (1 + 1/ln mu) mu); M = mu + K when mu <= 1.
inline double sampling_size(std::size_t mu, std::size_t k) {
    const double base = static_cast<double>(mu + k);
    if (mu <= 1) return base;
    const double m = static_cast<double>(mu);
    return std::max(base, (1.0 + 1.0 / std::log(m)) * m);
}

/// Per-mode sketch sizes for the N - 1 other modes, in increasing mode order.
/// N = 3 uses (ceil(sqrt M), round(sqrt M)); other orders use ceil(M^(1/(N-1)))
/// for every factor. The last factor is then raised until the product reaches
/// mu + K.
inline std::vector<std::size_t> default_sketch_factors(std::size_t order, std::size_t mu, std::size_t k) {
    if (order < 2) throw ShapeError("sketch plans need tensors of order at least 2");
    const std::size_t count = order - 1;
    const double m = sampling_size(mu, k);
    std::vector<std::size_t> f(count);
    if (count == 2) {
        f[0] = static_cast<std::size_t>(std::ceil(std::sqrt(m)));
        f[1] = static_cast<std::size_t>(std::round(std::sqrt(m)));
    } else {
        const auto c = static_cast<std::size_t>(std::ceil(std::pow(m, 1.0 / static_cast<double>(count)) - 1e-12));
        std::fill(f.begin(), f.end(), c);
    }
    for (auto& x : f) x = std::max<std::size_t>(x, 1);
    auto product = [&] { return std::accumulate(f.begin(), f.end(), std::size_t{1}, std::multiplies<>{}); };
    while (product() < mu + k) ++f.back();
    return f;
}

inline SketchPlan default_plan(const Dims& dims, const std::vector<std::size_t>& target_rank, std::size_t k,
                               std::uint64_t seed = 0) {
    check_dims(dims);
    check_target_rank(dims, target_rank);
    const std::size_t order = dims.size();
    SketchPlan plan;
    plan.target_rank = target_rank;
    plan.oversampling = k;
    plan.seed = seed;
    plan.order = default_processing_order(dims);
    plan.sketch_dims.assign(order, std::vector<std::size_t>(order, 0));
    for (std::size_t n = 0; n < order; ++n) {
        const auto f = default_sketch_factors(order, target_rank[n], k);
        std::size_t i = 0;
        for (std::size_t m = 0; m < order; ++m)
            if (m != n) plan.sketch_dims[n][m] = f[i++];
    }
    return plan;
}

/// Throws if the plan cannot drive a decomposition of a tensor with `dims`.
inline void validate_plan(const SketchPlan& plan, const Dims& dims) {
    const std::size_t order = dims.size();
    check_target_rank(dims, plan.target_rank);
    if (plan.sketch_dims.size() != order) throw ShapeError("sketch plan order does not match tensor order");
    std::vector<bool> seen(order, false);
    if (plan.order.size() != order) throw ShapeError("processing order must list every mode once");
    for (std::size_t p : plan.order) {
        if (p >= order || seen[p]) throw ShapeError("processing order must be a permutation of the modes");
        seen[p] = true;
    }
    for (std::size_t n = 0; n < order; ++n) {
        if (plan.sketch_dims[n].size() != order) throw ShapeError("sketch plan rows must have one entry per mode");
        for (std::size_t m = 0; m < order; ++m)
            if (m != n && plan.sketch_dims[n][m] == 0) throw ShapeError("sketch sizes must be positive");
        if (plan.sketch_width(n) < plan.target_rank[n] + plan.oversampling)
            throw ShapeError("mode " + std::to_string(n + 1) + ": product of sketch sizes " +
                             std::to_string(plan.sketch_width(n)) + " is below mu + K = " +
                             std::to_string(plan.target_rank[n] + plan.oversampling));
    }
}

/// Hypotheses of the probabilistic error bound that the plan does not meet:
/// (1 + 1/ln sqrt(mu)) sqrt(mu) < L_{n,m} for every m != n, and
/// prod_m L_{n,m} < min(I_n, prod_{m != n} I_m). Advisory only.
inline std::vector<std::string> plan_warnings(const SketchPlan& plan, const Dims& dims) {
    std::vector<std::string> out;
    const std::size_t total = num_elements(dims);
    for (std::size_t n = 0; n < dims.size(); ++n) {
        const std::string tag = "mode " + std::to_string(n + 1) + ": ";
        const double root = std::sqrt(static_cast<double>(plan.target_rank[n]));
        if (root <= 1.0) {
            out.push_back(tag + "bound hypothesis undefined for mu <= 1");
        } else {
            const double lower = (1.0 + 1.0 / std::log(root)) * root;
            for (std::size_t m = 0; m < dims.size(); ++m)
                if (m != n && !(lower < static_cast<double>(plan.sketch_dims[n][m])))
                    out.push_back(tag + "L_{" + std::to_string(n + 1) + "," + std::to_string(m + 1) + "}=" +
                                  std::to_string(plan.sketch_dims[n][m]) + " not above " + std::to_string(lower));
        }
        const std::size_t cap = std::min(dims[n], total / dims[n]);
        if (!(plan.sketch_width(n) < cap))
            out.push_back(tag + "sketch width " + std::to_string(plan.sketch_width(n)) + " not below " +
                          std::to_string(cap));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kronecker-structured sketch
// ---------------------------------------------------------------------------

/// The Gaussian matrices G_{n,m} (L_{n,m} x current_dims[m]) for mode n. The
/// entry for m == n is left empty.
inline std::vector<Matrix> tucker_sketch_matrices(const SketchPlan& plan, std::size_t n, const Dims& current_dims) {
    std::vector<Matrix> g(current_dims.size());
    for (std::size_t m = 0; m < current_dims.size(); ++m)
        if (m != n)
            g[m] = gaussian_matrix(plan.seed, stream_id(StreamTag::tucker_sketch, n, m), plan.sketch_dims[n][m],
                                   current_dims[m]);
    return g;
}

/// unfold(c x_{m != n} g[m], n) for a dense c. Contractions run in order of
/// strongest shrinkage first.
inline Matrix apply_kronecker_sketch(const DenseTensor& c, std::size_t n, const std::vector<Matrix>& g) {
    check_mode(c.dims(), n);
    if (g.size() != c.order()) throw ShapeError("need one sketch matrix slot per mode");
    std::vector<std::size_t> modes;
    for (std::size_t m = 0; m < c.order(); ++m) {
        if (m == n) continue;
        if (static_cast<std::size_t>(g[m].cols()) != c.dim(m))
            throw ShapeError("sketch matrix for mode " + std::to_string(m + 1) + " has " +
                             std::to_string(g[m].cols()) + " columns, tensor extent is " + std::to_string(c.dim(m)));
        modes.push_back(m);
    }
    auto ratio = [&](std::size_t m) { return static_cast<double>(g[m].rows()) / static_cast<double>(c.dim(m)); };
    std::stable_sort(modes.begin(), modes.end(), [&](std::size_t a, std::size_t b) { return ratio(a) < ratio(b); });
    if (modes.empty()) return unfold(c, n);
    DenseTensor b = mode_product(c, modes[0], g[modes[0]]);
    for (std::size_t i = 1; i < modes.size(); ++i) b = mode_product(b, modes[i], g[modes[i]]);
    return unfold(b, n);
}

/// Same contraction for a sparse c, accumulated entry by entry so the dense
/// tensor is never formed. Cost is nnz * prod_m L_{n,m}.
inline Matrix apply_kronecker_sketch(const SparseTensor& c, std::size_t n, const std::vector<Matrix>& g) {
    check_mode(c.dims(), n);
    if (g.size() != c.order()) throw ShapeError("need one sketch matrix slot per mode");
    Eigen::Index width = 1;
    for (std::size_t m = 0; m < c.order(); ++m) {
        if (m == n) continue;
        if (static_cast<std::size_t>(g[m].cols()) != c.dim(m))
            throw ShapeError("sketch matrix for mode " + std::to_string(m + 1) + " has " +
                             std::to_string(g[m].cols()) + " columns, tensor extent is " + std::to_string(c.dim(m)));
        width *= g[m].rows();
    }
    Matrix bt = Matrix::Zero(width, static_cast<Eigen::Index>(c.dim(n)));
    Vector w(width), tmp(width);
    for (std::size_t e = 0; e < c.nnz(); ++e) {
        // Column index is first-other-mode fastest, so each later mode's
        // column becomes the outer Kronecker factor.
        Eigen::Index len = 1;
        w(0) = c.value(e);
        for (std::size_t m = 0; m < c.order(); ++m) {
            if (m == n) continue;
            const auto col = static_cast<Eigen::Index>(c.coord(e, m));
            const Eigen::Index rows = g[m].rows();
            for (Eigen::Index l = 0; l < rows; ++l) tmp.segment(l * len, len) = g[m](l, col) * w.head(len);
            len *= rows;
            w.head(len) = tmp.head(len);
        }
        bt.col(static_cast<Eigen::Index>(c.coord(e, n))) += w;
    }
    return bt.transpose();
}

/// B_{n,(n)} for the Kronecker-structured sketch, with G_{n,m} shaped to the
/// current extents of c.
template <class Tensor>
Matrix sketch_mode(const Tensor& c, std::size_t n, const SketchPlan& plan) {
    check_mode(c.dims(), n);
    if (plan.sketch_dims.size() != c.order()) throw ShapeError("sketch plan order does not match tensor order");
    return apply_kronecker_sketch(c, n, tucker_sketch_matrices(plan, n, c.dims()));
}

// ---------------------------------------------------------------------------
// Khatri-Rao sketch
// ---------------------------------------------------------------------------

inline std::vector<Matrix> khatri_rao_factors(const Dims& dims, std::size_t n, std::size_t width,
                                              std::uint64_t seed) {
    std::vector<Matrix> f(dims.size());
    for (std::size_t m = 0; m < dims.size(); ++m)
        if (m != n) f[m] = gaussian_matrix(seed, stream_id(StreamTag::khatri_rao, n, m), dims[m], width);
    return f;
}

/// Omega = khatri_rao over m != n with the highest mode outermost, so row j
/// of Omega matches column j of the mode-n unfolding.
inline Matrix khatri_rao_chain(const std::vector<Matrix>& f, std::size_t n) {
    Matrix out;
    bool first = true;
    for (std::size_t m = 0; m < f.size(); ++m) {
        if (m == n) continue;
        out = first ? f[m] : khatri_rao(f[m], out);
        first = false;
    }
    return out;
}

inline Matrix apply_khatri_rao_sketch(const DenseTensor& c, std::size_t n, const std::vector<Matrix>& f) {
    return unfold(c, n) * khatri_rao_chain(f, n);
}

inline Matrix apply_khatri_rao_sketch(const SparseTensor& c, std::size_t n, const std::vector<Matrix>& f) {
    Eigen::Index width = 0;
    for (std::size_t m = 0; m < c.order(); ++m)
        if (m != n) width = f[m].cols();
    Matrix bt = Matrix::Zero(width, static_cast<Eigen::Index>(c.dim(n)));
    Vector w(width);
    for (std::size_t e = 0; e < c.nnz(); ++e) {
        w.setConstant(c.value(e));
        for (std::size_t m = 0; m < c.order(); ++m)
            if (m != n) w.array() *= f[m].row(static_cast<Eigen::Index>(c.coord(e, m))).transpose().array();
        bt.col(static_cast<Eigen::Index>(c.coord(e, n))) += w;
    }
    return bt.transpose();
}

template <class Tensor>
Matrix sketch_khatri_rao(const Tensor& c, std::size_t n, std::size_t width, std::uint64_t seed) {
    check_mode(c.dims(), n);
    if (width == 0) throw ShapeError("sketch width must be positive");
    if (c.order() < 2) throw ShapeError("Khatri-Rao sketch needs order at least 2");
    return apply_khatri_rao_sketch(c, n, khatri_rao_factors(c.dims(), n, width, seed));
}

// ---------------------------------------------------------------------------
// Full Gaussian sketch
// ---------------------------------------------------------------------------

inline Matrix apply_full_sketch(const DenseTensor& c, std::size_t n, const Matrix& omega) {
    check_mode(c.dims(), n);
    if (static_cast<std::size_t>(omega.rows()) != c.size() / c.dim(n))
        throw ShapeError("sketch matrix has " + std::to_string(omega.rows()) + " rows, expected " +
                         std::to_string(c.size() / c.dim(n)));
    return unfold(c, n) * omega;
}

inline Matrix apply_full_sketch(const SparseTensor& c, std::size_t n, const Matrix& omega) {
    return sparse_unfold_times(c, n, omega);
}

template <class Tensor>
Matrix sketch_full_gaussian(const Tensor& c, std::size_t n, std::size_t width, std::uint64_t seed) {
    check_mode(c.dims(), n);
    if (width == 0) throw ShapeError("sketch width must be positive");
    const std::size_t rows = num_elements(c.dims()) / c.dim(n);
    return apply_full_sketch(c, n, gaussian_matrix(seed, stream_id(StreamTag::full_gaussian, n, 0), rows, width));
}

}  // namespace rtucker
