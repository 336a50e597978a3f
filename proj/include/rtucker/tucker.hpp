#pragma once

// Low multilinear rank (Tucker) approximations.
//
// Every algorithm returns orthonormal factors Q_n (I_n x mu_n) and the core
// a x_1 Q_1^T ... x_N Q_N^T, so reconstruct() is the orthogonal projection
// of the source onto the chosen subspaces.
//
//   tucker_svd_seq    Kronecker-structured sketch + SVD basis, shrinking the
//                     working tensor after each mode (the default method)
//   tucker_svd_batch  same sketches, all taken from the original tensor
//   ran_tucker        sequential, one dense Gaussian per mode, QR basis
//   kr_tucker         sequential, Khatri-Rao Gaussian per mode, QR basis
//   truncated_hosvd   leading left singular vectors of each unfolding
//   hooi              alternating refinement from a Gaussian start

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtucker/errors.hpp"
#include "rtucker/linalg.hpp"
#include "rtucker/random.hpp"
#include "rtucker/sketch.hpp"
#include "rtucker/tensor.hpp"

namespace rtucker {

struct TuckerApprox {
    DenseTensor core;
    std::vector<Matrix> factors;
    Dims source_dims;
    /// Non-fatal conditions met along the way (rank-deficient sketches).
    std::vector<std::string> warnings;

    std::vector<std::size_t> ranks() const { return core.dims(); }
};

struct Metrics {
    double rlne = 0.0;
    double fit = 1.0;
    double wall_time = 0.0;
};

namespace detail {

/// s x_m q[m]^T over the listed modes in one pass over the nonzeros: each
/// entry scatters the Kronecker product of its factor rows. Falls back to
/// one mode at a time when the flop estimate says that is cheaper.
inline DenseTensor project_fused(const SparseTensor& s, const std::vector<Matrix>& q, std::span<const std::size_t> modes) {
    Dims out_dims = s.dims();
    std::size_t fan = 1;
    double stepwise = static_cast<double>(s.nnz()) * static_cast<double>(q[modes[0]].cols());
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::size_t m = modes[i];
        out_dims[m] = static_cast<std::size_t>(q[m].cols());
        fan *= out_dims[m];
        if (i + 1 < modes.size())
            stepwise += static_cast<double>(num_elements(out_dims)) * static_cast<double>(q[modes[i + 1]].cols());
    }
    if (modes.size() == 1 || 2.0 * static_cast<double>(s.nnz() * fan) > stepwise) {
        DenseTensor c = mode_product(s, modes[0], Matrix(q[modes[0]].transpose()));
        for (std::size_t i = 1; i < modes.size(); ++i) c = mode_product(c, modes[i], Matrix(q[modes[i]].transpose()));
        return c;
    }
    DenseTensor out(out_dims);
    std::vector<std::size_t> stride(out_dims.size(), 1);
    for (std::size_t k = 1; k < out_dims.size(); ++k) stride[k] = stride[k - 1] * out_dims[k - 1];
    std::vector<bool> fused(out_dims.size(), false);
    for (std::size_t m : modes) fused[m] = true;
    std::vector<double> w(fan), tw(fan);
    std::vector<std::size_t> off(fan), toff(fan);
    double* dst = out.data();
    for (std::size_t e = 0; e < s.nnz(); ++e) {
        std::size_t base = 0;
        for (std::size_t k = 0; k < out_dims.size(); ++k)
            if (!fused[k]) base += s.coord(e, k) * stride[k];
        std::size_t len = 1;
        w[0] = s.value(e);
        off[0] = base;
        for (std::size_t m : modes) {
            const auto row = static_cast<Eigen::Index>(s.coord(e, m));
            const std::size_t r = out_dims[m];
            for (std::size_t l = 0; l < r; ++l) {
                const double f = q[m](row, static_cast<Eigen::Index>(l));
                for (std::size_t t = 0; t < len; ++t) {
                    tw[l * len + t] = f * w[t];
                    toff[l * len + t] = off[t] + l * stride[m];
                }
            }
            len *= r;
            std::swap(w, tw);
            std::swap(off, toff);
        }
        for (std::size_t t = 0; t < len; ++t) dst[off[t]] += w[t];
    }
    return out;
}

/// a x_m q[m]^T for every mode m != skip (all modes when skip is empty).
/// Modes with the strongest shrinkage are contracted first.
template <class Tensor>
DenseTensor project_modes(const Tensor& a, const std::vector<Matrix>& q, std::optional<std::size_t> skip = {}) {
    std::vector<std::size_t> modes;
    for (std::size_t m = 0; m < a.order(); ++m)
        if (!skip || *skip != m) modes.push_back(m);
    auto ratio = [&](std::size_t m) { return static_cast<double>(q[m].cols()) / static_cast<double>(a.dim(m)); };
    std::stable_sort(modes.begin(), modes.end(), [&](std::size_t x, std::size_t y) { return ratio(x) < ratio(y); });
    if (modes.empty()) {
        if constexpr (std::is_same_v<Tensor, DenseTensor>)
            return a;
        else
            return densify(a);
    }
    std::size_t done = 1;
    std::optional<DenseTensor> c;
    if constexpr (std::is_same_v<Tensor, SparseTensor>) {
        done = std::max<std::size_t>(modes.size() - 1, 1);
        c.emplace(project_fused(a, q, std::span(modes).first(done)));
    } else {
        c.emplace(mode_product(a, modes[0], Matrix(q[modes[0]].transpose())));
    }
    for (std::size_t i = done; i < modes.size(); ++i) c = mode_product(*c, modes[i], Matrix(q[modes[i]].transpose()));
    return std::move(*c);
}

inline DenseTensor as_dense(const DenseTensor& a) { return a; }
inline DenseTensor as_dense(const SparseTensor& a) { return densify(a); }

inline std::string rank_warning(std::size_t mode, std::size_t rank, std::size_t mu) {
    return "mode " + std::to_string(mode + 1) + ": sketch has numerical rank " + std::to_string(rank) +
           " below target " + std::to_string(mu) + "; trailing basis vectors are an arbitrary completion";
}

/// Working tensor of a sequential algorithm: the untouched source until the
/// first mode is processed, a dense tensor afterwards.
template <class Tensor>
class Shrinking {
public:
    explicit Shrinking(const Tensor& source) : source_(source) {}

    const Dims& dims() const { return current_ ? current_->dims() : source_.dims(); }

    template <class F>
    decltype(auto) visit(F&& f) const {
        return current_ ? f(*current_) : f(source_);
    }

    void project(std::size_t mode, const Matrix& q) {
        const Matrix qt = q.transpose();
        current_ = current_ ? mode_product(*current_, mode, qt) : mode_product(source_, mode, qt);
    }

    DenseTensor take() && { return current_ ? std::move(*current_) : as_dense(source_); }

private:
    const Tensor& source_;
    std::optional<DenseTensor> current_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Reconstruction and error metrics
// ---------------------------------------------------------------------------

inline DenseTensor reconstruct(const TuckerApprox& t) {
    DenseTensor out = t.core;
    for (std::size_t n = 0; n < t.factors.size(); ++n) out = mode_product(out, n, t.factors[n]);
    if (out.dims() != t.source_dims) throw ShapeError("reconstruction does not match the recorded source shape");
    return out;
}

/// ||a - reconstruct(approx)||_F / ||a||_F.
template <class Tensor>
double rlne(const Tensor& a, const TuckerApprox& approx) {
    if (a.dims() != approx.source_dims)
        throw ShapeError("rlne: tensor is " + dims_to_string(a.dims()) + " but approximation is " +
                         dims_to_string(approx.source_dims));
    const double norm = frob_norm(a);
    if (norm == 0.0) throw std::domain_error("rlne: source tensor has zero norm");
    return frob_distance(detail::as_dense(a), reconstruct(approx)) / norm;
}

template <class Tensor>
Metrics evaluate(const Tensor& a, const TuckerApprox& approx, double wall_time = 0.0) {
    Metrics m;
    m.rlne = rlne(a, approx);
    m.fit = 1.0 - m.rlne;
    m.wall_time = wall_time;
    return m;
}

/// Recomputes the core from the source and the factors.
template <class Tensor>
DenseTensor core_from_factors(const Tensor& a, const std::vector<Matrix>& q) {
    return detail::project_modes(a, q);
}

// ---------------------------------------------------------------------------
// Kronecker-sketch algorithms
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix sketch_basis(const Matrix& b, std::size_t n, std::size_t mu, std::vector<std::string>& warnings) {
    FixedRankBasis basis = fixed_rank_basis(b, mu);
    if (basis.rank_deficient()) warnings.push_back(rank_warning(n, basis.numerical_rank, mu));
    return std::move(basis.q);
}

}  // namespace detail

/// Every mode is sketched from the original tensor; the core is formed at the end.
template <class Tensor>
TuckerApprox tucker_svd_batch(const Tensor& a, const SketchPlan& plan) {
    validate_plan(plan, a.dims());
    const std::size_t order = a.order();
    std::vector<Matrix> q(order);
    std::vector<std::string> warnings;
    for (std::size_t n = 0; n < order; ++n) {
        const std::size_t mu = plan.target_rank[n];
        if (mu == a.dim(n)) {
            q[n] = Matrix::Identity(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(mu));
            continue;
        }
        q[n] = detail::sketch_basis(sketch_mode(a, n, plan), n, mu, warnings);
    }
    DenseTensor core = detail::project_modes(a, q);
    return TuckerApprox{std::move(core), std::move(q), a.dims(), std::move(warnings)};
}

/// Sparse variant of the sequential pass. The shrunk tensor is never formed:
/// (A x_m Q_m^T) x_m G = A x_m (G Q_m^T), so finished modes are folded into
/// the sketch matrices and every sketch runs over the nonzeros of A.
inline TuckerApprox tucker_svd_seq_sparse(const SparseTensor& a, const SketchPlan& plan) {
    validate_plan(plan, a.dims());
    const std::size_t order = a.order();
    std::vector<Matrix> q(order);
    std::vector<std::string> warnings;
    Dims current = a.dims();
    for (std::size_t n : plan.order) {
        const std::size_t mu = plan.target_rank[n];
        if (mu == a.dim(n)) {
            q[n] = Matrix::Identity(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(mu));
        } else {
            std::vector<Matrix> g = tucker_sketch_matrices(plan, n, current);
            for (std::size_t m = 0; m < order; ++m)
                if (m != n && q[m].size() != 0) g[m] = g[m] * q[m].transpose();
            q[n] = detail::sketch_basis(apply_kronecker_sketch(a, n, g), n, mu, warnings);
        }
        current[n] = mu;
    }
    DenseTensor core = detail::project_modes(a, q);
    return TuckerApprox{std::move(core), std::move(q), a.dims(), std::move(warnings)};
}

/// Modes are visited in plan.order; after mode n is processed the working
/// tensor is replaced by C x_n Q_n^T, so later sketches act on the shrunk
/// tensor. The final working tensor is the core.
template <class Tensor>
TuckerApprox tucker_svd_seq(const Tensor& a, const SketchPlan& plan) {
    if constexpr (std::is_same_v<Tensor, SparseTensor>) return tucker_svd_seq_sparse(a, plan);
    validate_plan(plan, a.dims());
    const std::size_t order = a.order();
    std::vector<Matrix> q(order);
    std::vector<std::string> warnings;
    detail::Shrinking<Tensor> c(a);
    for (std::size_t n : plan.order) {
        const std::size_t mu = plan.target_rank[n];
        if (mu == a.dim(n)) {
            q[n] = Matrix::Identity(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(mu));
        } else {
            const Matrix b = c.visit([&](const auto& t) { return sketch_mode(t, n, plan); });
            q[n] = detail::sketch_basis(b, n, mu, warnings);
        }
        c.project(n, q[n]);
    }
    return TuckerApprox{std::move(c).take(), std::move(q), a.dims(), std::move(warnings)};
}

// ---------------------------------------------------------------------------
// Randomized baselines with QR bases
// ---------------------------------------------------------------------------

/// Parameters shared by ran_tucker and kr_tucker: one sketch width L'_n per mode.
struct BaselinePlan {
    std::vector<std::size_t> target_rank;
    std::size_t oversampling = 0;
    std::vector<std::size_t> width;
    std::vector<std::size_t> order;
    std::uint64_t seed = 0;
};

/// L'_n = mu_n + K, processing order by non-increasing extent.
inline BaselinePlan baseline_plan(const Dims& dims, const std::vector<std::size_t>& target_rank, std::size_t k,
                                  std::uint64_t seed = 0) {
    check_dims(dims);
    check_target_rank(dims, target_rank);
    BaselinePlan plan{target_rank, k, {}, default_processing_order(dims), seed};
    for (std::size_t mu : target_rank) plan.width.push_back(mu + k);
    return plan;
}

inline void validate_plan(const BaselinePlan& plan, const Dims& dims) {
    check_target_rank(dims, plan.target_rank);
    if (plan.width.size() != dims.size()) throw ShapeError("need one sketch width per mode");
    for (std::size_t n = 0; n < dims.size(); ++n)
        if (plan.width[n] < plan.target_rank[n] + plan.oversampling)
            throw ShapeError("mode " + std::to_string(n + 1) + ": sketch width " + std::to_string(plan.width[n]) +
                             " is below mu + K = " + std::to_string(plan.target_rank[n] + plan.oversampling));
    std::vector<bool> seen(dims.size(), false);
    if (plan.order.size() != dims.size()) throw ShapeError("processing order must list every mode once");
    for (std::size_t p : plan.order) {
        if (p >= dims.size() || seen[p]) throw ShapeError("processing order must be a permutation of the modes");
        seen[p] = true;
    }
}

enum class BaselineSketch { full_gaussian, khatri_rao };

namespace detail {

/// First mu columns of a Householder QR basis of b. Only the leading
/// min(rows, cols) sketch columns can influence them.
inline Matrix truncated_qr_basis(const Matrix& b, std::size_t n, std::size_t mu, std::vector<std::string>& warnings) {
    const Eigen::Index keep = std::min(b.rows(), b.cols());
    QrBasis basis = orthonormal_basis_qr(b.leftCols(keep));
    const auto k = static_cast<Eigen::Index>(mu);
    if (basis.numerical_rank < mu) warnings.push_back(rank_warning(n, basis.numerical_rank, mu));
    return basis.q.leftCols(k);
}

template <class Tensor>
TuckerApprox baseline_tucker(const Tensor& a, const BaselinePlan& plan, BaselineSketch kind) {
    validate_plan(plan, a.dims());
    if (a.order() < 2) throw ShapeError("randomized Tucker needs order at least 2");
    std::vector<Matrix> q(a.order());
    std::vector<std::string> warnings;
    Shrinking<Tensor> c(a);
    for (std::size_t n : plan.order) {
        const std::size_t mu = plan.target_rank[n];
        if (mu == a.dim(n)) {
            q[n] = Matrix::Identity(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(mu));
        } else {
            const Matrix b = c.visit([&](const auto& t) {
                return kind == BaselineSketch::full_gaussian ? sketch_full_gaussian(t, n, plan.width[n], plan.seed)
                                                             : sketch_khatri_rao(t, n, plan.width[n], plan.seed);
            });
            q[n] = truncated_qr_basis(b, n, mu, warnings);
        }
        c.project(n, q[n]);
    }
    return TuckerApprox{std::move(c).take(), std::move(q), a.dims(), std::move(warnings)};
}

}  // namespace detail

/// Sequential randomized Tucker with one dense Gaussian sketch per mode.
template <class Tensor>
TuckerApprox ran_tucker(const Tensor& a, const BaselinePlan& plan) {
    return detail::baseline_tucker(a, plan, BaselineSketch::full_gaussian);
}

/// Sequential randomized Tucker with a Khatri-Rao structured Gaussian sketch.
template <class Tensor>
TuckerApprox kr_tucker(const Tensor& a, const BaselinePlan& plan) {
    return detail::baseline_tucker(a, plan, BaselineSketch::khatri_rao);
}

// ---------------------------------------------------------------------------
// Deterministic baselines
// ---------------------------------------------------------------------------

template <class Tensor>
TuckerApprox truncated_hosvd(const Tensor& a, const std::vector<std::size_t>& target_rank) {
    check_target_rank(a.dims(), target_rank);
    const DenseTensor dense = detail::as_dense(a);
    std::vector<Matrix> q(a.order());
    for (std::size_t n = 0; n < a.order(); ++n) q[n] = leading_left_singular_vectors(unfold(dense, n), target_rank[n]);
    DenseTensor core = detail::project_modes(dense, q);
    return TuckerApprox{std::move(core), std::move(q), a.dims(), {}};
}

enum class HooiInit { gaussian, hosvd };

struct HooiOptions {
    std::size_t max_iters = 50;
    double tol = 1e-4;
    HooiInit init = HooiInit::gaussian;
    std::uint64_t seed = 0;
};

/// Per-sweep fit values 1 - sqrt(||a||^2 - ||core||^2) / ||a||.
struct HooiTrace {
    std::vector<double> fits;
    std::size_t sweeps = 0;
};

/// Higher-order orthogonal iteration. Each sweep updates every mode n in
/// turn to the leading left singular vectors of unfold(a x_{m != n} Q_m^T, n).
/// Stops when the fit changes by less than tol (after the first sweep) or
/// after max_iters sweeps. Gaussian initial factors are orthonormalized.
template <class Tensor>
TuckerApprox hooi(const Tensor& a, const std::vector<std::size_t>& target_rank, const HooiOptions& options = {},
                  HooiTrace* trace = nullptr) {
    check_target_rank(a.dims(), target_rank);
    const std::size_t order = a.order();
    std::vector<Matrix> q(order);
    if (options.init == HooiInit::hosvd) {
        q = truncated_hosvd(a, target_rank).factors;
    } else {
        for (std::size_t n = 0; n < order; ++n)
            q[n] = orthonormal_basis_qr(gaussian_matrix(options.seed, stream_id(StreamTag::hooi_init, n, 0), a.dim(n),
                                                        target_rank[n]))
                       .q;
    }
    const double norm = frob_norm(a);
    const double norm2 = norm * norm;
    double fit_old = 0.0;
    std::optional<DenseTensor> core;
    std::size_t sweep = 0;
    while (sweep < options.max_iters) {
        ++sweep;
        for (std::size_t n = 0; n < order; ++n) {
            DenseTensor y = detail::project_modes(a, q, n);
            q[n] = leading_left_singular_vectors(unfold(y, n), target_rank[n]);
            if (n + 1 == order) core = mode_product(y, n, Matrix(q[n].transpose()));
        }
        const double core_norm = frob_norm(*core);
        const double residual = std::sqrt(std::max(0.0, norm2 - core_norm * core_norm));
        const double fit = norm > 0.0 ? 1.0 - residual / norm : 1.0;
        if (trace != nullptr) trace->fits.push_back(fit);
        const double change = std::abs(fit_old - fit);
        fit_old = fit;
        if (sweep > 1 && change < options.tol) break;
    }
    if (trace != nullptr) trace->sweeps = sweep;
    if (!core) core = detail::project_modes(a, q);
    return TuckerApprox{std::move(*core), std::move(q), a.dims(), {}};
}

// ---------------------------------------------------------------------------
// Invariant checks
// ---------------------------------------------------------------------------

struct ApproxCheck {
    double max_orthonormality_error = 0.0;
    double core_mismatch = 0.0;  // relative to ||core||
    double pythagoras_gap = 0.0;  // relative to ||a||^2
    bool ok(double ortho_tol = 1e-10, double core_tol = 1e-10, double pyth_tol = 1e-8) const {
        return max_orthonormality_error <= ortho_tol && core_mismatch <= core_tol && pythagoras_gap <= pyth_tol;
    }
};

/// Orthonormal factors, core == a x Q^T, and
/// ||a - reconstruct||^2 == ||a||^2 - ||core||^2.
template <class Tensor>
ApproxCheck check_approx(const Tensor& a, const TuckerApprox& t) {
    ApproxCheck out;
    for (const Matrix& q : t.factors)
        out.max_orthonormality_error = std::max(out.max_orthonormality_error, orthonormality_error(q));
    const DenseTensor core = core_from_factors(a, t.factors);
    const double core_norm = frob_norm(t.core);
    out.core_mismatch = frob_distance(core, t.core) / std::max(core_norm, 1e-300);
    const double a_norm = frob_norm(a);
    const double err = frob_distance(detail::as_dense(a), reconstruct(t));
    out.pythagoras_gap =
        std::abs(err * err - (a_norm * a_norm - core_norm * core_norm)) / std::max(a_norm * a_norm, 1e-300);
    return out;
}

/// Wall-clock seconds spent in f().
template <class F>
double time_call(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace rtucker
