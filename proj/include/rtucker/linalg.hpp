#pragma once

// Dense factorizations used by every decomposition: thin SVD with a fixed
// sign convention, singular-value tail energy, the truncated SVD basis and a
// Householder QR basis.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtucker/errors.hpp"
#include "rtucker/tensor.hpp"

namespace rtucker {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-12;

/// Thin SVD a = u * diag(s) * vt with r = min(rows, cols).
struct Svd {
    Matrix u;
    Vector s;
    Matrix vt;

    std::size_t numerical_rank(double rel_tol = kRankTolerance) const {
        if (s.size() == 0 || s(0) == 0.0) return 0;
        std::size_t r = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) > rel_tol * s(0)) ++r;
        return r;
    }
};

namespace detail {

inline void require_finite(const Matrix& a, const char* who) {
    if (!a.allFinite()) throw std::domain_error(std::string(who) + ": input has non-finite entries");
}

/// Flip each column of u so its largest-magnitude entry is positive (lowest
/// index wins ties), applying the same flip to the matching row of vt.
inline void canonicalize_signs(Matrix& u, Matrix* vt) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const double v = std::abs(u(i, k));
            if (v > best_abs) {
                best_abs = v;
                best = i;
            }
        }
        if (u(best, k) < 0.0) {
            u.col(k) = -u.col(k);
            if (vt != nullptr) vt->row(k) = -vt->row(k);
        }
    }
}

}  // namespace detail

inline Svd svd(const Matrix& a) {
    detail::require_finite(a, "svd");
    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Svd out{dec.matrixU(), dec.singularValues(), dec.matrixV().transpose()};
    detail::canonicalize_signs(out.u, &out.vt);
    return out;
}

/// Singular values only, non-increasing.
inline Vector singular_values(const Matrix& a) {
    detail::require_finite(a, "singular_values");
    Eigen::BDCSVD<Matrix> dec(a);
    return dec.singularValues();
}

/// Leading k left singular vectors of a, sign-canonicalized. k may exceed
/// the column count (up to the row count); the extra vectors then span the
/// orthogonal complement of range(a).
inline Matrix leading_left_singular_vectors(const Matrix& a, std::size_t k) {
    detail::require_finite(a, "leading_left_singular_vectors");
    const auto kk = static_cast<Eigen::Index>(k);
    if (k == 0 || kk > a.rows())
        throw RankError("requested " + std::to_string(k) + " singular vectors of a " + std::to_string(a.rows()) +
                        "x" + std::to_string(a.cols()) + " matrix");
    Matrix u;
    if (kk <= a.cols()) {
        Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU);
        u = dec.matrixU().leftCols(kk);
    } else {
        Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeFullU);
        u = dec.matrixU().leftCols(kk);
    }
    detail::canonicalize_signs(u, nullptr);
    return u;
}

/// Tail energy sqrt(sum_{i >= k} s_i^2) with 1-based k; zero once k runs past
/// the end. This is the optimal rank-(k-1) Frobenius error.
inline double delta_tail(std::span<const double> s, std::size_t k) {
    if (k == 0) throw std::invalid_argument("delta_tail: k is 1-based and must be at least 1");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[i - 1]) throw std::invalid_argument("delta_tail: singular values must be non-increasing");
    double sum = 0.0;
    for (std::size_t i = k - 1; i < s.size(); ++i) sum += s[i] * s[i];
    return std::sqrt(sum);
}

inline double delta_tail(const Vector& s, std::size_t k) {
    return delta_tail(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), k);
}

/// Rank-mu basis from the truncated SVD: q holds the leading mu left singular
/// vectors and s = diag(sigma_1..mu) * V(:, 1:mu)^T, so ||q s - a||_F equals
/// the tail energy delta_tail(sigma, mu + 1).
struct FixedRankBasis {
    Matrix q;
    Matrix s;
    Vector singular_values;
    std::size_t numerical_rank = 0;

    bool rank_deficient() const { return numerical_rank < static_cast<std::size_t>(q.cols()); }
};

inline FixedRankBasis fixed_rank_basis(const Matrix& a, std::size_t mu) {
    const auto r = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
    if (mu == 0 || mu > r)
        throw RankError("fixed_rank_basis: rank " + std::to_string(mu) + " outside 1.." + std::to_string(r));
    const auto k = static_cast<Eigen::Index>(mu);
    Svd dec = svd(a);
    FixedRankBasis out;
    out.singular_values = dec.s;
    out.numerical_rank = dec.numerical_rank();
    out.q = dec.u.leftCols(k);
    if (out.rank_deficient()) {
        // Columns past the numerical rank are arbitrary; re-orthonormalize so
        // they are a clean completion of the captured range.
        Eigen::HouseholderQR<Matrix> qr(out.q);
        out.q = qr.householderQ() * Matrix::Identity(a.rows(), k);
        detail::canonicalize_signs(out.q, nullptr);
        out.s = out.q.transpose() * a;
    } else {
        out.s = dec.s.head(k).asDiagonal() * dec.vt.topRows(k);
    }
    return out;
}

/// Orthonormal basis from an unpivoted Householder QR. When a is rank
/// deficient the trailing columns complete the range orthonormally and the
/// result is flagged.
struct QrBasis {
    Matrix q;
    std::size_t numerical_rank = 0;

    bool rank_deficient() const { return numerical_rank < static_cast<std::size_t>(q.cols()); }
};

inline QrBasis orthonormal_basis_qr(const Matrix& a) {
    detail::require_finite(a, "orthonormal_basis_qr");
    if (a.rows() < a.cols())
        throw ShapeError("orthonormal_basis_qr: need rows >= cols, got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
    Eigen::HouseholderQR<Matrix> qr(a);
    QrBasis out;
    out.q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Matrix> sv(r);
    const Vector s = sv.singularValues();
    if (s.size() > 0 && s(0) > 0.0)
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) > kRankTolerance * s(0)) ++out.numerical_rank;
    return out;
}

/// Largest deviation of q^T q from the identity.
inline double orthonormality_error(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

}  // namespace rtucker
