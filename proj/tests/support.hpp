#pragma once

// Shared fixtures and independent oracles for the unit tests. Nothing here
// calls the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rtucker/tensor.hpp"

namespace rtucker::testing {

inline DenseTensor random_tensor(const Dims& dims, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    return DenseTensor::generate(dims, [&](auto) { return dist(gen); });
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
    return m;
}

/// Random matrix with orthonormal columns (Gram-Schmidt, twice).
inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Matrix q = random_matrix(rows, cols, seed);
    for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
            q.col(j).normalize();
        }
    return q;
}

inline SparseTensor random_sparse(const Dims& dims, std::size_t nnz, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const std::size_t total = num_elements(dims);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<std::size_t> offsets;
    while (offsets.size() < nnz) {
        const std::size_t o = pick(gen);
        if (std::find(offsets.begin(), offsets.end(), o) == offsets.end()) offsets.push_back(o);
    }
    std::vector<std::pair<std::size_t, double>> items;
    for (std::size_t o : offsets) items.emplace_back(o, val(gen));
    return SparseTensor::from_offsets(dims, std::move(items));
}

/// Exact multilinear rank tensor core x_1 B_1 ... x_N B_N built with plain loops.
inline DenseTensor exact_rank_tensor(const Dims& dims, const Dims& core_dims, std::uint64_t seed) {
    const DenseTensor core = random_tensor(core_dims, seed);
    std::vector<Matrix> b;
    for (std::size_t n = 0; n < dims.size(); ++n)
        b.push_back(random_matrix(static_cast<Eigen::Index>(dims[n]), static_cast<Eigen::Index>(core_dims[n]),
                                  seed * 31 + n + 1));
    DenseTensor out = core;
    for (std::size_t n = 0; n < dims.size(); ++n) out = mode_product(out, n, b[n]);
    return out;
}

/// Multi-index of linear offset `off` under first-mode-fastest layout.
inline std::vector<std::size_t> multi_index(std::size_t off, const Dims& dims) {
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        idx[k] = off % dims[k];
        off /= dims[k];
    }
    return idx;
}

/// Unfolding written straight from the index map, element by element.
inline Matrix unfold_by_definition(const DenseTensor& t, std::size_t mode) {
    const Dims& d = t.dims();
    Matrix m(static_cast<Eigen::Index>(d[mode]), static_cast<Eigen::Index>(t.size() / d[mode]));
    for (std::size_t off = 0; off < t.size(); ++off) {
        const auto idx = multi_index(off, d);
        std::size_t j = 0, stride = 1;
        for (std::size_t m2 = 0; m2 < d.size(); ++m2) {
            if (m2 == mode) continue;
            j += idx[m2] * stride;
            stride *= d[m2];
        }
        m(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(j)) = t[off];
    }
    return m;
}

/// Mode product by the contraction formula c_{..j..} = sum_i a_{..i..} b_{j i}.
inline DenseTensor mode_product_by_definition(const DenseTensor& t, std::size_t mode, const Matrix& b) {
    Dims out_dims = t.dims();
    out_dims[mode] = static_cast<std::size_t>(b.rows());
    DenseTensor out(out_dims);
    for (std::size_t off = 0; off < out.size(); ++off) {
        auto idx = multi_index(off, out_dims);
        const std::size_t j = idx[mode];
        double sum = 0.0;
        for (std::size_t i = 0; i < t.dim(mode); ++i) {
            idx[mode] = i;
            sum += t.at(idx) * b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        }
        out[off] = sum;
    }
    return out;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-300) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/// Singular values via the eigenvalues of the smaller Gram matrix.
inline std::vector<double> gram_singular_values(const Matrix& a) {
    const Matrix g = a.rows() <= a.cols() ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
    auto ev = jacobi_eigenvalues(g);
    for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
    return ev;
}

/// Singular values by one-sided (Hestenes) Jacobi, descending. Never forms a
/// Gram matrix, so small values keep their relative accuracy.
inline std::vector<double> hestenes_singular_values(const Matrix& a) {
    Matrix w = a.rows() >= a.cols() ? a : Matrix(a.transpose());
    const Eigen::Index n = w.cols();
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = w.col(p).squaredNorm(), beta = w.col(q).squaredNorm();
                const double gamma = w.col(p).dot(w.col(q));
                if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
                const Vector wp = w.col(p);
                w.col(p) = c * wp - s * w.col(q);
                w.col(q) = s * wp + c * w.col(q);
            }
        if (!rotated) break;
    }
    std::vector<double> sv(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) sv[static_cast<std::size_t>(i)] = w.col(i).norm();
    std::sort(sv.rbegin(), sv.rend());
    return sv;
}

inline double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

inline double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    return frob_distance(a, b) / std::max(frob_norm(b), 1e-300);
}

}  // namespace rtucker::testing
