#pragma once

// Dense and coordinate-sparse tensors plus the multilinear primitives the
// decomposition algorithms are built from.
//
// Layout: element (i_1, ..., i_N) (0-based) lives at linear offset
//   i_1 + i_2 * I_1 + i_3 * I_1 * I_2 + ...
// i.e. the first mode varies fastest. The mode-n unfolding maps that element
// to row i_n and column
//   j = sum_{m != n} i_m * prod_{k < m, k != n} I_k,
// so the mode-1 unfolding is a pure reshape of the value buffer.
//
// Modes are 0-based throughout the C++ API. File formats and the CLI use
// 1-based indices and convert at the boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rtucker/errors.hpp"

namespace rtucker {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

inline std::size_t num_elements(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_to_string(std::span<const std::size_t> dims, char sep = 'x') {
    std::string out;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k > 0) out += sep;
        out += std::to_string(dims[k]);
    }
    return out;
}

inline void check_dims(std::span<const std::size_t> dims) {
    if (dims.empty()) throw ShapeError("tensor order must be at least 1");
    for (std::size_t d : dims)
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + dims_to_string(dims));
}

inline void check_mode(std::span<const std::size_t> dims, std::size_t mode) {
    if (mode >= dims.size())
        throw ShapeError("mode " + std::to_string(mode + 1) + " out of range for order-" +
                         std::to_string(dims.size()) + " tensor");
}

/// Extents of the (left, mode, right) factorization of a tensor around `mode`.
/// In the first-mode-fastest layout the tensor is a left x I_n x right array
/// with `left` fastest.
struct ModeSplit {
    std::size_t left = 1;
    std::size_t extent = 1;
    std::size_t right = 1;

    ModeSplit(std::span<const std::size_t> dims, std::size_t mode) : extent(dims[mode]) {
        for (std::size_t k = 0; k < mode; ++k) left *= dims[k];
        for (std::size_t k = mode + 1; k < dims.size(); ++k) right *= dims[k];
    }
};

class DenseTensor {
public:
    /// Zero tensor of the given shape.
    explicit DenseTensor(Dims dims) : dims_(std::move(dims)) {
        check_dims(dims_);
        values_.assign(num_elements(dims_), 0.0);
    }

    DenseTensor(Dims dims, std::vector<double> values) : dims_(std::move(dims)), values_(std::move(values)) {
        check_dims(dims_);
        if (values_.size() != num_elements(dims_))
            throw ShapeError("dense tensor " + dims_to_string(dims_) + " needs " +
                             std::to_string(num_elements(dims_)) + " values, got " +
                             std::to_string(values_.size()));
    }

    /// Builds a tensor by evaluating f on every 0-based multi-index.
    template <class F>
    static DenseTensor generate(Dims dims, F&& f) {
        DenseTensor t(std::move(dims));
        std::vector<std::size_t> idx(t.order(), 0);
        for (double& v : t.values_) {
            v = f(std::span<const std::size_t>(idx));
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (++idx[k] < t.dims_[k]) break;
                idx[k] = 0;
            }
        }
        return t;
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }

    double operator[](std::size_t linear) const { return values_[linear]; }
    double& operator[](std::size_t linear) { return values_[linear]; }

    std::size_t offset(std::span<const std::size_t> idx) const {
        if (idx.size() != dims_.size()) throw ShapeError("index arity does not match tensor order");
        std::size_t off = 0, stride = 1;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (idx[k] >= dims_[k]) throw ShapeError("index out of bounds");
            off += idx[k] * stride;
            stride *= dims_[k];
        }
        return off;
    }

    double at(std::span<const std::size_t> idx) const { return values_[offset(idx)]; }
    double at(std::initializer_list<std::size_t> idx) const {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }
    double& at(std::initializer_list<std::size_t> idx) {
        return values_[offset(std::span<const std::size_t>(idx.begin(), idx.size()))];
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Dims dims_;
    std::vector<double> values_;
};

/// Coordinate-format tensor. Entries are kept sorted by linear offset and
/// duplicate coordinates are rejected.
class SparseTensor {
public:
    explicit SparseTensor(Dims dims) : dims_(std::move(dims)) { check_dims(dims_); }

    /// `indices` holds one 0-based coordinate tuple per value.
    SparseTensor(Dims dims, const std::vector<std::vector<std::size_t>>& indices, std::vector<double> values)
        : dims_(std::move(dims)) {
        check_dims(dims_);
        if (indices.size() != values.size()) throw ShapeError("sparse tensor: index and value counts differ");
        std::vector<std::pair<std::size_t, double>> items;
        items.reserve(values.size());
        for (std::size_t e = 0; e < values.size(); ++e) {
            const auto& idx = indices[e];
            if (idx.size() != dims_.size()) throw ShapeError("sparse tensor: index arity does not match order");
            std::size_t off = 0, stride = 1;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (idx[k] >= dims_[k])
                    throw ShapeError("sparse tensor: index " + std::to_string(idx[k] + 1) + " outside mode " +
                                     std::to_string(k + 1) + " extent " + std::to_string(dims_[k]));
                off += idx[k] * stride;
                stride *= dims_[k];
            }
            items.emplace_back(off, values[e]);
        }
        assign_sorted(std::move(items));
    }

    /// Entries given as (linear offset, value) pairs.
    static SparseTensor from_offsets(Dims dims, std::vector<std::pair<std::size_t, double>> items) {
        SparseTensor s(std::move(dims));
        const std::size_t total = num_elements(s.dims_);
        for (const auto& [off, v] : items)
            if (off >= total) throw ShapeError("sparse tensor: linear offset out of range");
        s.assign_sorted(std::move(items));
        return s;
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    std::size_t nnz() const noexcept { return values_.size(); }

    /// 0-based coordinate of entry e along mode k.
    std::size_t coord(std::size_t e, std::size_t k) const { return coords_[e * dims_.size() + k]; }
    std::span<const std::size_t> coords(std::size_t e) const {
        return {coords_.data() + e * dims_.size(), dims_.size()};
    }
    double value(std::size_t e) const { return values_[e]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    void assign_sorted(std::vector<std::pair<std::size_t, double>> items) {
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t e = 1; e < items.size(); ++e)
            if (items[e].first == items[e - 1].first) throw ShapeError("sparse tensor: duplicate coordinate");
        const std::size_t n = dims_.size();
        coords_.resize(items.size() * n);
        values_.resize(items.size());
        for (std::size_t e = 0; e < items.size(); ++e) {
            std::size_t off = items[e].first;
            for (std::size_t k = 0; k < n; ++k) {
                coords_[e * n + k] = off % dims_[k];
                off /= dims_[k];
            }
            values_[e] = items[e].second;
        }
    }

    Dims dims_;
    std::vector<std::size_t> coords_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Unfolding and folding
// ---------------------------------------------------------------------------

inline Matrix unfold(const DenseTensor& t, std::size_t mode) {
    check_mode(t.dims(), mode);
    const ModeSplit s(t.dims(), mode);
    Matrix m(s.extent, s.left * s.right);
    if (s.left == 1) {
        m = Eigen::Map<const Matrix>(t.data(), s.extent, s.right);
        return m;
    }
    for (std::size_t r = 0; r < s.right; ++r) {
        Eigen::Map<const Matrix> slab(t.data() + r * s.left * s.extent, s.left, s.extent);
        m.middleCols(r * s.left, s.left) = slab.transpose();
    }
    return m;
}

inline DenseTensor fold(const Matrix& m, std::size_t mode, const Dims& dims) {
    check_dims(dims);
    check_mode(dims, mode);
    const ModeSplit s(dims, mode);
    if (static_cast<std::size_t>(m.rows()) != s.extent || static_cast<std::size_t>(m.cols()) != s.left * s.right)
        throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " but mode-" + std::to_string(mode + 1) + " unfolding of " + dims_to_string(dims) +
                         " is " + std::to_string(s.extent) + "x" + std::to_string(s.left * s.right));
    DenseTensor t(dims);
    if (s.left == 1) {
        Eigen::Map<Matrix>(t.data(), s.extent, s.right) = m;
        return t;
    }
    for (std::size_t r = 0; r < s.right; ++r) {
        Eigen::Map<Matrix> slab(t.data() + r * s.left * s.extent, s.left, s.extent);
        slab = m.middleCols(r * s.left, s.left).transpose();
    }
    return t;
}

// ---------------------------------------------------------------------------
// Mode-n products
// ---------------------------------------------------------------------------

/// t x_mode b, where b is J x I_mode. Equivalent to fold(b * unfold(t, mode))
/// but works slab by slab without permuting the tensor.
inline DenseTensor mode_product(const DenseTensor& t, std::size_t mode, const Matrix& b) {
    check_mode(t.dims(), mode);
    if (static_cast<std::size_t>(b.cols()) != t.dim(mode))
        throw ShapeError("mode_product: matrix has " + std::to_string(b.cols()) + " columns but mode " +
                         std::to_string(mode + 1) + " has extent " + std::to_string(t.dim(mode)));
    const ModeSplit s(t.dims(), mode);
    const auto rows = static_cast<std::size_t>(b.rows());
    Dims out_dims = t.dims();
    out_dims[mode] = rows;
    DenseTensor out(out_dims);
    if (s.left == 1) {
        Eigen::Map<Matrix>(out.data(), rows, s.right).noalias() =
            b * Eigen::Map<const Matrix>(t.data(), s.extent, s.right);
        return out;
    }
    if (s.right == 1) {
        Eigen::Map<Matrix>(out.data(), s.left, rows).noalias() =
            Eigen::Map<const Matrix>(t.data(), s.left, s.extent) * b.transpose();
        return out;
    }
    const Matrix bt = b.transpose();
    for (std::size_t r = 0; r < s.right; ++r) {
        Eigen::Map<const Matrix> in(t.data() + r * s.left * s.extent, s.left, s.extent);
        Eigen::Map<Matrix> dst(out.data() + r * s.left * rows, s.left, rows);
        dst.noalias() = in * bt;
    }
    return out;
}

/// s x_mode b for a sparse s; the result is dense.
inline DenseTensor mode_product(const SparseTensor& s, std::size_t mode, const Matrix& b) {
    check_mode(s.dims(), mode);
    if (static_cast<std::size_t>(b.cols()) != s.dim(mode))
        throw ShapeError("mode_product: matrix has " + std::to_string(b.cols()) + " columns but mode " +
                         std::to_string(mode + 1) + " has extent " + std::to_string(s.dim(mode)));
    Dims out_dims = s.dims();
    const auto rows = static_cast<std::size_t>(b.rows());
    out_dims[mode] = rows;
    DenseTensor out(out_dims);
    std::vector<std::size_t> stride(out_dims.size(), 1);
    for (std::size_t k = 1; k < out_dims.size(); ++k) stride[k] = stride[k - 1] * out_dims[k - 1];
    double* dst = out.data();
    for (std::size_t e = 0; e < s.nnz(); ++e) {
        std::size_t base = 0;
        for (std::size_t k = 0; k < out_dims.size(); ++k)
            if (k != mode) base += s.coord(e, k) * stride[k];
        const double v = s.value(e);
        const auto col = static_cast<Eigen::Index>(s.coord(e, mode));
        for (std::size_t j = 0; j < rows; ++j)
            dst[base + j * stride[mode]] += v * b(static_cast<Eigen::Index>(j), col);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

inline double frob_norm(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

inline double frob_norm(const DenseTensor& t) { return frob_norm(t.values()); }
inline double frob_norm(const SparseTensor& s) { return frob_norm(s.values()); }

/// ||a - b||_F for equally shaped tensors.
inline double frob_distance(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims())
        throw ShapeError("shape mismatch: " + dims_to_string(a.dims()) + " vs " + dims_to_string(b.dims()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Structured matrix products
// ---------------------------------------------------------------------------

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Column-wise Kronecker product.
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()) + ")");
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index k = 0; k < a.cols(); ++k)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
    return out;
}

// ---------------------------------------------------------------------------
// Sparse helpers
// ---------------------------------------------------------------------------

inline DenseTensor densify(const SparseTensor& s) {
    DenseTensor t(s.dims());
    std::vector<std::size_t> stride(s.order(), 1);
    for (std::size_t k = 1; k < s.order(); ++k) stride[k] = stride[k - 1] * s.dim(k - 1);
    for (std::size_t e = 0; e < s.nnz(); ++e) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < s.order(); ++k) off += s.coord(e, k) * stride[k];
        t[off] = s.value(e);
    }
    return t;
}

/// Column index of entry e in the mode-`mode` unfolding.
inline std::size_t unfolding_column(const SparseTensor& s, std::size_t e, std::size_t mode) {
    std::size_t col = 0, stride = 1;
    for (std::size_t k = 0; k < s.order(); ++k) {
        if (k == mode) continue;
        col += s.coord(e, k) * stride;
        stride *= s.dim(k);
    }
    return col;
}

/// unfold(densify(s), mode) * m without materializing the dense unfolding.
inline Matrix sparse_unfold_times(const SparseTensor& s, std::size_t mode, const Matrix& m) {
    check_mode(s.dims(), mode);
    const std::size_t other = num_elements(s.dims()) / s.dim(mode);
    if (static_cast<std::size_t>(m.rows()) != other)
        throw ShapeError("sparse_unfold_times: matrix has " + std::to_string(m.rows()) + " rows, expected " +
                         std::to_string(other));
    Matrix out_t = Matrix::Zero(m.cols(), static_cast<Eigen::Index>(s.dim(mode)));
    for (std::size_t e = 0; e < s.nnz(); ++e) {
        const auto row = static_cast<Eigen::Index>(s.coord(e, mode));
        const auto col = static_cast<Eigen::Index>(unfolding_column(s, e, mode));
        out_t.col(row) += s.value(e) * m.row(col).transpose();
    }
    return out_t.transpose();
}

}  // namespace rtucker
