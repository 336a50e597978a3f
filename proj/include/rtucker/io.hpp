#pragma once

// Text formats. Dense: "dense N", the dims, then every value on its own line
// in first-mode-fastest order. Sparse: "sparse N nnz", the dims, then one
// "i1 ... iN value" line per entry with 1-based indices. Values are written
// with the shortest representation that reads back to the same double.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rtucker/errors.hpp"
#include "rtucker/tensor.hpp"
#include "rtucker/testgen.hpp"
#include "rtucker/tucker.hpp"

namespace rtucker {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

/// Whitespace tokenizer that reports line numbers in its errors.
class Tokens {
public:
    explicit Tokens(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    /// The next line split into fields; false at end of input.
    bool line(std::vector<std::string_view>& fields) {
        if (!std::getline(in_, text_)) return false;
        ++line_no_;
        if (!text_.empty() && text_.back() == '\r') text_.pop_back();
        fields.clear();
        std::size_t i = 0;
        while (i < text_.size()) {
            while (i < text_.size() && (text_[i] == ' ' || text_[i] == '\t')) ++i;
            const std::size_t start = i;
            while (i < text_.size() && text_[i] != ' ' && text_[i] != '\t') ++i;
            if (i > start) fields.emplace_back(text_.data() + start, i - start);
        }
        return true;
    }

    void require_line(std::vector<std::string_view>& fields, const std::string& what) {
        if (!line(fields)) fail("unexpected end of input, expected " + what);
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(source_ + ":" + std::to_string(line_no_) + ": " + msg);
    }

    std::size_t to_size(std::string_view s, const std::string& field) const {
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            fail("field '" + field + "': expected a non-negative integer, got '" + std::string(s) + "'");
        return v;
    }

    double to_double(std::string_view s, const std::string& field) const {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            fail("field '" + field + "': expected a number, got '" + std::string(s) + "'");
        return v;
    }

private:
    std::istream& in_;
    std::string source_;
    std::string text_;
    std::size_t line_no_ = 0;
};

inline void write_dims(std::ostream& out, const Dims& dims) {
    for (std::size_t n = 0; n < dims.size(); ++n) out << (n ? " " : "") << dims[n];
    out << '\n';
}

}  // namespace detail

inline void write_tensor(std::ostream& out, const DenseTensor& t) {
    out << "dense " << t.order() << '\n';
    detail::write_dims(out, t.dims());
    for (double v : t.values()) out << format_double(v) << '\n';
}

inline void write_tensor(std::ostream& out, const SparseTensor& s) {
    out << "sparse " << s.order() << ' ' << s.nnz() << '\n';
    detail::write_dims(out, s.dims());
    for (std::size_t e = 0; e < s.nnz(); ++e) {
        for (std::size_t k = 0; k < s.order(); ++k) out << s.coord(e, k) + 1 << ' ';
        out << format_double(s.value(e)) << '\n';
    }
}

inline void write_tensor(std::ostream& out, const AnyTensor& t) {
    std::visit([&](const auto& x) { write_tensor(out, x); }, t);
}

inline AnyTensor read_tensor(std::istream& in, const std::string& source = "<input>") {
    detail::Tokens tok(in, source);
    std::vector<std::string_view> f;
    tok.require_line(f, "header");
    if (f.empty() || (f[0] != "dense" && f[0] != "sparse")) tok.fail("field 'kind': expected 'dense' or 'sparse'");
    const bool sparse = f[0] == "sparse";
    if (f.size() != (sparse ? 3u : 2u))
        tok.fail(sparse ? "header must be 'sparse N nnz'" : "header must be 'dense N'");
    const std::size_t order = tok.to_size(f[1], "N");
    if (order == 0) tok.fail("field 'N': order must be at least 1");
    const std::size_t nnz = sparse ? tok.to_size(f[2], "nnz") : 0;

    tok.require_line(f, "dims");
    if (f.size() != order) tok.fail("field 'dims': expected " + std::to_string(order) + " extents");
    Dims dims;
    for (std::size_t n = 0; n < order; ++n) {
        dims.push_back(tok.to_size(f[n], "dims"));
        if (dims.back() == 0) tok.fail("field 'dims': extents must be positive");
    }

    if (!sparse) {
        const std::size_t total = num_elements(dims);
        std::vector<double> values;
        values.reserve(total);
        for (std::size_t i = 0; i < total; ++i) {
            tok.require_line(f, "value " + std::to_string(i + 1) + " of " + std::to_string(total));
            if (f.size() != 1) tok.fail("field 'value': expected one number per line");
            values.push_back(tok.to_double(f[0], "value"));
        }
        while (tok.line(f))
            if (!f.empty()) tok.fail("trailing data after " + std::to_string(total) + " values");
        return DenseTensor(std::move(dims), std::move(values));
    }

    std::vector<std::vector<std::size_t>> coords;
    std::vector<double> values;
    for (std::size_t e = 0; e < nnz; ++e) {
        tok.require_line(f, "entry " + std::to_string(e + 1) + " of " + std::to_string(nnz));
        if (f.size() != order + 1) tok.fail("field 'entry': expected " + std::to_string(order) + " indices and a value");
        std::vector<std::size_t> idx(order);
        for (std::size_t k = 0; k < order; ++k) {
            const std::size_t i = tok.to_size(f[k], "index");
            if (i == 0 || i > dims[k])
                tok.fail("field 'index': " + std::to_string(i) + " outside 1.." + std::to_string(dims[k]) + " in mode " +
                         std::to_string(k + 1));
            idx[k] = i - 1;
        }
        coords.push_back(std::move(idx));
        values.push_back(tok.to_double(f[order], "value"));
    }
    while (tok.line(f))
        if (!f.empty()) tok.fail("trailing data after " + std::to_string(nnz) + " entries");
    try {
        return SparseTensor(std::move(dims), coords, std::move(values));
    } catch (const ShapeError& e) {
        throw ParseError(source + ": " + e.what());
    }
}

inline void save_tensor(const std::filesystem::path& path, const AnyTensor& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_tensor(out, t);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline AnyTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_tensor(in, path.string());
}

// ---------------------------------------------------------------------------
// Matrices and Tucker archives
// ---------------------------------------------------------------------------

/// "rows cols" then row-major values, one per line.
inline void write_matrix(std::ostream& out, const Matrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << format_double(m(i, j)) << '\n';
}

inline Matrix read_matrix(std::istream& in, const std::string& source = "<matrix>") {
    detail::Tokens tok(in, source);
    std::vector<std::string_view> f;
    tok.require_line(f, "'rows cols' header");
    if (f.size() != 2) tok.fail("header must be 'rows cols'");
    const std::size_t rows = tok.to_size(f[0], "rows"), cols = tok.to_size(f[1], "cols");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            tok.require_line(f, "matrix value");
            if (f.size() != 1) tok.fail("field 'value': expected one number per line");
            m(i, j) = tok.to_double(f[0], "value");
        }
    return m;
}

/// Writes `core`, `factor_1` ... `factor_N` and `metrics` into dir.
inline void save_tucker(const std::filesystem::path& dir, const TuckerApprox& t,
                        const std::vector<std::pair<std::string, std::string>>& metrics = {}) {
    std::filesystem::create_directories(dir);
    save_tensor(dir / "core", t.core);
    for (std::size_t n = 0; n < t.factors.size(); ++n) {
        std::ofstream out(dir / ("factor_" + std::to_string(n + 1)));
        if (!out) throw std::runtime_error("cannot write factor file in " + dir.string());
        write_matrix(out, t.factors[n]);
    }
    std::ofstream out(dir / "metrics");
    if (!out) throw std::runtime_error("cannot write metrics in " + dir.string());
    for (const auto& [k, v] : metrics) out << k << '=' << v << '\n';
}

inline TuckerApprox load_tucker(const std::filesystem::path& dir) {
    const AnyTensor core = load_tensor(dir / "core");
    if (!std::holds_alternative<DenseTensor>(core)) throw ParseError((dir / "core").string() + ": core must be dense");
    TuckerApprox t{std::get<DenseTensor>(core), {}, {}, {}};
    for (std::size_t n = 0; n < t.core.order(); ++n) {
        const auto path = dir / ("factor_" + std::to_string(n + 1));
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open " + path.string());
        t.factors.push_back(read_matrix(in, path.string()));
        if (static_cast<std::size_t>(t.factors.back().cols()) != t.core.dim(n))
            throw ParseError(path.string() + ": column count does not match the core");
        t.source_dims.push_back(static_cast<std::size_t>(t.factors.back().rows()));
    }
    return t;
}

/// key=value lines; blank lines and '#' comments are skipped.
inline std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& source) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source + ":" + std::to_string(no) + ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ParseError(source + ":" + std::to_string(no) + ": empty key");
        if (!out.emplace(key, trim(t.substr(eq + 1))).second)
            throw ParseError(source + ":" + std::to_string(no) + ": duplicate key '" + key + "'");
    }
    return out;
}

}  // namespace rtucker
