#pragma once

// Benchmark runner, invariant checks, bound probe and plot data.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rtucker/algorithms.hpp"
#include "rtucker/errors.hpp"
#include "rtucker/io.hpp"
#include "rtucker/linalg.hpp"
#include "rtucker/testgen.hpp"
#include "rtucker/tucker.hpp"

namespace rtucker {

inline constexpr const char* kCsvHeader = "family,dims,algorithm,P,seed,rlne,fit,wall_time_s,extra";

struct BenchRecord {
    std::string family;
    Dims dims;
    std::string algorithm;
    std::size_t P = 0;
    std::uint64_t seed = 0;
    double rlne = 0.0;
    double fit = 1.0;
    double wall_time_s = 0.0;
    std::string extra;
};

enum class FaultInjection { none, inequality13, oracle_floor };

struct BenchConfig {
    std::vector<Family> families{Family::reciprocal_sum};
    std::vector<Algorithm> algorithms{Algorithm::tucker_svd};
    std::vector<std::size_t> ranks{5};
    std::vector<std::uint64_t> seeds{0};
    Dims dims{60, 60, 60};
    std::vector<double> snr_db{std::numeric_limits<double>::infinity()};
    Dims noise_core;  // empty: default_core_dims
    std::size_t nnz = 0;
    std::vector<double> densities;
    std::size_t oversampling = 10;
    std::size_t repeats = 3;
    std::uint64_t data_seed = 0;
    std::size_t hooi_max_iters = 50;
    double hooi_tol = 1e-4;
    FaultInjection fault = FaultInjection::none;
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& key) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("config key '" + key + "': expected a non-negative integer, got '" + s + "'");
    return v;
}

inline double parse_real(const std::string& s, const std::string& key) {
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("config key '" + key + "': expected a number, got '" + s + "'");
    return v;
}

/// "0,3,5-8" -> 0 3 5 6 7 8.
inline std::vector<std::uint64_t> parse_uint_list(const std::string& s, const std::string& key) {
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_list(s)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(parse_uint(item, key));
            continue;
        }
        const auto lo = parse_uint(item.substr(0, dash), key), hi = parse_uint(item.substr(dash + 1), key);
        if (hi < lo) throw ParseError("config key '" + key + "': empty range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (out.empty()) throw ParseError("config key '" + key + "': empty list");
    return out;
}

inline Dims parse_dims_string(const std::string& s, const std::string& key) {
    Dims d;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, 'x')) d.push_back(parse_uint(item, key));
    if (d.empty()) throw ParseError("config key '" + key + "': empty dims");
    for (auto x : d)
        if (x == 0) throw ParseError("config key '" + key + "': extents must be positive");
    return d;
}

}  // namespace detail

/// Flat key=value config. Lists are comma separated; integer lists accept
/// ranges like 0-10. Keys: families, algorithms, ranks, seeds, size, order,
/// dims, snr, noise_core, nnz, densities, K, repeats, data_seed,
/// hooi_max_iters, hooi_tol, fault_injection.
inline BenchConfig parse_bench_config(std::istream& in, const std::string& source = "<config>") {
    using namespace detail;
    const auto kv = read_key_values(in, source);
    BenchConfig c;
    std::size_t size = 60, order = 3;
    bool explicit_dims = false;
    for (const auto& [key, value] : kv) {
        try {
            if (key == "families") {
                c.families.clear();
                for (const auto& s : split_list(value)) c.families.push_back(parse_family(s));
            } else if (key == "algorithms") {
                c.algorithms.clear();
                for (const auto& s : split_list(value)) c.algorithms.push_back(parse_algorithm(s));
            } else if (key == "ranks") {
                c.ranks.clear();
                for (auto v : parse_uint_list(value, key)) c.ranks.push_back(v);
            } else if (key == "seeds") {
                c.seeds = parse_uint_list(value, key);
            } else if (key == "size") {
                size = parse_uint(value, key);
            } else if (key == "order") {
                order = parse_uint(value, key);
            } else if (key == "dims") {
                c.dims = parse_dims_string(value, key);
                explicit_dims = true;
            } else if (key == "snr") {
                c.snr_db.clear();
                for (const auto& s : split_list(value)) c.snr_db.push_back(parse_real(s, key));
            } else if (key == "noise_core") {
                c.noise_core = parse_dims_string(value, key);
            } else if (key == "nnz") {
                c.nnz = parse_uint(value, key);
            } else if (key == "densities") {
                c.densities.clear();
                for (const auto& s : split_list(value)) c.densities.push_back(parse_real(s, key));
            } else if (key == "K") {
                c.oversampling = parse_uint(value, key);
            } else if (key == "repeats") {
                c.repeats = parse_uint(value, key);
            } else if (key == "data_seed") {
                c.data_seed = parse_uint(value, key);
            } else if (key == "hooi_max_iters") {
                c.hooi_max_iters = parse_uint(value, key);
            } else if (key == "hooi_tol") {
                c.hooi_tol = parse_real(value, key);
            } else if (key == "fault_injection") {
                if (value == "none") c.fault = FaultInjection::none;
                else if (value == "inequality13") c.fault = FaultInjection::inequality13;
                else if (value == "oracle_floor") c.fault = FaultInjection::oracle_floor;
                else throw ParseError("config key 'fault_injection': expected none, inequality13 or oracle_floor");
            } else {
                throw ParseError("unknown config key '" + key + "'");
            }
        } catch (const ParseError& e) {
            throw ParseError(source + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError(source + ": config key '" + key + "': " + e.what());
        }
    }
    if (!explicit_dims) {
        if (order == 0 || size == 0) throw ParseError(source + ": size and order must be positive");
        c.dims.assign(order, size);
    }
    if (c.families.empty() || c.algorithms.empty() || c.ranks.empty())
        throw ParseError(source + ": families, algorithms and ranks must be non-empty");
    if (c.repeats == 0) throw ParseError(source + ": key 'repeats': must be at least 1");
    return c;
}

inline BenchConfig load_bench_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_bench_config(in, path.string());
}

// ---------------------------------------------------------------------------
// Invariant checks
// ---------------------------------------------------------------------------

/// ||a - a x_1 P_1 ... x_N P_N||^2 against sum_n ||a - a x_n P_n||^2 with
/// P_n = Q_n Q_n^T; every term is a directly computed distance.
struct Inequality13Report {
    double lhs = 0.0;
    std::vector<double> rhs_terms;
    double rhs = 0.0;
    double tolerance = 0.0;
    bool holds() const { return lhs <= rhs + tolerance; }
};

template <class Tensor>
Inequality13Report check_inequality13(const Tensor& a, const TuckerApprox& approx) {
    const DenseTensor dense = detail::as_dense(a);
    if (approx.factors.size() != dense.order()) throw ShapeError("factor count differs from tensor order");
    Inequality13Report r;
    const double norm = frob_norm(dense);
    r.tolerance = 1e-8 * norm * norm;
    for (std::size_t n = 0; n < dense.order(); ++n) {
        const Matrix& q = approx.factors[n];
        const DenseTensor proj = mode_product(mode_product(dense, n, Matrix(q.transpose())), n, q);
        const double d = frob_distance(dense, proj);
        r.rhs_terms.push_back(d * d);
        r.rhs += d * d;
    }
    TuckerApprox full{core_from_factors(dense, approx.factors), approx.factors, dense.dims(), {}};
    const double d = frob_distance(dense, reconstruct(full));
    r.lhs = d * d;
    return r;
}

/// Per-mode singular values of the unfoldings, for oracle floors and bounds.
template <class Tensor>
std::vector<Vector> unfolding_spectra(const Tensor& a) {
    const DenseTensor dense = detail::as_dense(a);
    std::vector<Vector> out;
    for (std::size_t n = 0; n < dense.order(); ++n) out.push_back(singular_values(unfold(dense, n)));
    return out;
}

/// max_n Delta_{mu_n + 1}(A_(n)).
inline double oracle_floor(const std::vector<Vector>& spectra, const std::vector<std::size_t>& ranks) {
    double floor = 0.0;
    for (std::size_t n = 0; n < spectra.size(); ++n) floor = std::max(floor, delta_tail(spectra[n], ranks[n] + 1));
    return floor;
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

struct SuiteResult {
    std::vector<BenchRecord> records;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline std::string dims_label(const Dims& d) { return dims_to_string(d); }

/// Minimum wall time over `repeats` calls; returns the last result.
template <class F>
auto timed_min(std::size_t repeats, F&& f) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<decltype(f())> out;
    for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r)
        best = std::min(best, time_call([&] { out.emplace(f()); }));
    return std::pair{std::move(*out), best};
}

/// One record per family x snr x algorithm x P x seed, in that nesting order.
/// Each record is also checked against the projector inequality, the oracle
/// floor and the Pythagoras identity; failures land in violations.
inline SuiteResult run_suite(const BenchConfig& cfg) {
    SuiteResult out;
    for (Family family : cfg.families) {
        const bool noisy = family == Family::tucker_noise;
        const std::vector<double> snrs = noisy ? cfg.snr_db : std::vector<double>{cfg.snr_db.front()};
        for (double snr : snrs) {
            FamilyParams params;
            params.dims = cfg.dims;
            params.seed = cfg.data_seed;
            params.snr_db = snr;
            params.core_dims = cfg.noise_core;
            params.nnz = cfg.nnz;
            params.densities = cfg.densities;
            const AnyTensor a = generate_family(family, params);
            const std::string extra = noisy ? "snr_db=" + format_double(snr) : "";
            const double norm = norm_of(a);
            const auto spectra = std::visit([](const auto& t) { return unfolding_spectra(t); }, a);
            for (Algorithm alg : cfg.algorithms)
                for (std::size_t p : cfg.ranks) {
                    const std::vector<std::size_t> ranks(cfg.dims.size(), p);
                    const double floor = oracle_floor(spectra, ranks);
                    for (std::uint64_t seed : cfg.seeds) {
                        RunOptions o{ranks, cfg.oversampling, seed, cfg.hooi_max_iters, cfg.hooi_tol};
                        auto [approx, secs] = timed_min(cfg.repeats, [&] { return run_algorithm(alg, a, o); });
                        BenchRecord rec{family_name(family), cfg.dims, algorithm_name(alg), p, seed, 0.0, 0.0, secs, extra};
                        rec.rlne = std::visit([&](const auto& t) { return rlne(t, approx); }, a);
                        rec.fit = 1.0 - rec.rlne;

                        const std::string where = rec.family + (extra.empty() ? "" : " " + extra) + " " + rec.algorithm +
                                                  " P=" + std::to_string(p) + " seed=" + std::to_string(seed);
                        auto ineq = std::visit([&](const auto& t) { return check_inequality13(t, approx); }, a);
                        if (cfg.fault == FaultInjection::inequality13) ineq.lhs += ineq.rhs + 2.0 * ineq.tolerance + 1.0;
                        if (!ineq.holds())
                            out.violations.push_back(where + ": projector inequality fails, lhs=" + format_double(ineq.lhs) +
                                                     " rhs=" + format_double(ineq.rhs));
                        double achieved = rec.rlne * norm;
                        if (cfg.fault == FaultInjection::oracle_floor) achieved = floor - 1.0 - norm;
                        if (achieved < floor - 1e-8 * norm)
                            out.violations.push_back(where + ": error " + format_double(achieved) + " below oracle floor " +
                                                     format_double(floor));
                        const ApproxCheck chk = std::visit([&](const auto& t) { return check_approx(t, approx); }, a);
                        if (!chk.ok())
                            out.violations.push_back(where + ": invariant check failed (orthonormality " +
                                                     format_double(chk.max_orthonormality_error) + ", core " +
                                                     format_double(chk.core_mismatch) + ", pythagoras " +
                                                     format_double(chk.pythagoras_gap) + ")");
                        out.records.push_back(std::move(rec));
                    }
                }
        }
    }
    return out;
}

inline void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
    out << kCsvHeader << '\n';
    for (const BenchRecord& r : records)
        out << r.family << ',' << dims_label(r.dims) << ',' << r.algorithm << ',' << r.P << ',' << r.seed << ','
            << format_double(r.rlne) << ',' << format_double(r.fit) << ',' << format_double(r.wall_time_s) << ','
            << r.extra << '\n';
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct Series {
    std::string algorithm;
    std::vector<std::size_t> P;
    std::vector<double> median_rlne;
    std::vector<double> median_time_s;
};

/// Panels keyed by family (plus the extra column when present), one series
/// per algorithm with medians over seeds, P ascending.
inline std::map<std::string, std::vector<Series>> plot_series(const std::vector<BenchRecord>& records) {
    if (records.empty()) throw std::invalid_argument("no records to plot");
    std::map<std::string, std::map<std::string, std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>>>>
        groups;
    std::map<std::string, std::vector<std::string>> algo_order;
    for (const BenchRecord& r : records) {
        const std::string panel = r.family + (r.extra.empty() ? "" : "_" + r.extra);
        auto& algs = algo_order[panel];
        if (std::find(algs.begin(), algs.end(), r.algorithm) == algs.end()) algs.push_back(r.algorithm);
        auto& cell = groups[panel][r.algorithm][r.P];
        cell.first.push_back(r.rlne);
        cell.second.push_back(r.wall_time_s);
    }
    std::map<std::string, std::vector<Series>> out;
    for (const auto& [panel, by_alg] : groups)
        for (const std::string& alg : algo_order[panel]) {
            Series s{alg, {}, {}, {}};
            for (const auto& [p, cell] : by_alg.at(alg)) {
                s.P.push_back(p);
                s.median_rlne.push_back(median_of(cell.first));
                s.median_time_s.push_back(median_of(cell.second));
            }
            out[panel].push_back(std::move(s));
        }
    return out;
}

namespace detail {

inline std::string file_safe(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return s;
}

/// Minimal line chart; y on a log10 axis when every value is positive.
inline void write_svg(std::ostream& out, const std::string& title, const std::string& ylabel,
                      const std::vector<Series>& series, bool time_axis) {
    const double w = 640, h = 420, left = 70, right = 160, top = 40, bottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    bool positive = true;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.P.size(); ++i) {
            const double y = time_axis ? s.median_time_s[i] : s.median_rlne[i];
            positive = positive && y > 0.0;
            xmin = std::min(xmin, static_cast<double>(s.P[i]));
            xmax = std::max(xmax, static_cast<double>(s.P[i]));
        }
    auto ty = [&](double y) { return positive ? std::log10(y) : y; };
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.P.size(); ++i) {
            const double y = ty(time_axis ? s.median_time_s[i] : s.median_rlne[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (w - left - right); };
    auto py = [&](double y) { return h - bottom - (ty(y) - ymin) / (ymax - ymin) * (h - top - bottom); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (w - right + left) / 2 << "\" y=\"" << h - 12
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">P</text>\n";
    out << "<text x=\"14\" y=\"" << (h - bottom + top) / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
        << (h - bottom + top) / 2 << ")\" text-anchor=\"middle\">" << ylabel << (positive ? " (log10)" : "") << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = colors[k % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.P.size(); ++i)
            out << px(static_cast<double>(s.P[i])) << ','
                << py(time_axis ? s.median_time_s[i] : s.median_rlne[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << w - right + 10 << "\" y=\"" << top + 16 * (k + 1) << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
            << color << "\">" << s.algorithm << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace detail

/// Writes <panel>.csv (algorithm,P,median_rlne,median_wall_time_s) and
/// <panel>_rlne.svg / <panel>_time.svg per panel; returns the paths written.
inline std::vector<std::filesystem::path> emit_plots(const std::vector<BenchRecord>& records,
                                                     const std::filesystem::path& dir) {
    const auto panels = plot_series(records);
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [panel, series] : panels) {
        const std::string stem = detail::file_safe(panel);
        const auto csv = dir / (stem + ".csv");
        std::ofstream out(csv);
        out << "algorithm,P,median_rlne,median_wall_time_s\n";
        for (const Series& s : series)
            for (std::size_t i = 0; i < s.P.size(); ++i)
                out << s.algorithm << ',' << s.P[i] << ',' << format_double(s.median_rlne[i]) << ','
                    << format_double(s.median_time_s[i]) << '\n';
        written.push_back(csv);
        for (bool time_axis : {false, true}) {
            const auto svg = dir / (stem + (time_axis ? "_time.svg" : "_rlne.svg"));
            std::ofstream s(svg);
            detail::write_svg(s, panel, time_axis ? "median wall time [s]" : "median RLNE", series, time_axis);
            written.push_back(svg);
        }
    }
    return written;
}

// ---------------------------------------------------------------------------
// Bound probe
// ---------------------------------------------------------------------------

struct BoundProbe {
    std::vector<double> deltas;  // Delta_{mu_n + 1}(A_(n)) per mode
    double delta_sum = 0.0;
    double norm = 0.0;
    std::vector<double> errors;  // absolute ||a - a_hat|| per trial
    std::vector<double> ratios;  // errors / delta_sum; empty when degenerate
    std::size_t trials = 0;
    double cap = 10.0;
    double success_fraction = 0.0;
    std::size_t floor_violations = 0;
    bool degenerate = false;  // delta_sum <= 1e-10 ||a||
};

/// Runs tucker_svd_seq with seeds first_seed .. first_seed + trials - 1 and
/// compares each error to the tail sum of the unfoldings.
template <class Tensor>
BoundProbe probe_bound(const Tensor& a, const std::vector<std::size_t>& ranks, std::size_t oversampling,
                       std::size_t trials, double cap = 10.0, std::uint64_t first_seed = 0) {
    if (trials == 0) throw std::invalid_argument("trials must be at least 1");
    check_target_rank(a.dims(), ranks);
    BoundProbe p;
    p.trials = trials;
    p.cap = cap;
    p.norm = frob_norm(a);
    const auto spectra = unfolding_spectra(a);
    for (std::size_t n = 0; n < spectra.size(); ++n) {
        p.deltas.push_back(delta_tail(spectra[n], ranks[n] + 1));
        p.delta_sum += p.deltas.back();
    }
    const double floor = *std::max_element(p.deltas.begin(), p.deltas.end());
    p.degenerate = p.delta_sum <= 1e-10 * p.norm;
    std::size_t ok = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const TuckerApprox approx = tucker_svd_seq(a, default_plan(a.dims(), ranks, oversampling, first_seed + t));
        const double err = rlne(a, approx) * p.norm;
        p.errors.push_back(err);
        if (err < floor - 1e-8 * p.norm) ++p.floor_violations;
        if (p.degenerate) {
            if (err > 1e-8 * p.norm)
                throw NumericalFault("tail energies vanish but the achieved error is " + format_double(err));
            ++ok;
            continue;
        }
        p.ratios.push_back(err / p.delta_sum);
        if (p.ratios.back() < cap) ++ok;
    }
    p.success_fraction = static_cast<double>(ok) / static_cast<double>(trials);
    return p;
}

inline BoundProbe probe_bound(const AnyTensor& a, const std::vector<std::size_t>& ranks, std::size_t oversampling,
                              std::size_t trials, double cap = 10.0, std::uint64_t first_seed = 0) {
    return std::visit([&](const auto& t) { return probe_bound(t, ranks, oversampling, trials, cap, first_seed); }, a);
}

}  // namespace rtucker
