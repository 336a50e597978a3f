#pragma once

// Command-line driver: gen, decompose, bench, probe.
//
// Exit codes: 0 success, 1 invariant failure or runtime fault, 2 parse or
// shape error, 3 target rank above a tensor extent.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtucker/algorithms.hpp"
#include "rtucker/bench.hpp"
#include "rtucker/errors.hpp"
#include "rtucker/io.hpp"
#include "rtucker/testgen.hpp"
#include "rtucker/tucker.hpp"

namespace rtucker::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;
inline constexpr int kBadInput = 2;
inline constexpr int kBadRank = 3;

/// One rank per mode; a single value applies to every mode.
inline std::vector<std::size_t> expand_ranks(const std::vector<std::size_t>& ranks, std::size_t order) {
    if (ranks.size() == 1) return std::vector<std::size_t>(order, ranks[0]);
    if (ranks.size() != order)
        throw ShapeError("field 'rank': expected 1 or " + std::to_string(order) + " values, got " +
                         std::to_string(ranks.size()));
    return ranks;
}

inline std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ",") + format_double(x);
    return out;
}

struct GenArgs {
    std::string family;
    std::vector<std::size_t> dims;
    std::uint64_t seed = 0;
    double snr = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> core;
    std::size_t nnz = 0;
    std::vector<double> densities;
    std::string output;
};

struct DecomposeArgs {
    std::string input;
    std::string algorithm = "tucker-svd";
    std::vector<std::size_t> rank;
    std::size_t oversampling = 10;
    std::uint64_t seed = 0;
    std::vector<std::size_t> order;
    std::size_t hooi_max_iters = 50;
    double hooi_tol = 1e-4;
    std::string output;
};

struct BenchArgs {
    std::string config;
    std::string output = "bench_out";
};

struct ProbeArgs {
    std::string input;
    std::string family = "reciprocal-sum";
    std::vector<std::size_t> dims{60, 60, 60};
    std::vector<std::size_t> rank{10};
    std::size_t oversampling = 10;
    std::size_t trials = 50;
    double cap = 10.0;
    std::uint64_t seed = 0;
};

inline FamilyParams family_params(const GenArgs& g) {
    FamilyParams p;
    p.dims = g.dims;
    p.seed = g.seed;
    p.snr_db = g.snr;
    p.core_dims = g.core;
    p.nnz = g.nnz;
    p.densities = g.densities;
    return p;
}

inline int cmd_gen(const GenArgs& g, std::ostream& out) {
    const AnyTensor t = generate_family(parse_family(g.family), family_params(g));
    save_tensor(g.output, t);
    out << "wrote " << g.output << " (" << g.family << ", " << dims_to_string(dims_of(t)) << ")\n";
    return kOk;
}

inline int cmd_decompose(const DecomposeArgs& d, std::ostream& out, std::ostream& err) {
    const Algorithm alg = parse_algorithm(d.algorithm);
    const AnyTensor a = load_tensor(d.input);
    const Dims& dims = dims_of(a);
    RunOptions o{expand_ranks(d.rank, dims.size()), d.oversampling, d.seed, d.hooi_max_iters, d.hooi_tol};
    check_target_rank(dims, o.ranks);

    std::optional<TuckerApprox> approx;
    double secs = 0.0;
    if (!d.order.empty()) {
        if (alg != Algorithm::tucker_svd && alg != Algorithm::tucker_svd_batch)
            throw std::invalid_argument("field 'order': processing order applies to tucker-svd only");
        SketchPlan plan = default_plan(dims, o.ranks, o.oversampling, o.seed);
        plan.order.clear();
        for (std::size_t p : d.order) {
            if (p == 0) throw ShapeError("field 'order': modes are numbered from 1");
            plan.order.push_back(p - 1);
        }
        secs = time_call([&] {
            approx.emplace(std::visit(
                [&](const auto& t) {
                    return alg == Algorithm::tucker_svd ? tucker_svd_seq(t, plan) : tucker_svd_batch(t, plan);
                },
                a));
        });
    } else {
        secs = time_call([&] { approx.emplace(run_algorithm(alg, a, o)); });
    }
    const double r = std::visit([&](const auto& t) { return rlne(t, *approx); }, a);
    for (const std::string& w : approx->warnings) err << "warning: " << w << '\n';
    out << "rlne=" << format_double(r) << " fit=" << format_double(1.0 - r) << " time_s=" << format_double(secs)
        << '\n';
    if (!d.output.empty()) {
        std::string ranks;
        for (std::size_t x : o.ranks) ranks += (ranks.empty() ? "" : ",") + std::to_string(x);
        save_tucker(d.output, *approx,
                    {{"algorithm", d.algorithm},
                     {"ranks", ranks},
                     {"K", std::to_string(d.oversampling)},
                     {"seed", std::to_string(d.seed)},
                     {"rlne", format_double(r)},
                     {"fit", format_double(1.0 - r)},
                     {"time_s", format_double(secs)},
                     {"warnings", std::to_string(approx->warnings.size())}});
    }
    return kOk;
}

inline int cmd_bench(const BenchArgs& b, std::ostream& out, std::ostream& err) {
    const BenchConfig cfg = load_bench_config(b.config);
    const SuiteResult res = run_suite(cfg);
    const std::filesystem::path dir(b.output);
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "results.csv");
        write_csv(csv, res.records);
    }
    emit_plots(res.records, dir / "plots");
    out << "records=" << res.records.size() << " violations=" << res.violations.size() << " csv="
        << (dir / "results.csv").string() << '\n';
    for (const std::string& v : res.violations) err << "violation: " << v << '\n';
    return res.ok() ? kOk : kFailed;
}

inline int cmd_probe(const ProbeArgs& p, std::ostream& out) {
    FamilyParams fp;
    fp.dims = p.dims;
    fp.seed = p.seed;
    const AnyTensor a = p.input.empty() ? generate_family(parse_family(p.family), fp) : load_tensor(p.input);
    const auto ranks = expand_ranks(p.rank, dims_of(a).size());
    const BoundProbe probe = probe_bound(a, ranks, p.oversampling, p.trials, p.cap, p.seed);
    out << "deltas=" << join(probe.deltas) << " delta_sum=" << format_double(probe.delta_sum) << '\n';
    if (probe.degenerate) {
        out << "degenerate=true max_error=" << format_double(*std::max_element(probe.errors.begin(), probe.errors.end()))
            << '\n';
    } else {
        std::vector<double> sorted = probe.ratios;
        std::sort(sorted.begin(), sorted.end());
        out << "degenerate=false ratio_min=" << format_double(sorted.front())
            << " ratio_median=" << format_double(median_of(sorted)) << " ratio_max=" << format_double(sorted.back())
            << '\n';
    }
    out << "trials=" << probe.trials << " cap=" << format_double(probe.cap)
        << " success_fraction=" << format_double(probe.success_fraction)
        << " floor_violations=" << probe.floor_violations << '\n';
    return probe.floor_violations == 0 ? kOk : kFailed;
}

/// Parses argv and runs one subcommand; all output goes to out / err.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Randomized Tucker decompositions: generation, decomposition, benchmarks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rtucker 1.0.0");

    GenArgs g;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic tensor file");
    gen->add_option("--family", g.family, "One of: " + family_list())->required();
    gen->add_option("--dims", g.dims, "Extents, e.g. --dims 60 60 60")->required();
    gen->add_option("--seed", g.seed, "Random seed");
    gen->add_option("--snr", g.snr, "SNR in dB for tucker-noise (default: no noise)");
    gen->add_option("--core", g.core, "Core extents for tucker-noise / exact-rank");
    gen->add_option("--nnz", g.nnz, "Nonzeros for random-sparse");
    gen->add_option("--densities", g.densities, "Per-mode densities for sparse-outer");
    gen->add_option("-o,--output", g.output, "Output tensor file")->required();

    DecomposeArgs d;
    auto* dec = app.add_subcommand("decompose", "Decompose a tensor file");
    dec->add_option("-i,--input", d.input, "Input tensor file")->required();
    dec->add_option("-a,--algorithm", d.algorithm, "One of: " + algorithm_list());
    dec->add_option("-r,--rank", d.rank, "Target rank, one value or one per mode")->required();
    dec->add_option("-K,--oversampling", d.oversampling, "Oversampling K");
    dec->add_option("--seed", d.seed, "Random seed");
    dec->add_option("--order", d.order, "Processing order for tucker-svd, 1-based modes");
    dec->add_option("--hooi-max-iters", d.hooi_max_iters, "HOOI sweep limit");
    dec->add_option("--hooi-tol", d.hooi_tol, "HOOI fit-change tolerance");
    dec->add_option("-o,--output", d.output, "Directory for core, factors and metrics");

    BenchArgs b;
    auto* bench = app.add_subcommand("bench", "Run a benchmark suite from a config file");
    bench->add_option("-c,--config", b.config, "key=value config file")->required();
    bench->add_option("-o,--output", b.output, "Output directory");

    ProbeArgs p;
    auto* probe = app.add_subcommand("probe", "Compare achieved errors with unfolding tail energies");
    probe->add_option("-i,--input", p.input, "Input tensor file (default: generate --family)");
    probe->add_option("--family", p.family, "Family to generate when no input is given");
    probe->add_option("--dims", p.dims, "Extents for the generated family");
    probe->add_option("-r,--rank", p.rank, "Target rank, one value or one per mode");
    probe->add_option("-K,--oversampling", p.oversampling, "Oversampling K");
    probe->add_option("--trials", p.trials, "Number of seeds");
    probe->add_option("--cap", p.cap, "Ratio cap for the success fraction");
    probe->add_option("--seed", p.seed, "First seed (also the data seed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion& e) {
        out << "rtucker 1.0.0\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    }

    try {
        if (*gen) return cmd_gen(g, out);
        if (*dec) return cmd_decompose(d, out, err);
        if (*bench) return cmd_bench(b, out, err);
        if (*probe) return cmd_probe(p, out);
    } catch (const RankError& e) {
        err << "error: " << e.what() << '\n';
        return kBadRank;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailed;
    }
    return kFailed;
}

}  // namespace rtucker::cli
