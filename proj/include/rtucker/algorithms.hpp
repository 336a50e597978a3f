#pragma once

// Name-based dispatch over the decomposition algorithms.

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rtucker/testgen.hpp"
#include "rtucker/tucker.hpp"

namespace rtucker {

enum class Algorithm { tucker_svd, tucker_svd_batch, hooi, hosvd, ran_tucker, kr_tucker };

inline const std::vector<std::pair<Algorithm, std::string>>& algorithm_names() {
    static const std::vector<std::pair<Algorithm, std::string>> names{
        {Algorithm::tucker_svd, "tucker-svd"}, {Algorithm::tucker_svd_batch, "tucker-svd-batch"},
        {Algorithm::hooi, "hooi"},             {Algorithm::hosvd, "hosvd"},
        {Algorithm::ran_tucker, "ran-tucker"}, {Algorithm::kr_tucker, "kr-tucker"},
    };
    return names;
}

inline std::string algorithm_name(Algorithm a) {
    for (const auto& [k, name] : algorithm_names())
        if (k == a) return name;
    return "?";
}

inline std::string algorithm_list() {
    std::string out;
    for (const auto& [k, name] : algorithm_names()) out += (out.empty() ? "" : ", ") + name;
    return out;
}

inline Algorithm parse_algorithm(const std::string& name) {
    for (const auto& [k, n] : algorithm_names())
        if (n == name) return k;
    throw std::invalid_argument("unknown algorithm '" + name + "'; valid: " + algorithm_list());
}

/// Truncated HOSVD is the only algorithm whose output ignores the seed.
inline bool uses_seed(Algorithm a) { return a != Algorithm::hosvd; }

struct RunOptions {
    std::vector<std::size_t> ranks;
    std::size_t oversampling = 10;
    std::uint64_t seed = 0;
    std::size_t hooi_max_iters = 50;
    double hooi_tol = 1e-4;
};

template <class Tensor>
TuckerApprox run_algorithm(Algorithm alg, const Tensor& a, const RunOptions& o) {
    switch (alg) {
        case Algorithm::tucker_svd: return tucker_svd_seq(a, default_plan(a.dims(), o.ranks, o.oversampling, o.seed));
        case Algorithm::tucker_svd_batch:
            return tucker_svd_batch(a, default_plan(a.dims(), o.ranks, o.oversampling, o.seed));
        case Algorithm::hooi: {
            HooiOptions h;
            h.max_iters = o.hooi_max_iters;
            h.tol = o.hooi_tol;
            h.seed = o.seed;
            return hooi(a, o.ranks, h);
        }
        case Algorithm::hosvd: return truncated_hosvd(a, o.ranks);
        case Algorithm::ran_tucker: return ran_tucker(a, baseline_plan(a.dims(), o.ranks, o.oversampling, o.seed));
        case Algorithm::kr_tucker: return kr_tucker(a, baseline_plan(a.dims(), o.ranks, o.oversampling, o.seed));
    }
    throw std::invalid_argument("unknown algorithm");
}

inline TuckerApprox run_algorithm(Algorithm alg, const AnyTensor& a, const RunOptions& o) {
    return std::visit([&](const auto& t) { return run_algorithm(alg, t, o); }, a);
}

}  // namespace rtucker
