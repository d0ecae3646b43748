#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "locval/core.hpp"

namespace locval::doe {

/// Plain random Latin hypercube on [0,1]^d: every column places exactly one
/// point in each of the n strata [k/n, (k+1)/n), with independent column
/// permutations and uniform offsets inside each stratum.
inline Matrix lhs(int n, int d, Rng& rng) {
    LOCVAL_REQUIRE(n >= 1, ParameterError, "lhs needs n >= 1");
    LOCVAL_REQUIRE(d >= 1, ParameterError, "lhs needs d >= 1");
    Matrix out(n, d);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        for (int i = 0; i < n; ++i) {
            double v = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / n;
            // uniform() may round up to the upper stratum edge
            out(i, j) = std::min(v, std::nextafter((perm[static_cast<std::size_t>(i)] + 1.0) / n, 0.0));
        }
    }
    return out;
}

/// min(5000 d, 50000) unless overridden.
inline std::size_t candidate_count(int d, std::optional<std::size_t> override_count = std::nullopt) {
    LOCVAL_REQUIRE(d >= 1, ParameterError, "candidate set needs d >= 1");
    if (override_count) {
        LOCVAL_REQUIRE(*override_count > 0, ParameterError, "candidate override must be positive");
        return *override_count;
    }
    return std::min<std::size_t>(5000u * static_cast<std::size_t>(d), 50000u);
}

/// Fresh i.i.d. uniform candidate set.
inline Matrix candidates(int d, Rng& rng, std::optional<std::size_t> override_count = std::nullopt) {
    const auto n = static_cast<Eigen::Index>(candidate_count(d, override_count));
    Matrix out(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = rng.uniform();
    return out;
}

}  // namespace locval::doe
