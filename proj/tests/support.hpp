#pragma once

#include <utility>
#include <vector>

#include "declutter/core.hpp"
#include "declutter/predictor.hpp"
#include "declutter/setcover.hpp"

namespace declutter::testsupport {

struct RandomInstance {
    ProbMatrix P;
    std::vector<std::pair<int, int>> conflicts;
};

// Random covering instance: n x m probabilities uniform in [0, p_max], each
// unordered candidate pair conflicting with the given density. zero_rate
// optionally sparsifies the matrix.
inline RandomInstance make_random_instance(Rng& rng, std::size_t n_max, std::size_t m_max, double p_max,
                                           double conflict_density, double zero_rate = 0.0) {
    RandomInstance out;
    const std::size_t n = 1 + rng.uniform_index(n_max);
    const std::size_t m = 1 + rng.uniform_index(m_max);
    out.P = ProbMatrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double p = rng.uniform(0.0, p_max);
            if (zero_rate > 0.0 && rng.bernoulli(zero_rate)) p = 0.0;
            out.P.at(i, j) = p;
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.bernoulli(conflict_density))
                out.conflicts.push_back({static_cast<int>(i), static_cast<int>(j)});
    return out;
}

}  // namespace declutter::testsupport
