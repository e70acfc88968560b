#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "holdtime/chain.hpp"

namespace fixtures {

using holdtime::ChainSpec;

// q_01 = 1, q_10 = 2.
inline ChainSpec single_interior() { return ChainSpec::create(2, {{0, 1, 1.0}, {1, 0, 2.0}}); }

// The origin rings at rate r and the chain comes straight back.
inline ChainSpec poisson_chain(double r) { return ChainSpec::create(1, {{0, 0, r}}); }

inline ChainSpec transient_walk(std::size_t n = 60) { return holdtime::build_birth_death(2.0, 1.0, n, {{1, 1.0}}); }

inline ChainSpec recurrent_walk(std::size_t n) { return holdtime::build_birth_death(1.0, 2.0, n, {{1, 1.0}}); }

inline ChainSpec four_state() {
    return ChainSpec::create(4, {{0, 1, 1.0},
                                 {0, 2, 0.5},
                                 {1, 2, 1.0},
                                 {2, 1, 0.5},
                                 {1, 3, 0.7},
                                 {3, 1, 1.0},
                                 {1, 0, 1.5},
                                 {2, 0, 0.8},
                                 {3, 2, 0.6}});
}

// b_i = d_i = 1/i on 1..n.
inline ChainSpec equal_decreasing(std::size_t n) {
    std::vector<double> b(n - 1), d(n);
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n) b[i - 1] = 1.0 / static_cast<double>(i);
        d[i - 1] = 1.0 / static_cast<double>(i);
    }
    return holdtime::build_birth_death(b, d, n, {{1, 1.0}});
}

// Plain bisection for f increasing through zero on [lo, hi]; kept separate
// from the library's root finders so it can serve as an oracle.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Random irreducible chain on n states: a cycle through every state plus
// random extra edges, so both the chain and its interior are strongly connected.
inline ChainSpec random_chain(std::mt19937_64& rng, std::size_t n, double theta = 1.0) {
    std::uniform_real_distribution<double> rate(0.2, 3.0);
    std::bernoulli_distribution extra(0.35);
    std::vector<holdtime::RateEntry> entries;
    std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
    auto add = [&](std::size_t i, std::size_t j) {
        if (i == j || used[i][j]) return;
        used[i][j] = true;
        entries.push_back({i, j, rate(rng)});
    };
    add(0, 1);
    add(n - 1, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        add(i, i + 1);
        add(i + 1, i);
    }
    if (n == 2) add(1, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (extra(rng)) add(i, j);
    return ChainSpec::create(n, entries, theta);
}

}  // namespace fixtures
