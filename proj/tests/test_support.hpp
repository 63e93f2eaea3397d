#pragma once

#include <cmath>
#include <cstdint>

#include "tilekit/performance.hpp"

// Deterministic generators for property tests, independent of library
// internals.
namespace testsup {

struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed ^ 0x2545f4914f6cdd1dULL) {}

    std::uint64_t next() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int pick(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

// Strictly interior random performance (flat over the simplex).
inline tilekit::Performance random_performance(Rng& rng) {
    double e0 = -std::log(1.0 - rng.uniform());
    double e1 = -std::log(1.0 - rng.uniform());
    double e2 = -std::log(1.0 - rng.uniform());
    double e3 = -std::log(1.0 - rng.uniform());
    double s = e0 + e1 + e2 + e3;
    return tilekit::Performance{e0 / s, e1 / s, e2 / s, e3 / s};
}

} // namespace testsup
