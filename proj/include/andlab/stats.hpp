#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace andlab {

struct Proportion {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
};

// Wilson score interval; z = 1.96 gives ~95% coverage.
inline Proportion wilson(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054) {
    Proportion p;
    p.successes = successes;
    p.trials = trials;
    if (trials == 0) return p;
    const double n = double(trials);
    const double ph = double(successes) / n;
    const double z2 = z * z;
    const double den = 1.0 + z2 / n;
    const double centre = (ph + z2 / (2 * n)) / den;
    const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / den;
    p.estimate = ph;
    p.lo = std::max(0.0, std::min(ph, centre - half));
    p.hi = std::min(1.0, std::max(ph, centre + half));
    return p;
}

}  // namespace andlab
