#pragma once

#include <cmath>

namespace ttmc {

// Natural log of the Gamma function, x > 0.
inline double log_gamma(double x) { return std::lgamma(x); }

// Digamma function psi(x) = d/dx log Gamma(x), x > 0.
//
// Small arguments are shifted up with psi(x) = psi(x + 1) - 1/x until
// x >= 10, then the Bernoulli asymptotic series is applied. Absolute
// accuracy is ~1e-14 over (0, inf), which is more than the 1e-12 the
// estimation code needs.
inline double digamma(double x) {
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    double series = inv2 * (1.0 / 12.0
                  - inv2 * (1.0 / 120.0
                  - inv2 * (1.0 / 252.0
                  - inv2 * (1.0 / 240.0
                  - inv2 * (1.0 / 132.0
                  - inv2 * (691.0 / 32760.0
                  - inv2 * (1.0 / 12.0)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

}  // namespace ttmc
