#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ttmc {

// splitmix64 finalizer; used to derive independent child seeds so that
// per-item streams do not depend on worker count or iteration order.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream + 1));
}

// Deterministic random stream. std::mt19937_64 supplies the raw bits
// (bit-exact per the standard); all variate transforms are implemented
// here so results do not depend on the standard library's unspecified
// distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on (0, 1].
    double uniform01() {
        return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= lim);
        return x % n;
    }

    // Standard normal via Box-Muller; second variate cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
    // G(a) = G(a+1) * U^(1/a).
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Dirichlet(alpha) sample written into out (same length as alpha).
    void dirichlet(std::span<const double> alpha, std::span<double> out) {
        double sum = 0.0;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            out[k] = gamma(alpha[k]);
            sum += out[k];
        }
        if (sum <= 0.0) {
            // all components underflowed; put the mass on the largest alpha
            std::size_t best = 0;
            for (std::size_t k = 1; k < alpha.size(); ++k)
                if (alpha[k] > alpha[best]) best = k;
            for (std::size_t k = 0; k < alpha.size(); ++k) out[k] = 0.0;
            out[best] = 1.0;
            return;
        }
        for (std::size_t k = 0; k < alpha.size(); ++k) out[k] /= sum;
    }

    // Index k with probability weights[k] / sum(weights).
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        const double r = uniform01() * total;
        double cum = 0.0;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            cum += weights[k];
            if (r <= cum) return static_cast<int>(k);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    // Fisher-Yates shuffle of idx.
    void shuffle(std::span<int> idx) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            const std::size_t j = uniform_int(i);
            std::swap(idx[i - 1], idx[j]);
        }
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ttmc
