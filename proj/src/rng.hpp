#pragma once

#include <cmath>
#include <cstdint>

namespace jumplab {

namespace detail {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

// Counter-based stream: draw i is mix64(key + i*golden), so output depends only
// on (seed, stream, substream, i) and is reproducible under any scheduling.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
        std::uint64_t h = detail::mix64(seed + detail::kGolden);
        h = detail::mix64(h ^ (stream * 0xd1342543de82ef95ULL + detail::kGolden));
        h = detail::mix64(h ^ (substream * 0x2545f4914f6cdd1dULL + detail::kGolden));
        key_ = h;
    }

    std::uint64_t next_u64() { return detail::mix64(key_ + detail::kGolden * ++ctr_); }

    // Uniform on the open interval (0,1).
    double next_unit() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Poisson count; Knuth inversion for small means, Hormann's PTRS otherwise.
    std::uint64_t next_poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 10.0) {
            const double limit = std::exp(-mean);
            std::uint64_t k = 0;
            double p = next_unit();
            while (p > limit) {
                ++k;
                p *= next_unit();
            }
            return k;
        }
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            double u = next_unit() - 0.5;
            double v = next_unit();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return std::uint64_t(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * log_mean - mean - std::lgamma(kf + 1.0))
                return std::uint64_t(kf);
        }
    }

    // Poisson conditioned on being >= 1 (inversion from the shifted CDF).
    std::uint64_t next_poisson_positive(double mean) {
        const double p0 = std::exp(-mean);
        if (p0 < 1e-14) {  // conditioning is a no-op at this mean
            std::uint64_t k = next_poisson(mean);
            return k == 0 ? 1 : k;
        }
        double u = p0 + next_unit() * (1.0 - p0);
        double cdf = p0, term = p0;
        std::uint64_t k = 0;
        while (cdf < u && k < 400) {
            ++k;
            term *= mean / double(k);
            cdf += term;
        }
        return k == 0 ? 1 : k;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

}  // namespace jumplab
