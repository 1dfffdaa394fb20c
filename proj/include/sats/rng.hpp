#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sats {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Per-dialogue seed: any single index is reproducible without generating the
// ones before it.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

// mt19937_64 with hand-rolled distribution transforms. The standard library
// engines are bit-stable across implementations but the distributions are
// not, and byte-identical output for a given seed is part of the contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform over {lo, ..., hi} inclusive, rejection-debiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return lo + static_cast<std::int64_t>(next_u64());  // full range
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span + 1) % span;
        std::uint64_t x = next_u64();
        while (x > limit) x = next_u64();
        return lo + static_cast<std::int64_t>(x % span);
    }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Box-Muller with cached spare.
    double normal(double mu, double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return mu + sigma * spare_;
        }
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mu + sigma * r * std::cos(theta);
    }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Fisher-Yates prefix: k distinct indices from {0, ..., n-1}.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        k = std::min(k, n);
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n - i - 1)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sats
