#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fedloc {

/// splitmix64 step; used both as a stream mixer and to derive sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministically combine a base seed with a stream tag. Used to give
/// geometry, outlier flips, and noise draws independent streams so a sweep
/// can vary one while holding the others fixed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t s = base;
    (void)splitmix64(s);
    s ^= 0x632be59bd9b4e019ULL * (tag + 1);
    return splitmix64(s);
}

/// Seeded random stream. Samplers are written out explicitly (rather than
/// using std::*_distribution) so identical seeds give identical draws on
/// every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; two draws per call, no cached spare.
    double normal() {
        double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Centered Cauchy with scale `gamma` via the inverse CDF (single
    /// uniform draw per sample).
    double cauchy(double gamma) { return gamma * std::tan(M_PI * (uniform01() - 0.5)); }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace fedloc
