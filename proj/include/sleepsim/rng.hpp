#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sleepsim {

// All stochastic output in this library must be byte-reproducible for a
// fixed seed, across platforms and across runs. std::mt19937_64 is fully
// specified by the standard but the std:: distributions are not, so the
// variate transforms live here instead.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derive an independent sub-seed from (seed, stream tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ull + tag * 0x9e3779b97f4a7c15ull);
    splitmix64(s);
    return splitmix64(s);
}

/// Deterministic variate generator over a standard-mandated engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe operand for log().
    double uniform01_open_low() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    double exponential(double mean) {
        return -mean * std::log(uniform01_open_low());
    }

    /// Standard normal via Box-Muller; one variate per pair of uniforms so
    /// the draw count stays predictable.
    double standard_normal() {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double lognormal(double mu_log, double sigma_log) {
        return std::exp(mu_log + sigma_log * standard_normal());
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace sleepsim
