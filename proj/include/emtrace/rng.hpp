// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "units.hpp"

// Deterministic random numbers. The standard <random> engines are portable but
// the distributions are not (implementations differ), so all samplers are
// written out here. Every consumer derives its own substream from a user seed
// plus a fixed id path; identical (seed, path) pairs give identical draws on
// every platform.

namespace emtrace {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace detail

// xoshiro256++ seeded through splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = detail::splitmix64(x);
    }

    // Independent stream for (seed, id path). Mixing each id through
    // splitmix64 keeps nearby ids decorrelated.
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t x = seed;
        std::uint64_t h = detail::splitmix64(x);
        for (std::uint64_t id : path) {
            x = h ^ (id + 0x9e3779b97f4a7c15ULL);
            h = detail::splitmix64(x);
        }
        return Rng(h);
    }

    std::uint64_t next() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Uniform integer in [0, n), n >= 1. Modulo bias is < n / 2^64, irrelevant
    // for the n used here.
    std::uint64_t uniform_int(std::uint64_t n) { return next() % n; }

    // Standard normal via Box-Muller (two fresh uniforms per draw, no cached
    // spare, so the stream position stays a pure function of the draw count).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // exp(N(mu, sigma)) with mu, sigma of the underlying normal.
    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Von Mises on the circle, mean mu, concentration kappa >= 0.
    // Best-Fisher rejection sampling; kappa == 0 degrades to uniform.
    double von_mises(double mu, double kappa) {
        if (kappa < 1e-9) return mu + uniform(-pi, pi);
        const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
        const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
        const double r = (1.0 + rho * rho) / (2.0 * rho);
        double f = 0.0;
        for (;;) {
            const double u1 = uniform();
            const double u2 = 1.0 - uniform();  // (0, 1]
            const double zc = std::cos(pi * u1);
            f = (1.0 + r * zc) / (r + zc);
            const double c = kappa * (r - f);
            if (c * (2.0 - c) - u2 > 0.0) break;
            if (std::log(c / u2) + 1.0 - c >= 0.0) break;
        }
        const double u3 = uniform();
        const double angle = (u3 < 0.5 ? -1.0 : 1.0) * std::acos(std::clamp(f, -1.0, 1.0));
        return mu + angle;
    }

  private:
    std::array<std::uint64_t, 4> s_{};
};

// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a) {
    a = std::fmod(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    if (a > pi) a -= 2.0 * pi;
    return a;
}

}  // namespace emtrace
