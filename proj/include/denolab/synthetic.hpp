#pragma once

#include "denolab/market_data.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace denolab {

struct SineFixture {
    std::size_t n = 500;
    double base = 100.0;
    double amplitude = 10.0;
    double period = 50.0;
    double noise_fraction = 0.5;  // noise sigma as a fraction of the amplitude
    std::uint64_t seed = 7;
};

// base + amplitude * sin(2 pi t / period) + N(0, (noise_fraction * amplitude)^2).
// Prices below 1% of base are clipped there to stay positive.
inline std::vector<double> sine_prices(const SineFixture& f) {
    std::mt19937_64 rng(f.seed);
    std::normal_distribution<double> noise(0.0, f.noise_fraction * f.amplitude);
    std::vector<double> p(f.n);
    for (std::size_t t = 0; t < f.n; ++t) {
        double v = f.base + f.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / f.period);
        if (f.noise_fraction > 0.0) v += noise(rng);
        p[t] = std::max(v, 0.01 * f.base);
    }
    return p;
}

inline PriceSeries sine_series(const SineFixture& f) { return PriceSeries::from_prices(sine_prices(f), "synthetic"); }

}  // namespace denolab
