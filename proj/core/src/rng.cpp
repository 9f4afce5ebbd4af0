// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace galora {

Rng Rng::stream(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32)};
    Rng r(0);
    r.engine_.seed(seq);
    return r;
}

double Rng::uniform() {
    // 53 random mantissa bits; avoids distribution objects whose output is library-specific.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
    // Box-Muller on two uniforms, one draw per call.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
    if (n <= 1) return 0;
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % n);
}

namespace num {

Tensor normal_tensor(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = rng.normal(0.0, stddev);
    return t;
}

Tensor uniform_tensor(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
    return t;
}

}  // namespace num
}  // namespace galora
