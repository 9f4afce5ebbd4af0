// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "galora/tensor.hpp"

namespace galora {

/// Seeded generator used for every random draw in the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derives an independent stream for a named purpose from a base seed.
    static Rng stream(std::uint64_t seed, std::uint64_t purpose);

    double uniform();                             // [0, 1)
    double normal(double mean, double stddev);
    std::size_t below(std::size_t n);             // [0, n)
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

namespace num {

Tensor normal_tensor(std::size_t rows, std::size_t cols, double stddev, Rng& rng);
Tensor uniform_tensor(std::size_t rows, std::size_t cols, double bound, Rng& rng);

}  // namespace num
}  // namespace galora
