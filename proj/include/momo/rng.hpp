// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "momo/matrix.hpp"

namespace momo {

// Deterministic, platform-independent PRNG: xoshiro256** seeded via
// splitmix64. The integer stream depends only on the seed, never on the
// platform or standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n); Lemire multiply-shift (bias < n / 2^64)
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // standard normal via Box-Muller; consumes two uniforms per pair
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T = double>
    DenseMatrix<T> uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
        DenseMatrix<T> m(rows, cols);
        for (auto& v : m.raw()) v = static_cast<T>(uniform(lo, hi));
        return m;
    }

    template <typename T = double>
    DenseMatrix<T> normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0) {
        DenseMatrix<T> m(rows, cols);
        for (auto& v : m.raw()) v = static_cast<T>(normal(0.0, stddev));
        return m;
    }

    std::vector<double> uniform_vector(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

    template <typename It>
    void shuffle(It first, It last) {
        const std::size_t n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = uniform_int(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace momo
