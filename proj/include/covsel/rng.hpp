#pragma once

// Random-number plumbing. One chain owns one engine; nothing here is
// shared. Seeds are mixed through SplitMix64 so derived streams (per
// replication, per prior arm) are decorrelated.

#include <cstdint>
#include <random>

#include "covsel/linalg.hpp"

namespace covsel {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(base ^ splitmix64(a)) ^ splitmix64(~b));
}

inline double runif(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double rnorm(Rng& rng, double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

inline double rchisq(Rng& rng, double df) {
    return std::chi_squared_distribution<double>(df)(rng);
}

inline int runif_int(Rng& rng, int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Vector rnorm_vector(Rng& rng, Eigen::Index n) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rnorm(rng);
    return z;
}

// n rows drawn from N(0, sigma).
inline Matrix sample_gaussian_rows(Rng& rng, int n, const Matrix& sigma) {
    const Matrix L =
        llt_or_throw(sigma, "sample_gaussian_rows: sigma not positive definite").matrixL();
    Matrix y(n, sigma.rows());
    for (int t = 0; t < n; ++t) y.row(t) = (L * rnorm_vector(rng, sigma.rows())).transpose();
    return y;
}

}  // namespace covsel
