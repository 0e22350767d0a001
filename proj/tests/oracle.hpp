#pragma once

// Test-only reference implementations. They recompute every mean from
// scratch with plain loops and share no code with the library.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

struct Matrix {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> x;  // row-major
    double at(std::size_t i, std::size_t r) const { return x[i * p + r]; }
};

struct Best {
    double value = -1.0;
    std::size_t k = 0;
    std::size_t r = 0;
};

inline double split_value(const Matrix& m, std::size_t k, std::size_t r) {
    double left = 0.0;
    double right = 0.0;
    for (std::size_t i = 0; i < k; ++i) left += m.at(i, r);
    for (std::size_t i = k; i < m.n; ++i) right += m.at(i, r);
    left /= static_cast<double>(k);
    right /= static_cast<double>(m.n - k);
    return std::sqrt(static_cast<double>(k * (m.n - k))) * std::abs(left - right) /
           std::sqrt(static_cast<double>(m.n));
}

/// Double loop over (k, r); first strict maximum wins.
inline Best brute_force_chart(const Matrix& m) {
    Best best;
    for (std::size_t k = 3; k + 3 <= m.n; ++k) {
        for (std::size_t r = 0; r < m.p; ++r) {
            const double v = split_value(m, k, r);
            if (v > best.value) best = {v, k, r};
        }
    }
    return best;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t p) {
    std::normal_distribution<double> normal;
    Matrix m{n, p, std::vector<double>(n * p)};
    for (double& v : m.x) v = normal(rng);
    return m;
}

}  // namespace oracle
