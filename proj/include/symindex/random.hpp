#pragma once

#include <random>

#include "symindex/symplectic_core.hpp"
#include <unsupported/Eigen/MatrixFunctions>

namespace symindex::rnd {

using Rng = std::mt19937_64;

inline Mat gaussian(Rng& g, int r, int c, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    Mat A(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) A(i, j) = d(g);
    return A;
}

inline Mat symmetric(Rng& g, int n, double sd = 1.0) {
    Mat A = gaussian(g, n, n, sd);
    return 0.5 * (A + A.transpose());
}

inline Mat orthogonal(Rng& g, int n) {
    Eigen::HouseholderQR<Mat> qr(gaussian(g, n, n));
    Mat Q = qr.householderQ();
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (R(i, i) < 0) Q.col(i) *= -1;
    return Q;
}

inline int uniform_int(Rng& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }
inline double uniform(Rng& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

// exp(J S) with S symmetric
inline Mat symplectic(Rng& g, int n, double sd = 0.5) {
    return (standard_J(n) * symmetric(g, 2 * n, sd)).exp();
}

// symmetric matrix with prescribed eigenvalues
inline Mat with_spectrum(Rng& g, const Vec& ev) {
    Mat Q = orthogonal(g, static_cast<int>(ev.size()));
    return Q * ev.asDiagonal() * Q.transpose();
}

}  // namespace symindex::rnd
