// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "momo/error.hpp"
#include "momo/matrix.hpp"

namespace momo {

inline constexpr std::size_t kMaxSpectralDim = 64;
inline constexpr double kSymmetryTol = 1e-10;

inline void require_symmetric(const Matrix& a, double tol = kSymmetryTol) {
    if (a.rows() != a.cols()) throw SymmetryError("matrix is not square");
    double scale = 1.0;
    for (const double v : a.raw()) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * scale)
                throw SymmetryError("matrix is not symmetric");
}

// Smallest and largest eigenvalues of a small symmetric matrix, computed by
// cyclic Jacobi rotations. Intended for dimensions up to kMaxSpectralDim.
inline std::pair<double, double> spectral_extremes(const Matrix& a) {
    if (a.rows() > kMaxSpectralDim)
        throw DimensionError("spectral_extremes: dimension > 64");
    require_symmetric(a);
    const std::size_t n = a.rows();
    if (n == 0) throw DimensionError("spectral_extremes: empty matrix");
    if (n == 1) return {a(0, 0), a(0, 0)};

    Matrix w = a;
    const int max_sweeps = 64;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += w(i, j) * w(i, j);
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) diag += w(i, i) * w(i, i);
        if (off <= 1e-26 * std::max(1.0, diag)) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p < n - 1; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (apq == 0.0) continue;
                const double app = w(p, p), aqq = w(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = w(k, p), wkq = w(k, q);
                    w(k, p) = c * wkp - s * wkq;
                    w(k, q) = s * wkp + c * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = w(p, k), wqk = w(q, k);
                    w(p, k) = c * wpk - s * wqk;
                    w(q, k) = s * wpk + c * wqk;
                }
            }
        }
    }
    if (!converged)
        throw ConvergenceError("spectral_extremes: Jacobi did not converge");
    double lo = w(0, 0), hi = w(0, 0);
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, w(i, i));
        hi = std::max(hi, w(i, i));
    }
    return {lo, hi};
}

// Solve A x = b for symmetric positive definite A (Cholesky, small dense).
inline std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b) {
    if (a.rows() != a.cols() || a.rows() != b.size())
        throw DimensionError("solve_spd: shape mismatch");
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0) throw NumericalError("solve_spd: matrix not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * y[k];
        y[i] = v / l(i, i);
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double v = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= l(k, ii) * x[k];
        x[ii] = v / l(ii, ii);
    }
    return x;
}

}  // namespace momo
