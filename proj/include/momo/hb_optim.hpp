// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <iostream>
#include <optional>
#include <utility>
#include <vector>

#include "momo/eigen.hpp"
#include "momo/error.hpp"
#include "momo/matrix.hpp"
#include "momo/rng.hpp"

namespace momo {

// f(x) = 1/2 x^T A x + x^T b with A symmetric positive definite.
// nu/ell are the extreme eigenvalues; x_star the unique minimizer.
struct QuadraticProblem {
    Matrix a;
    std::vector<double> b;
    double nu = 0.0;
    double ell = 0.0;
    std::vector<double> x_star;

    QuadraticProblem(Matrix a_in, std::vector<double> b_in)
        : a(std::move(a_in)), b(std::move(b_in)) {
        if (a.rows() != a.cols() || a.rows() != b.size())
            throw DimensionError("QuadraticProblem: shape mismatch");
        auto [lo, hi] = spectral_extremes(a);
        if (!(lo > 0.0)) throw DomainError("QuadraticProblem: A must be positive definite");
        nu = lo;
        ell = hi;
        std::vector<double> neg_b(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) neg_b[i] = -b[i];
        x_star = solve_spd(a, neg_b);
    }

    std::size_t dim() const { return b.size(); }

    double value(const std::vector<double>& x) const {
        const std::vector<double> ax = matvec(a, x);
        return 0.5 * dot(x, ax) + dot(x, b);
    }

    std::vector<double> gradient(const std::vector<double>& x) const {
        std::vector<double> g = matvec(a, x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += b[i];
        return g;
    }
};

// Per-iteration record of an optimizer run. All lists have length iters+1;
// betas_applied[k] is the momentum used to produce iterate k (0 for the
// starting point).
struct OptimizerTrace {
    std::vector<std::vector<double>> iterates;
    std::vector<double> grad_norms;
    std::vector<double> betas_applied;
    std::vector<double> dist_to_opt;

    std::size_t steps() const { return iterates.empty() ? 0 : iterates.size() - 1; }
};

inline std::vector<double> gd_step(const QuadraticProblem& p, const std::vector<double>& x,
                                   double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("gd_step: gamma must be > 0");
    std::vector<double> g = p.gradient(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - gamma * g[i];
    return out;
}

// Heavy ball in momentum-state form: m+ = beta m + grad f(x); x+ = x - gamma m+.
inline std::pair<std::vector<double>, std::vector<double>> hb_step(
    const QuadraticProblem& p, const std::vector<double>& x, const std::vector<double>& m,
    double gamma, double beta) {
    if (!(gamma > 0.0)) throw ConfigError("hb_step: gamma must be > 0");
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("hb_step: beta must be in [0,1)");
    std::vector<double> g = p.gradient(x);
    std::vector<double> m_next(x.size()), x_next(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        m_next[i] = beta * m[i] + g[i];
        x_next[i] = x[i] - gamma * m_next[i];
    }
    return {std::move(x_next), std::move(m_next)};
}

// Optimal heavy-ball momentum for step size gamma <= 1/L: (1 - sqrt(gamma nu))^2.
inline double optimal_momentum(double nu, double gamma) {
    const double gn = gamma * nu;
    if (!(gn > 0.0) || gn > 1.0 + 1e-12)
        throw DomainError("optimal_momentum: gamma * nu must be in (0, 1]");
    const double r = 1.0 - std::sqrt(std::min(gn, 1.0));
    return r * r;
}

inline constexpr double kDivergenceLimit = 1e12;

namespace detail {

inline void warn_step_size(const QuadraticProblem& p, double gamma) {
    if (gamma > 1.0 / p.ell + 1e-15)
        std::cerr << "momo: step size " << gamma << " exceeds 1/L = " << 1.0 / p.ell
                  << "; convergence guarantees do not apply\n";
}

inline void record(OptimizerTrace& t, const QuadraticProblem& p, const std::vector<double>& x,
                   double beta) {
    t.iterates.push_back(x);
    t.grad_norms.push_back(l2_norm(p.gradient(x)));
    t.betas_applied.push_back(beta);
    const double d = l2_norm(vec_sub(x, p.x_star));
    t.dist_to_opt.push_back(d);
    if (d > kDivergenceLimit) throw DivergenceError("optimizer diverged: distance > 1e12");
}

}  // namespace detail

inline OptimizerTrace run_heavy_ball(const QuadraticProblem& p, const std::vector<double>& x0,
                                     double gamma, double beta, std::size_t iters) {
    detail::warn_step_size(p, gamma);
    OptimizerTrace trace;
    detail::record(trace, p, x0, 0.0);
    std::vector<double> x = x0, m(x0.size(), 0.0);
    for (std::size_t k = 0; k < iters; ++k) {
        auto [x_next, m_next] = hb_step(p, x, m, gamma, beta);
        x = std::move(x_next);
        m = std::move(m_next);
        detail::record(trace, p, x, beta);
    }
    return trace;
}

inline OptimizerTrace run_gd(const QuadraticProblem& p, const std::vector<double>& x0,
                             double gamma, std::size_t iters) {
    return run_heavy_ball(p, x0, gamma, 0.0, iters);
}

// Local curvature along a pair of iterates:
//   ||grad f(x_k) - grad f(x_km1)|| / ||x_k - x_km1||  =  ||A dx|| / ||dx||,
// always in [nu, L].
inline double curvature_estimate(const std::vector<double>& x_k,
                                 const std::vector<double>& x_km1,
                                 const QuadraticProblem& p) {
    const std::vector<double> dx = vec_sub(x_k, x_km1);
    const double dn = l2_norm(dx);
    if (dn == 0.0) throw EstimateUndefined("curvature_estimate: zero displacement");
    return l2_norm(matvec(p.a, dx)) / dn;
}

// Adaptive momentum from consecutive gradients (norm-ratio form):
//   proj_[0,1-delta]((1 - sqrt(||g_k - g_km1|| / ||g_km1||))^2)
// Returns 0 when the previous gradient vanishes.
inline double adaptive_momentum_value(const std::vector<double>& grad_k,
                                      const std::vector<double>& grad_km1, double delta) {
    const double prev = l2_norm(grad_km1);
    if (prev == 0.0) return 0.0;
    double ratio = l2_norm(vec_sub(grad_k, grad_km1)) / prev;
    if (ratio < 0.0) ratio = 0.0;
    const double r = 1.0 - std::sqrt(ratio);
    const double val = r * r;
    return std::max(0.0, std::min(1.0 - delta, val));
}

// Variant that keeps gamma and the true displacement under the square root:
//   proj_[0,1-delta]((1 - sqrt(gamma ||g_k - g_km1|| / ||x_k - x_km1||))^2)
inline double adaptive_momentum_value_gamma_form(const std::vector<double>& x_k,
                                                 const std::vector<double>& x_km1,
                                                 const std::vector<double>& grad_k,
                                                 const std::vector<double>& grad_km1,
                                                 double gamma, double delta) {
    const double dn = l2_norm(vec_sub(x_k, x_km1));
    if (dn == 0.0) return 0.0;
    double arg = gamma * l2_norm(vec_sub(grad_k, grad_km1)) / dn;
    if (arg < 0.0) arg = 0.0;
    const double r = 1.0 - std::sqrt(arg);
    const double val = r * r;
    return std::max(0.0, std::min(1.0 - delta, val));
}

enum class AdaptiveForm { GradientRatio, DisplacementRatio };

// Heavy ball with per-step adaptive momentum. The first step has no
// previous gradient and falls back to plain gradient descent.
inline OptimizerTrace run_adaptive_heavy_ball(const QuadraticProblem& p,
                                              const std::vector<double>& x0, double gamma,
                                              double delta, std::size_t iters,
                                              AdaptiveForm form = AdaptiveForm::GradientRatio) {
    detail::warn_step_size(p, gamma);
    OptimizerTrace trace;
    detail::record(trace, p, x0, 0.0);
    std::vector<double> x = x0, m(x0.size(), 0.0);
    std::vector<double> x_prev = x0;
    std::vector<double> grad_prev;
    for (std::size_t k = 0; k < iters; ++k) {
        const std::vector<double> grad = p.gradient(x);
        double beta_k = 0.0;
        if (k > 0) {
            beta_k = (form == AdaptiveForm::GradientRatio)
                         ? adaptive_momentum_value(grad, grad_prev, delta)
                         : adaptive_momentum_value_gamma_form(x, x_prev, grad, grad_prev, gamma,
                                                              delta);
        }
        std::vector<double> m_next(x.size()), x_next(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            m_next[i] = beta_k * m[i] + grad[i];
            x_next[i] = x[i] - gamma * m_next[i];
        }
        x_prev = std::move(x);
        grad_prev = grad;
        x = std::move(x_next);
        m = std::move(m_next);
        detail::record(trace, p, x, beta_k);
    }
    return trace;
}

// Geometric-mean contraction of dist_to_opt over the late window
// [burn_in * K, K]. Uses the telescoped ratio, robust to the per-step
// non-monotonicity of heavy ball.
inline double contraction_rate(const OptimizerTrace& trace, double burn_in = 0.25) {
    const std::size_t k_end_full = trace.dist_to_opt.size() - 1;
    std::size_t k0 = static_cast<std::size_t>(burn_in * static_cast<double>(k_end_full));
    std::size_t k1 = k_end_full;
    while (k1 > k0 && trace.dist_to_opt[k1] == 0.0) --k1;
    if (k1 <= k0 || trace.dist_to_opt[k0] == 0.0) return 0.0;
    const double ratio = trace.dist_to_opt[k1] / trace.dist_to_opt[k0];
    return std::pow(ratio, 1.0 / static_cast<double>(k1 - k0));
}

inline std::optional<std::size_t> iterations_to_grad_tol(const OptimizerTrace& trace,
                                                         double tol) {
    for (std::size_t k = 0; k < trace.grad_norms.size(); ++k)
        if (trace.grad_norms[k] <= tol) return k;
    return std::nullopt;
}

// Random SPD problem with eigenvalues log-spaced in [1, cond] (jittered),
// conjugated by a random orthogonal basis.
inline QuadraticProblem make_random_spd_problem(Rng& rng, std::size_t d, double cond) {
    std::vector<double> eigs(d);
    eigs[0] = 1.0;
    if (d > 1) eigs[d - 1] = cond;
    for (std::size_t i = 1; i + 1 < d; ++i) {
        const double t = rng.uniform(0.05, 0.95);
        eigs[i] = std::exp(std::log(cond) * t);
    }
    // random orthogonal basis via Gram-Schmidt on a Gaussian matrix
    Matrix basis = rng.normal_matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double proj = 0.0;
            for (std::size_t c = 0; c < d; ++c) proj += basis(i, c) * basis(j, c);
            for (std::size_t c = 0; c < d; ++c) basis(i, c) -= proj * basis(j, c);
        }
        double norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) norm += basis(i, c) * basis(i, c);
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < d; ++c) basis(i, c) /= norm;
    }
    Matrix a(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < d; ++p) acc += basis(p, i) * eigs[p] * basis(p, j);
            a(i, j) = acc;
        }
    // symmetrize away round-off
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }
    std::vector<double> b = rng.uniform_vector(d, -1.0, 1.0);
    return QuadraticProblem(std::move(a), std::move(b));
}

}  // namespace momo
