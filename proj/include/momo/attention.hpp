// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <optional>
#include <vector>

#include "momo/error.hpp"
#include "momo/feature_map.hpp"
#include "momo/matrix.hpp"

namespace momo {

inline constexpr double kDefaultEps = 1e-6;
inline constexpr double kDefaultDelta = 1e-3;

template <typename T = double>
struct AttentionParams {
    DenseMatrix<T> w_q;  // D x D_x
    DenseMatrix<T> w_k;  // D x D_x
    DenseMatrix<T> w_v;  // D_v x D_x
};

// Hyperparameters of the momentum attention and the momentum connection.
// beta/gamma drive the attention-state recursion; beta_tilde/gamma_tilde
// drive the layer-to-layer connection. delta bounds the adaptive momentum
// away from 1; eps stabilizes the attention denominator.
template <typename T = double>
struct MomentumConfig {
    T beta = T(0.1);
    T gamma = T(1);
    T beta_tilde = T(0);
    bool adaptive_beta_tilde = false;
    T gamma_tilde = T(1);
    T delta = T(kDefaultDelta);
    T eps = T(kDefaultEps);

    void validate() const {
        if (!(beta >= T(0) && beta < T(1)))
            throw ConfigError("MomentumConfig: beta must be in [0,1)");
        if (!(gamma > T(0))) throw ConfigError("MomentumConfig: gamma must be > 0");
        if (!adaptive_beta_tilde && !(beta_tilde >= T(0) && beta_tilde < T(1)))
            throw ConfigError("MomentumConfig: beta_tilde must be in [0,1)");
        if (!(gamma_tilde > T(0))) throw ConfigError("MomentumConfig: gamma_tilde must be > 0");
        if (!(delta > T(0) && delta < T(1))) throw ConfigError("MomentumConfig: delta in (0,1)");
        if (!(eps > T(0))) throw ConfigError("MomentumConfig: eps must be > 0");
    }
};

// Running state of the recurrent attention forms: s accumulates key-value
// outer products, z accumulates keys, m is the momentum state. All zero at
// index 0.
template <typename T = double>
struct RecurrentState {
    DenseMatrix<T> s;   // D x D_v
    std::vector<T> z;   // D
    DenseMatrix<T> m;   // D x D_v
    std::size_t index = 0;

    RecurrentState(std::size_t d, std::size_t d_v)
        : s(d, d_v), z(d, T(0)), m(d, d_v) {}
};

template <typename T>
struct ProjectedQkv {
    DenseMatrix<T> q;  // N x D
    DenseMatrix<T> k;  // N x D
    DenseMatrix<T> v;  // N x D_v
};

// Q = X Wq^T, K = X Wk^T, V = X Wv^T for one sequence (N x D_x).
template <typename T>
ProjectedQkv<T> project_qkv(const DenseMatrix<T>& x, const AttentionParams<T>& p) {
    return {matmul_nt(x, p.w_q), matmul_nt(x, p.w_k), matmul_nt(x, p.w_v)};
}

// Row-streamed softmax attention; the score row is recomputed per query so
// the auxiliary memory stays O(N) even though time is O(N^2). Causal
// masking restricts query i to keys j <= i.
template <typename T>
DenseMatrix<T> softmax_attention(const DenseMatrix<T>& q, const DenseMatrix<T>& k,
                                 const DenseMatrix<T>& v, bool causal) {
    if (q.cols() != k.cols() || k.rows() != v.rows())
        throw DimensionError("softmax_attention: shape mismatch");
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
    DenseMatrix<T> out(n, d_v);
    std::vector<T> scores(k.rows());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t limit = causal ? std::min(i + 1, k.rows()) : k.rows();
        T max_score = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < limit; ++j) {
            T acc = T(0);
            const T* __restrict qi = q.row(i);
            const T* __restrict kj = k.row(j);
            for (std::size_t p = 0; p < d; ++p) acc += qi[p] * kj[p];
            scores[j] = acc * inv_sqrt_d;
            if (scores[j] > max_score) max_score = scores[j];
        }
        T denom = T(0);
        for (std::size_t j = 0; j < limit; ++j) {
            scores[j] = std::exp(scores[j] - max_score);
            denom += scores[j];
        }
        T* __restrict oi = out.row(i);
        for (std::size_t j = 0; j < limit; ++j) {
            const T w = scores[j] / denom;
            const T* __restrict vj = v.row(j);
            for (std::size_t c = 0; c < d_v; ++c) oi[c] += w * vj[c];
        }
    }
    return out;
}

namespace detail {

template <typename T>
void check_linear_shapes(const DenseMatrix<T>& q, const DenseMatrix<T>& k,
                         const DenseMatrix<T>& v) {
    if (q.cols() != k.cols() || k.rows() != v.rows())
        throw DimensionError("linear attention: shape mismatch");
}

template <typename T>
T stabilized_denominator(T raw, T eps) {
    const T den = raw + eps;
    if (!(den > T(0)))
        throw NumericalError("linear attention: non-positive denominator");
    return den;
}

}  // namespace detail

// Non-causal linear attention through the D x D_v summary; the N x N kernel
// matrix is never formed.
template <typename T>
DenseMatrix<T> linear_attention(const DenseMatrix<T>& q, const DenseMatrix<T>& k,
                                const DenseMatrix<T>& v, FeatureMapKind fm,
                                T eps = T(kDefaultEps)) {
    detail::check_linear_shapes(q, k, v);
    const DenseMatrix<T> phi_q = apply_feature_map(fm, q);
    const DenseMatrix<T> phi_k = apply_feature_map(fm, k);
    const DenseMatrix<T> summary = matmul_tn(phi_k, v);  // D x D_v
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    std::vector<T> z(d, T(0));
    for (std::size_t j = 0; j < k.rows(); ++j) {
        const T* __restrict kj = phi_k.row(j);
        for (std::size_t p = 0; p < d; ++p) z[p] += kj[p];
    }
    DenseMatrix<T> out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        const T* __restrict qi = phi_q.row(i);
        T zdot = T(0);
        for (std::size_t p = 0; p < d; ++p) zdot += qi[p] * z[p];
        const T den = detail::stabilized_denominator(zdot, eps);
        T* __restrict oi = out.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const T qp = qi[p];
            const T* __restrict sr = summary.row(p);
            for (std::size_t c = 0; c < d_v; ++c) oi[c] += qp * sr[c];
        }
        for (std::size_t c = 0; c < d_v; ++c) oi[c] /= den;
    }
    return out;
}

// Causal linear attention in one left-to-right pass over prefix sums.
template <typename T>
DenseMatrix<T> causal_linear_attention(const DenseMatrix<T>& q, const DenseMatrix<T>& k,
                                       const DenseMatrix<T>& v, FeatureMapKind fm,
                                       T eps = T(kDefaultEps)) {
    detail::check_linear_shapes(q, k, v);
    const DenseMatrix<T> phi_q = apply_feature_map(fm, q);
    const DenseMatrix<T> phi_k = apply_feature_map(fm, k);
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    DenseMatrix<T> s(d, d_v);
    std::vector<T> z(d, T(0));
    DenseMatrix<T> out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        const T* __restrict ki = phi_k.row(i);
        const T* __restrict vi = v.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const T kp = ki[p];
            z[p] += kp;
            T* __restrict sr = s.row(p);
            for (std::size_t c = 0; c < d_v; ++c) sr[c] += kp * vi[c];
        }
        const T* __restrict qi = phi_q.row(i);
        T zdot = T(0);
        for (std::size_t p = 0; p < d; ++p) zdot += qi[p] * z[p];
        const T den = detail::stabilized_denominator(zdot, eps);
        T* __restrict oi = out.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const T qp = qi[p];
            const T* __restrict sr = s.row(p);
            for (std::size_t c = 0; c < d_v; ++c) oi[c] += qp * sr[c];
        }
        for (std::size_t c = 0; c < d_v; ++c) oi[c] /= den;
    }
    return out;
}

// One recurrent step of causal linear attention. Advances the state in
// place and returns the attention output row for this position.
template <typename T>
std::vector<T> causal_linear_rnn_step(RecurrentState<T>& state, const std::vector<T>& q_i,
                                      const std::vector<T>& k_i, const std::vector<T>& v_i,
                                      FeatureMapKind fm, T eps = T(kDefaultEps)) {
    const std::size_t d = state.s.rows(), d_v = state.s.cols();
    if (q_i.size() != d || k_i.size() != d || v_i.size() != d_v)
        throw DimensionError("causal_linear_rnn_step: shape mismatch");
    std::vector<T> out(d_v, T(0));
    T zdot = T(0);
    for (std::size_t p = 0; p < d; ++p) {
        const T phi_k = feature_map_scalar(fm, k_i[p]);
        state.z[p] += phi_k;
        T* __restrict sr = state.s.row(p);
        for (std::size_t c = 0; c < d_v; ++c) sr[c] += phi_k * v_i[c];
    }
    for (std::size_t p = 0; p < d; ++p) {
        const T phi_q = feature_map_scalar(fm, q_i[p]);
        zdot += phi_q * state.z[p];
        const T* __restrict sr = state.s.row(p);
        for (std::size_t c = 0; c < d_v; ++c) out[c] += phi_q * sr[c];
    }
    const T den = detail::stabilized_denominator(zdot, eps);
    for (auto& o : out) o /= den;
    state.index += 1;
    return out;
}

// One recurrent step of causal momentum attention:
//   m_i = beta m_{i-1} - phi(k_i) v_i^T
//   s_i = s_{i-1} - gamma m_i
//   z_i = z_{i-1} + phi(k_i)
template <typename T>
std::vector<T> causal_momentum_rnn_step(RecurrentState<T>& state, const std::vector<T>& q_i,
                                        const std::vector<T>& k_i, const std::vector<T>& v_i,
                                        const MomentumConfig<T>& cfg, FeatureMapKind fm,
                                        T eps = T(kDefaultEps)) {
    if (!(cfg.beta >= T(0) && cfg.beta < T(1)))
        throw ConfigError("causal_momentum_rnn_step: beta must be in [0,1)");
    const std::size_t d = state.s.rows(), d_v = state.s.cols();
    if (q_i.size() != d || k_i.size() != d || v_i.size() != d_v)
        throw DimensionError("causal_momentum_rnn_step: shape mismatch");
    std::vector<T> out(d_v, T(0));
    T zdot = T(0);
    for (std::size_t p = 0; p < d; ++p) {
        const T phi_k = feature_map_scalar(fm, k_i[p]);
        state.z[p] += phi_k;
        T* __restrict mr = state.m.row(p);
        T* __restrict sr = state.s.row(p);
        for (std::size_t c = 0; c < d_v; ++c) {
            mr[c] = cfg.beta * mr[c] - phi_k * v_i[c];
            sr[c] -= cfg.gamma * mr[c];
        }
    }
    for (std::size_t p = 0; p < d; ++p) {
        const T phi_q = feature_map_scalar(fm, q_i[p]);
        zdot += phi_q * state.z[p];
        const T* __restrict sr = state.s.row(p);
        for (std::size_t c = 0; c < d_v; ++c) out[c] += phi_q * sr[c];
    }
    const T den = detail::stabilized_denominator(zdot, eps);
    for (auto& o : out) o /= den;
    state.index += 1;
    return out;
}

// Batch form of causal momentum attention. The reweighted sum
//   s_i = gamma * sum_{j<=i} (1 - beta^{i-j+1})/(1 - beta) phi(k_j) v_j^T
// is evaluated with two running D x D_v sums: the plain prefix sum C_i and
// the geometric sum P_i = beta (P_{i-1} + phi(k_i) v_i^T), giving
// s_i = gamma (C_i - P_i)/(1 - beta) in O(N) total work.
template <typename T>
DenseMatrix<T> causal_momentum_attention(const DenseMatrix<T>& q, const DenseMatrix<T>& k,
                                         const DenseMatrix<T>& v, const MomentumConfig<T>& cfg,
                                         FeatureMapKind fm, T eps = T(kDefaultEps)) {
    if (!(cfg.beta >= T(0) && cfg.beta < T(1)))
        throw ConfigError("causal_momentum_attention: beta must be in [0,1)");
    detail::check_linear_shapes(q, k, v);
    const DenseMatrix<T> phi_q = apply_feature_map(fm, q);
    const DenseMatrix<T> phi_k = apply_feature_map(fm, k);
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    const T beta = cfg.beta;
    const T coeff = cfg.gamma / (T(1) - beta);
    DenseMatrix<T> plain(d, d_v);   // C_i
    DenseMatrix<T> geom(d, d_v);    // P_i
    std::vector<T> z(d, T(0));
    DenseMatrix<T> out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        const T* __restrict ki = phi_k.row(i);
        const T* __restrict vi = v.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const T kp = ki[p];
            z[p] += kp;
            T* __restrict cr = plain.row(p);
            T* __restrict pr = geom.row(p);
            for (std::size_t c = 0; c < d_v; ++c) {
                const T o = kp * vi[c];
                cr[c] += o;
                pr[c] = beta * (pr[c] + o);
            }
        }
        const T* __restrict qi = phi_q.row(i);
        T zdot = T(0);
        for (std::size_t p = 0; p < d; ++p) zdot += qi[p] * z[p];
        const T den = detail::stabilized_denominator(zdot, eps);
        T* __restrict oi = out.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const T qp = qi[p];
            const T* __restrict cr = plain.row(p);
            const T* __restrict pr = geom.row(p);
            for (std::size_t c = 0; c < d_v; ++c) oi[c] += qp * (cr[c] - pr[c]);
        }
        for (std::size_t c = 0; c < d_v; ++c) oi[c] = coeff * oi[c] / den;
    }
    return out;
}

// Non-causal momentum attention: every position shares the same reweighted
// full sum over j = 1..N with weights (1 - beta^{N-j+1})/(1 - beta).
template <typename T>
DenseMatrix<T> momentum_attention(const DenseMatrix<T>& q, const DenseMatrix<T>& k,
                                  const DenseMatrix<T>& v, const MomentumConfig<T>& cfg,
                                  FeatureMapKind fm, T eps = T(kDefaultEps)) {
    if (!(cfg.beta >= T(0) && cfg.beta < T(1)))
        throw ConfigError("momentum_attention: beta must be in [0,1)");
    detail::check_linear_shapes(q, k, v);
    const DenseMatrix<T> phi_q = apply_feature_map(fm, q);
    const DenseMatrix<T> phi_k = apply_feature_map(fm, k);
    const std::size_t n = q.rows(), nk = k.rows(), d = q.cols(), d_v = v.cols();
    const T beta = cfg.beta;
    DenseMatrix<T> summary(d, d_v);
    std::vector<T> z(d, T(0));
    // walk keys newest-to-oldest so beta^{N-j+1} is a running product
    T beta_pow = beta;
    for (std::size_t jj = nk; jj-- > 0;) {
        const T w = (T(1) - beta_pow) / (T(1) - beta);
        beta_pow *= beta;
        const T* __restrict kj = phi_k.row(jj);
        const T* __restrict vj = v.row(jj);
        for (std::size_t p = 0; p < d; ++p) {
            z[p] += kj[p];
            const T wk = w * kj[p];
            T* __restrict sr = summary.row(p);
            for (std::size_t c = 0; c < d_v; ++c) sr[c] += wk * vj[c];
        }
    }
    DenseMatrix<T> out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        const T* __restrict qi = phi_q.row(i);
        T zdot = T(0);
        for (std::size_t p = 0; p < d; ++p) zdot += qi[p] * z[p];
        const T den = detail::stabilized_denominator(zdot, eps);
        T* __restrict oi = out.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const T qp = qi[p];
            const T* __restrict sr = summary.row(p);
            for (std::size_t c = 0; c < d_v; ++c) oi[c] += qp * sr[c];
        }
        for (std::size_t c = 0; c < d_v; ++c) oi[c] = cfg.gamma * oi[c] / den;
    }
    return out;
}

// Adaptive connection momentum: the norm ratio of consecutive updates fed
// through proj_[0,1-delta]((1 - sqrt(gamma_tilde * r))^2). Returns 0 when
// the previous update has zero norm.
template <typename T>
T adaptive_connection_momentum(T curr_minus_prev_norm, T prev_norm, T gamma_tilde, T delta) {
    if (prev_norm == T(0)) {
        std::cerr << "momo: adaptive momentum fallback, previous update has zero norm\n";
        return T(0);
    }
    const T ratio = curr_minus_prev_norm / prev_norm;
    T arg = gamma_tilde * ratio;
    if (arg < T(0)) arg = T(0);
    const T val = (T(1) - std::sqrt(arg)) * (T(1) - std::sqrt(arg));
    const T hi = T(1) - delta;
    return std::max(T(0), std::min(hi, val));
}

template <typename T>
T adaptive_connection_momentum(const DenseMatrix<T>& update_curr,
                               const DenseMatrix<T>& update_prev, T gamma_tilde, T delta) {
    if (!update_curr.same_shape(update_prev))
        throw DimensionError("adaptive_connection_momentum: shape mismatch");
    return adaptive_connection_momentum(frobenius_norm(sub(update_curr, update_prev)),
                                        frobenius_norm(update_prev), gamma_tilde, delta);
}

// Batch overload: one scalar per batch, norms over the whole batch tensor.
template <typename T>
T adaptive_connection_momentum(const std::vector<DenseMatrix<T>>& update_curr,
                               const std::vector<DenseMatrix<T>>& update_prev, T gamma_tilde,
                               T delta) {
    if (update_curr.size() != update_prev.size())
        throw DimensionError("adaptive_connection_momentum: batch size mismatch");
    T diff_sq = T(0), prev_sq = T(0);
    for (std::size_t b = 0; b < update_curr.size(); ++b) {
        if (!update_curr[b].same_shape(update_prev[b]))
            throw DimensionError("adaptive_connection_momentum: shape mismatch");
        for (std::size_t i = 0; i < update_curr[b].size(); ++i) {
            const T dv = update_curr[b].raw()[i] - update_prev[b].raw()[i];
            diff_sq += dv * dv;
            const T pv = update_prev[b].raw()[i];
            prev_sq += pv * pv;
        }
    }
    return adaptive_connection_momentum(std::sqrt(diff_sq), std::sqrt(prev_sq), gamma_tilde,
                                        delta);
}

// Momentum connection around the residual path:
//   out = ff(V_hat + X + gamma_tilde * c * (X - X_prev))
// c is beta_tilde in constant mode or the adaptive value computed from
// consecutive attention outputs. The momentum term vanishes on the first
// layer (no previous input).
template <typename T, typename FeedForward>
DenseMatrix<T> momentum_connection(const DenseMatrix<T>& v_hat, const DenseMatrix<T>& x,
                                   const std::optional<DenseMatrix<T>>& x_prev,
                                   const MomentumConfig<T>& cfg, FeedForward&& ff,
                                   const std::optional<DenseMatrix<T>>& v_hat_prev = {}) {
    if (!v_hat.same_shape(x)) throw DimensionError("momentum_connection: shape mismatch");
    DenseMatrix<T> pre = add(v_hat, x);
    if (x_prev.has_value()) {
        if (!x_prev->same_shape(x)) throw DimensionError("momentum_connection: x_prev shape");
        T c;
        if (cfg.adaptive_beta_tilde) {
            c = v_hat_prev.has_value()
                    ? adaptive_connection_momentum(v_hat, *v_hat_prev, cfg.gamma_tilde, cfg.delta)
                    : T(0);
        } else {
            c = cfg.beta_tilde;
        }
        axpy(pre, cfg.gamma_tilde * c, sub(x, *x_prev));
    }
    return ff(pre);
}

}  // namespace momo
