// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "momo/attention.hpp"
#include "momo/rng.hpp"

using momo::FeatureMapKind;
using momo::Matrix;
using momo::MomentumConfig;
using momo::Rng;

namespace {

std::vector<double> row_vec(const Matrix& m, std::size_t r) {
    return std::vector<double>(m.row(r), m.row(r) + m.cols());
}

// Direct per-element softmax attention, one scalar sum at a time.
Matrix softmax_oracle(const Matrix& q, const Matrix& k, const Matrix& v, bool causal) {
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    Matrix out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t limit = causal ? i + 1 : k.rows();
        std::vector<double> w(limit);
        double mx = -1e300;
        for (std::size_t j = 0; j < limit; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < d; ++p) s += q(i, p) * k(j, p);
            w[j] = s / std::sqrt(static_cast<double>(d));
            mx = std::max(mx, w[j]);
        }
        double den = 0.0;
        for (std::size_t j = 0; j < limit; ++j) {
            w[j] = std::exp(w[j] - mx);
            den += w[j];
        }
        for (std::size_t j = 0; j < limit; ++j)
            for (std::size_t c = 0; c < d_v; ++c) out(i, c) += (w[j] / den) * v(j, c);
    }
    return out;
}

// Quadratic-form oracle: materializes phi(Q) phi(K)^T, the order the O(N)
// path never uses.
Matrix linear_oracle(const Matrix& q, const Matrix& k, const Matrix& v, FeatureMapKind fm,
                     double eps) {
    const Matrix pq = momo::apply_feature_map(fm, q);
    const Matrix pk = momo::apply_feature_map(fm, k);
    const Matrix a = momo::matmul_nt(pq, pk);  // N x N
    Matrix out(q.rows(), v.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double den = eps;
        for (std::size_t j = 0; j < k.rows(); ++j) den += a(i, j);
        for (std::size_t j = 0; j < k.rows(); ++j)
            for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += a(i, j) * v(j, c) / den;
    }
    return out;
}

// O(N^2) truncated-sum oracle for the causal form.
Matrix causal_linear_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                            FeatureMapKind fm, double eps) {
    const Matrix pq = momo::apply_feature_map(fm, q);
    const Matrix pk = momo::apply_feature_map(fm, k);
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    Matrix out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        double den = eps;
        for (std::size_t j = 0; j <= i; ++j) {
            double dotqk = 0.0;
            for (std::size_t p = 0; p < d; ++p) dotqk += pq(i, p) * pk(j, p);
            den += dotqk;
            for (std::size_t c = 0; c < d_v; ++c) out(i, c) += dotqk * v(j, c);
        }
        for (std::size_t c = 0; c < d_v; ++c) out(i, c) /= den;
    }
    return out;
}

// Double-loop oracle with explicit (1 - beta^{i-j+1})/(1 - beta) weights.
Matrix causal_momentum_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                              const MomentumConfig<>& cfg, FeatureMapKind fm, double eps) {
    const Matrix pq = momo::apply_feature_map(fm, q);
    const Matrix pk = momo::apply_feature_map(fm, k);
    const std::size_t n = q.rows(), d = q.cols(), d_v = v.cols();
    Matrix out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        double den = eps;
        for (std::size_t j = 0; j <= i; ++j) {
            double dotqk = 0.0;
            for (std::size_t p = 0; p < d; ++p) dotqk += pq(i, p) * pk(j, p);
            den += dotqk;
            const double w =
                (1.0 - std::pow(cfg.beta, static_cast<double>(i - j + 1))) / (1.0 - cfg.beta);
            for (std::size_t c = 0; c < d_v; ++c) out(i, c) += w * dotqk * v(j, c);
        }
        for (std::size_t c = 0; c < d_v; ++c) out(i, c) = cfg.gamma * out(i, c) / den;
    }
    return out;
}

Matrix momentum_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                       const MomentumConfig<>& cfg, FeatureMapKind fm, double eps) {
    const Matrix pq = momo::apply_feature_map(fm, q);
    const Matrix pk = momo::apply_feature_map(fm, k);
    const std::size_t n = q.rows(), nk = k.rows(), d = q.cols(), d_v = v.cols();
    Matrix out(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        double den = eps;
        for (std::size_t j = 0; j < nk; ++j) {
            double dotqk = 0.0;
            for (std::size_t p = 0; p < d; ++p) dotqk += pq(i, p) * pk(j, p);
            den += dotqk;
            const double w =
                (1.0 - std::pow(cfg.beta, static_cast<double>(nk - j))) / (1.0 - cfg.beta);
            for (std::size_t c = 0; c < d_v; ++c) out(i, c) += w * dotqk * v(j, c);
        }
        for (std::size_t c = 0; c < d_v; ++c) out(i, c) = cfg.gamma * out(i, c) / den;
    }
    return out;
}

Matrix stream_momentum_rnn(const Matrix& q, const Matrix& k, const Matrix& v,
                           const MomentumConfig<>& cfg, FeatureMapKind fm, double eps) {
    momo::RecurrentState<> state(q.cols(), v.cols());
    Matrix out(q.rows(), v.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        const auto o = momo::causal_momentum_rnn_step(state, row_vec(q, i), row_vec(k, i),
                                                      row_vec(v, i), cfg, fm, eps);
        for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) = o[c];
    }
    return out;
}

}  // namespace

TEST_CASE("project_qkv identity and scalar cases", "[attention]") {
    Rng rng(31);
    Matrix x = rng.uniform_matrix(5, 3, -1.0, 1.0);
    momo::AttentionParams<> p{Matrix::identity(3), Matrix::identity(3), Matrix::identity(3)};
    auto qkv = momo::project_qkv(x, p);
    CHECK(momo::max_abs_diff(qkv.q, x) == 0.0);
    CHECK(momo::max_abs_diff(qkv.v, x) == 0.0);

    Matrix x1{{2.0}};
    momo::AttentionParams<> ps{Matrix{{3.0}}, Matrix{{4.0}}, Matrix{{5.0}}};
    auto s = momo::project_qkv(x1, ps);
    CHECK(s.q(0, 0) == 6.0);
    CHECK(s.k(0, 0) == 8.0);
    CHECK(s.v(0, 0) == 10.0);
}

TEST_CASE("project_qkv matches per-token oracle", "[attention]") {
    Rng rng(33);
    const std::size_t n = 3, d_x = 4, d = 2, d_v = 5;
    momo::AttentionParams<> p{rng.uniform_matrix(d, d_x, -1.0, 1.0),
                              rng.uniform_matrix(d, d_x, -1.0, 1.0),
                              rng.uniform_matrix(d_v, d_x, -1.0, 1.0)};
    for (int b = 0; b < 2; ++b) {
        Matrix x = rng.uniform_matrix(n, d_x, -1.0, 1.0);
        auto qkv = momo::project_qkv(x, p);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> xi = row_vec(x, i);
            const std::vector<double> qi = momo::matvec(p.w_q, xi);
            const std::vector<double> vi = momo::matvec(p.w_v, xi);
            for (std::size_t c = 0; c < d; ++c)
                CHECK(qkv.q(i, c) == Catch::Approx(qi[c]).margin(1e-13));
            for (std::size_t c = 0; c < d_v; ++c)
                CHECK(qkv.v(i, c) == Catch::Approx(vi[c]).margin(1e-13));
        }
    }
    CHECK_THROWS_AS(momo::project_qkv(Matrix(2, 7), p), momo::DimensionError);
}

TEST_CASE("softmax attention singleton and uniform cases", "[attention]") {
    Rng rng(35);
    Matrix q = rng.uniform_matrix(1, 3, -1.0, 1.0);
    Matrix k = rng.uniform_matrix(1, 3, -1.0, 1.0);
    Matrix v = rng.uniform_matrix(1, 2, -1.0, 1.0);
    Matrix out = momo::softmax_attention(q, k, v, false);
    CHECK(momo::max_abs_diff(out, v) <= 1e-15);

    // identical keys: uniform weights, output is the mean of V rows
    Matrix q4 = rng.uniform_matrix(4, 3, -1.0, 1.0);
    Matrix k4(4, 3);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t p = 0; p < 3; ++p) k4(j, p) = 0.7 - 0.2 * static_cast<double>(p);
    Matrix v4 = rng.uniform_matrix(4, 2, -1.0, 1.0);
    Matrix got = momo::softmax_attention(q4, k4, v4, false);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (std::size_t j = 0; j < 4; ++j) mean += v4(j, c) / 4.0;
        for (std::size_t i = 0; i < 4; ++i) CHECK(got(i, c) == Catch::Approx(mean).margin(1e-13));
    }
}

TEST_CASE("softmax attention matches direct summation oracle", "[attention]") {
    Rng rng(37);
    for (bool causal : {false, true}) {
        Matrix q = rng.uniform_matrix(4, 3, -2.0, 2.0);
        Matrix k = rng.uniform_matrix(4, 3, -2.0, 2.0);
        Matrix v = rng.uniform_matrix(4, 2, -2.0, 2.0);
        CHECK(momo::max_abs_diff(momo::softmax_attention(q, k, v, causal),
                                 softmax_oracle(q, k, v, causal)) <= 1e-12);
    }
}

TEST_CASE("linear attention hand example with identity map", "[attention]") {
    Matrix q{{1.0}};
    Matrix k{{1.0}, {2.0}};
    Matrix v{{3.0}, {5.0}};
    Matrix out = momo::linear_attention(q, k, v, FeatureMapKind::Identity, 0.0);
    CHECK(out(0, 0) == Catch::Approx(13.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("linear attention single key returns the value", "[attention]") {
    Rng rng(41);
    Matrix q = rng.uniform_matrix(1, 4, -1.0, 1.0);
    Matrix k = rng.uniform_matrix(1, 4, -1.0, 1.0);
    Matrix v = rng.uniform_matrix(1, 3, -1.0, 1.0);
    Matrix out = momo::linear_attention(q, k, v, FeatureMapKind::EluPlusOne, 0.0);
    CHECK(momo::max_abs_diff(out, v) <= 1e-12);
}

TEST_CASE("linear attention matches quadratic-form oracle", "[attention]") {
    Rng rng(43);
    Matrix q = rng.uniform_matrix(6, 3, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(6, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(6, 3, -2.0, 2.0);
    CHECK(momo::max_abs_diff(momo::linear_attention(q, k, v, FeatureMapKind::EluPlusOne, 1e-6),
                             linear_oracle(q, k, v, FeatureMapKind::EluPlusOne, 1e-6)) <= 1e-12);
}

TEST_CASE("linear attention rejects non-positive denominator", "[attention]") {
    Matrix q{{1.0}};
    Matrix k{{-5.0}};
    Matrix v{{1.0}};
    CHECK_THROWS_AS(momo::linear_attention(q, k, v, FeatureMapKind::Identity, 1e-6),
                    momo::NumericalError);
}

TEST_CASE("linear attention implied weights form a distribution", "[attention]") {
    Rng rng(47);
    Matrix q = rng.uniform_matrix(5, 3, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(5, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(5, 2, -2.0, 2.0);
    const Matrix pq = momo::apply_feature_map(FeatureMapKind::EluPlusOne, q);
    const Matrix pk = momo::apply_feature_map(FeatureMapKind::EluPlusOne, k);
    Matrix a = momo::matmul_nt(pq, pk);
    Matrix recon(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < 5; ++j) row_sum += a(i, j);
        double check_sum = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            const double w = a(i, j) / row_sum;
            CHECK(w >= 0.0);
            check_sum += w;
            for (std::size_t c = 0; c < 2; ++c) recon(i, c) += w * v(j, c);
        }
        CHECK(check_sum == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(momo::max_abs_diff(recon, momo::linear_attention(q, k, v, FeatureMapKind::EluPlusOne,
                                                           0.0)) <= 1e-12);
}

TEST_CASE("causal linear attention prefix properties", "[attention]") {
    Rng rng(53);
    Matrix q = rng.uniform_matrix(8, 3, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(8, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(8, 2, -2.0, 2.0);
    const double eps = 1e-6;
    Matrix causal = momo::causal_linear_attention(q, k, v, FeatureMapKind::EluPlusOne, eps);

    // first position sees one key
    Matrix v1(1, 2);
    v1(0, 0) = v(0, 0);
    v1(0, 1) = v(0, 1);
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(momo::causal_linear_attention(
                  q, k, v, FeatureMapKind::EluPlusOne, 0.0)(0, c) ==
              Catch::Approx(v(0, c)).margin(1e-12));

    // last position equals the non-causal value at i = N
    Matrix full = momo::linear_attention(q, k, v, FeatureMapKind::EluPlusOne, eps);
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(causal(7, c) == Catch::Approx(full(7, c)).margin(1e-12));

    CHECK(momo::max_abs_diff(causal,
                             causal_linear_oracle(q, k, v, FeatureMapKind::EluPlusOne, eps)) <=
          1e-12);
}

TEST_CASE("causal linear rnn step matches hand evaluation", "[attention]") {
    momo::RecurrentState<> state(1, 1);
    auto o1 = momo::causal_linear_rnn_step(state, {1.0}, {1.0}, {3.0},
                                           FeatureMapKind::Identity, 0.0);
    CHECK(state.s(0, 0) == 3.0);
    CHECK(state.z[0] == 1.0);
    CHECK(state.index == 1);
    CHECK(o1[0] == Catch::Approx(3.0).epsilon(1e-14));
    auto o2 = momo::causal_linear_rnn_step(state, {1.0}, {2.0}, {5.0},
                                           FeatureMapKind::Identity, 0.0);
    CHECK(o2[0] == Catch::Approx(13.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("causal linear rnn stream equals batch form", "[attention]") {
    Rng rng(59);
    Matrix q = rng.uniform_matrix(16, 4, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(16, 4, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(16, 3, -2.0, 2.0);
    const double eps = 1e-6;
    momo::RecurrentState<> state(4, 3);
    Matrix streamed(16, 3);
    for (std::size_t i = 0; i < 16; ++i) {
        auto o = momo::causal_linear_rnn_step(state, row_vec(q, i), row_vec(k, i), row_vec(v, i),
                                              FeatureMapKind::EluPlusOne, eps);
        for (std::size_t c = 0; c < 3; ++c) streamed(i, c) = o[c];
    }
    CHECK(momo::max_abs_diff(
              streamed, momo::causal_linear_attention(q, k, v, FeatureMapKind::EluPlusOne, eps)) <=
          1e-12);
}

TEST_CASE("momentum rnn step with beta 0 gamma 1 is the linear step", "[attention]") {
    Rng rng(61);
    MomentumConfig<> cfg;
    cfg.beta = 0.0;
    cfg.gamma = 1.0;
    momo::RecurrentState<> sm(3, 2), sl(3, 2);
    for (int i = 0; i < 5; ++i) {
        const auto q = rng.uniform_vector(3, -2.0, 2.0);
        const auto k = rng.uniform_vector(3, -2.0, 2.0);
        const auto v = rng.uniform_vector(2, -2.0, 2.0);
        auto om = momo::causal_momentum_rnn_step(sm, q, k, v, cfg, FeatureMapKind::EluPlusOne,
                                                 1e-6);
        auto ol = momo::causal_linear_rnn_step(sl, q, k, v, FeatureMapKind::EluPlusOne, 1e-6);
        for (std::size_t c = 0; c < 2; ++c) CHECK(om[c] == Catch::Approx(ol[c]).margin(1e-15));
    }
    CHECK(momo::max_abs_diff(sm.s, sl.s) <= 1e-15);
}

TEST_CASE("momentum rnn scalar hand iteration", "[attention]") {
    // phi(k1) v1^T = 2, then phi(k2) v2^T = 4, beta = 0.5, gamma = 1
    MomentumConfig<> cfg;
    cfg.beta = 0.5;
    cfg.gamma = 1.0;
    momo::RecurrentState<> state(1, 1);
    momo::causal_momentum_rnn_step(state, {1.0}, {2.0}, {1.0}, cfg, FeatureMapKind::Identity,
                                   0.0);
    CHECK(state.m(0, 0) == -2.0);
    CHECK(state.s(0, 0) == 2.0);
    momo::causal_momentum_rnn_step(state, {1.0}, {4.0}, {1.0}, cfg, FeatureMapKind::Identity,
                                   0.0);
    CHECK(state.m(0, 0) == -5.0);
    CHECK(state.s(0, 0) == 7.0);
}

TEST_CASE("momentum rnn state matches closed-form reweighting", "[attention]") {
    Rng rng(67);
    for (double beta : {0.3, 0.7}) {
        MomentumConfig<> cfg;
        cfg.beta = beta;
        cfg.gamma = 0.8;
        const std::size_t n = 10, d = 3, d_v = 2;
        Matrix k = rng.uniform_matrix(n, d, -2.0, 2.0);
        Matrix v = rng.uniform_matrix(n, d_v, -2.0, 2.0);
        const Matrix pk = momo::apply_feature_map(FeatureMapKind::EluPlusOne, k);
        momo::RecurrentState<> state(d, d_v);
        for (std::size_t i = 0; i < n; ++i) {
            momo::causal_momentum_rnn_step(state, std::vector<double>(d, 0.0), row_vec(k, i),
                                           row_vec(v, i), cfg, FeatureMapKind::EluPlusOne, 1e-6);
            Matrix expect(d, d_v);
            for (std::size_t j = 0; j <= i; ++j) {
                const double w = cfg.gamma *
                                 (1.0 - std::pow(beta, static_cast<double>(i - j + 1))) /
                                 (1.0 - beta);
                for (std::size_t p = 0; p < d; ++p)
                    for (std::size_t c = 0; c < d_v; ++c)
                        expect(p, c) += w * pk(j, p) * v(j, c);
            }
            CHECK(momo::max_abs_diff(state.s, expect) <= 1e-12);
        }
    }
}

TEST_CASE("momentum rnn rejects beta outside [0,1)", "[attention]") {
    MomentumConfig<> cfg;
    cfg.beta = 1.0;
    momo::RecurrentState<> state(1, 1);
    CHECK_THROWS_AS(momo::causal_momentum_rnn_step(state, {1.0}, {1.0}, {1.0}, cfg,
                                                   FeatureMapKind::EluPlusOne, 1e-6),
                    momo::ConfigError);
    cfg.beta = -0.1;
    CHECK_THROWS_AS(momo::causal_momentum_rnn_step(state, {1.0}, {1.0}, {1.0}, cfg,
                                                   FeatureMapKind::EluPlusOne, 1e-6),
                    momo::ConfigError);
}

TEST_CASE("causal momentum attention reduces to causal linear at beta 0", "[attention]") {
    Rng rng(71);
    Matrix q = rng.uniform_matrix(9, 3, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(9, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(9, 2, -2.0, 2.0);
    MomentumConfig<> cfg;
    cfg.beta = 0.0;
    cfg.gamma = 1.0;
    CHECK(momo::max_abs_diff(
              momo::causal_momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6),
              momo::causal_linear_attention(q, k, v, FeatureMapKind::EluPlusOne, 1e-6)) <=
          1e-12);
}

TEST_CASE("momentum reweight coefficient values and monotonicity", "[attention]") {
    auto coeff = [](double beta, std::size_t lag) {
        return (1.0 - std::pow(beta, static_cast<double>(lag + 1))) / (1.0 - beta);
    };
    CHECK(coeff(0.5, 2) == Catch::Approx(1.75).epsilon(1e-14));  // (1 - 0.125) / 0.5
    for (double beta : {0.1, 0.5, 0.9}) {
        double prev = coeff(beta, 0);
        CHECK(prev == Catch::Approx(1.0).epsilon(1e-14));
        for (std::size_t lag = 1; lag < 30; ++lag) {
            const double cur = coeff(beta, lag);
            CHECK(cur > prev);  // older tokens carry strictly larger weight
            prev = cur;
        }
    }
}

TEST_CASE("causal momentum attention agrees with rnn stream and oracle", "[attention]") {
    Rng rng(73);
    MomentumConfig<> cfg;
    cfg.beta = 0.3;
    cfg.gamma = 0.7;
    Matrix q = rng.uniform_matrix(12, 3, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(12, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(12, 2, -2.0, 2.0);
    const double eps = 1e-6;
    Matrix batch = momo::causal_momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne, eps);
    CHECK(momo::max_abs_diff(batch,
                             stream_momentum_rnn(q, k, v, cfg, FeatureMapKind::EluPlusOne,
                                                 eps)) <= 1e-10);
    CHECK(momo::max_abs_diff(batch, causal_momentum_oracle(q, k, v, cfg,
                                                           FeatureMapKind::EluPlusOne, eps)) <=
          1e-12);
}

TEST_CASE("rnn and unrolled momentum attention are equivalent", "[attention]") {
    Rng rng(79);
    for (double beta : {0.0, 0.1, 0.5, 0.9}) {
        for (double gamma : {0.5, 1.0}) {
            MomentumConfig<> cfg;
            cfg.beta = beta;
            cfg.gamma = gamma;
            const std::size_t n = 1 + rng.uniform_int(32);
            const std::size_t d = 1 + rng.uniform_int(8);
            const std::size_t d_v = 1 + rng.uniform_int(8);
            Matrix q = rng.uniform_matrix(n, d, -3.0, 3.0);
            Matrix k = rng.uniform_matrix(n, d, -3.0, 3.0);
            Matrix v = rng.uniform_matrix(n, d_v, -3.0, 3.0);
            CHECK(momo::max_abs_diff(
                      momo::causal_momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne,
                                                      1e-6),
                      stream_momentum_rnn(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6)) <=
                  1e-10);
        }
    }
}

TEST_CASE("non-causal momentum attention", "[attention]") {
    Rng rng(83);
    Matrix q = rng.uniform_matrix(8, 3, -2.0, 2.0);
    Matrix k = rng.uniform_matrix(8, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(8, 2, -2.0, 2.0);

    MomentumConfig<> plain;
    plain.beta = 0.0;
    plain.gamma = 1.0;
    CHECK(momo::max_abs_diff(
              momo::momentum_attention(q, k, v, plain, FeatureMapKind::EluPlusOne, 1e-6),
              momo::linear_attention(q, k, v, FeatureMapKind::EluPlusOne, 1e-6)) <= 1e-12);

    MomentumConfig<> cfg;
    cfg.beta = 0.5;
    cfg.gamma = 1.0;
    CHECK(momo::max_abs_diff(
              momo::momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6),
              momentum_oracle(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6)) <= 1e-12);

    // single token: coefficient (1-beta)/(1-beta) = 1, output = gamma * v1
    MomentumConfig<> g;
    g.beta = 0.4;
    g.gamma = 0.6;
    Matrix q1 = rng.uniform_matrix(1, 3, -1.0, 1.0);
    Matrix k1 = rng.uniform_matrix(1, 3, -1.0, 1.0);
    Matrix v1 = rng.uniform_matrix(1, 2, -1.0, 1.0);
    Matrix out = momo::momentum_attention(q1, k1, v1, g, FeatureMapKind::EluPlusOne, 0.0);
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(out(0, c) == Catch::Approx(0.6 * v1(0, c)).margin(1e-12));
}

TEST_CASE("momentum attention rows coincide for identical queries", "[attention]") {
    Rng rng(89);
    const std::size_t n = 7;
    Matrix q(n, 3);
    const auto q0 = rng.uniform_vector(3, -2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < 3; ++p) q(i, p) = q0[p];
    Matrix k = rng.uniform_matrix(n, 3, -2.0, 2.0);
    Matrix v = rng.uniform_matrix(n, 2, -2.0, 2.0);
    MomentumConfig<> cfg;
    cfg.beta = 0.5;
    Matrix out = momo::momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(out(i, c) == Catch::Approx(out(0, c)).margin(1e-12));
}

TEST_CASE("momentum connection", "[attention]") {
    const auto identity_ff = [](const Matrix& m) { return m; };
    Rng rng(97);
    Matrix v_hat = rng.uniform_matrix(4, 3, -1.0, 1.0);
    Matrix x = rng.uniform_matrix(4, 3, -1.0, 1.0);
    Matrix x_prev = rng.uniform_matrix(4, 3, -1.0, 1.0);

    MomentumConfig<> off;
    off.beta_tilde = 0.0;
    Matrix plain = momo::momentum_connection(v_hat, x, std::optional<Matrix>(x_prev), off,
                                             identity_ff);
    CHECK(momo::max_abs_diff(plain, momo::add(v_hat, x)) == 0.0);

    MomentumConfig<> half;
    half.beta_tilde = 0.5;
    Matrix same = momo::momentum_connection(v_hat, x, std::optional<Matrix>(x), half,
                                            identity_ff);
    CHECK(momo::max_abs_diff(same, momo::add(v_hat, x)) == 0.0);

    // scalar: V = 1, X = 2, X_prev = 0, beta~ = 0.5, gamma~ = 1, ff = id -> 4
    Matrix v1{{1.0}}, x1{{2.0}}, xp{{0.0}};
    Matrix out = momo::momentum_connection(v1, x1, std::optional<Matrix>(xp), half, identity_ff);
    CHECK(out(0, 0) == Catch::Approx(4.0).epsilon(1e-14));

    CHECK_THROWS_AS(momo::momentum_connection(Matrix(2, 2), Matrix(3, 2),
                                              std::optional<Matrix>{}, half, identity_ff),
                    momo::DimensionError);
}

TEST_CASE("adaptive connection momentum", "[attention]") {
    Rng rng(101);
    Matrix u = rng.uniform_matrix(3, 3, -1.0, 1.0);
    CHECK(momo::adaptive_connection_momentum(u, u, 1.0, 1e-3) ==
          Catch::Approx(0.999).epsilon(1e-14));
    // gamma~ = 1, r = 4 -> (1 - 2)^2 = 1 -> projected
    CHECK(momo::adaptive_connection_momentum(4.0, 1.0, 1.0, 1e-3) ==
          Catch::Approx(0.999).epsilon(1e-14));
    CHECK(momo::adaptive_connection_momentum(0.25, 1.0, 1.0, 1e-3) ==
          Catch::Approx(0.25).epsilon(1e-14));
    Matrix zero(3, 3);
    CHECK(momo::adaptive_connection_momentum(u, zero, 1.0, 1e-3) == 0.0);
}

TEST_CASE("attention ops stay finite on bounded inputs", "[attention]") {
    Rng rng(103);
    MomentumConfig<> cfg;
    cfg.beta = 0.9;
    cfg.gamma = 1.0;
    for (int rep = 0; rep < 5; ++rep) {
        Matrix q = rng.uniform_matrix(10, 4, -10.0, 10.0);
        Matrix k = rng.uniform_matrix(10, 4, -10.0, 10.0);
        Matrix v = rng.uniform_matrix(10, 3, -10.0, 10.0);
        CHECK(momo::all_finite(momo::softmax_attention(q, k, v, true)));
        CHECK(momo::all_finite(momo::linear_attention(q, k, v, FeatureMapKind::EluPlusOne,
                                                      1e-6)));
        CHECK(momo::all_finite(
            momo::causal_linear_attention(q, k, v, FeatureMapKind::EluPlusOne, 1e-6)));
        CHECK(momo::all_finite(
            momo::causal_momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6)));
        CHECK(momo::all_finite(
            momo::momentum_attention(q, k, v, cfg, FeatureMapKind::EluPlusOne, 1e-6)));
    }
}

TEST_CASE("momentum config validation", "[attention]") {
    MomentumConfig<> cfg;
    cfg.validate();
    cfg.beta = 1.0;
    CHECK_THROWS_AS(cfg.validate(), momo::ConfigError);
    cfg.beta = 0.5;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), momo::ConfigError);
}
