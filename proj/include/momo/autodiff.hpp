// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "momo/error.hpp"
#include "momo/feature_map.hpp"
#include "momo/matrix.hpp"

namespace momo {

// Reverse-mode tape over dense matrices. Nodes are created in topological
// order by construction; backward() walks them in reverse. One tape per
// training step, single owner.
//
// Attention is differentiated through its streaming formulation: the
// causal_scan_qkv primitive carries the running D x D_v state of linear and
// momentum attention (S_i = decay * S_{i-1} + in_scale * phi(k_i) v_i^T),
// so both forward and backward stay O(N) in sequence length.
class Tape {
public:
    using NodeId = int;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::size_t node_count() const { return nodes_.size(); }

    const Matrix& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    NodeId leaf(Matrix value) {
        return push(std::move(value), nullptr);
    }

    NodeId param(const Matrix& value) { return leaf(value); }

    NodeId add(NodeId a, NodeId b) {
        Matrix out = momo::add(value(a), value(b));
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            t.accumulate(b, n.grad);
        });
    }

    NodeId sub(NodeId a, NodeId b) {
        Matrix out = momo::sub(value(a), value(b));
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            t.accumulate_scaled(b, -1.0, n.grad);
        });
    }

    NodeId scale(NodeId a, double c) {
        Matrix out = momo::scale(value(a), c);
        return push(std::move(out), [a, c](Tape& t, const Node& n) {
            t.accumulate_scaled(a, c, n.grad);
        });
    }

    // a + c * b
    NodeId add_scaled(NodeId a, NodeId b, double c) {
        Matrix out = value(a);
        axpy(out, c, value(b));
        return push(std::move(out), [a, b, c](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            t.accumulate_scaled(b, c, n.grad);
        });
    }

    NodeId add_const(NodeId a, double c) {
        Matrix out = value(a);
        for (auto& v : out.raw()) v += c;
        return push(std::move(out), [a](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
        });
    }

    NodeId matmul(NodeId a, NodeId b) {
        Matrix out = momo::matmul(value(a), value(b));
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, momo::matmul_nt(n.grad, t.value(b)));
            t.accumulate(b, momo::matmul_tn(t.value(a), n.grad));
        });
    }

    // a * b^T
    NodeId matmul_nt(NodeId a, NodeId b) {
        Matrix out = momo::matmul_nt(value(a), value(b));
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, momo::matmul(n.grad, t.value(b)));
            t.accumulate(b, momo::matmul_tn(n.grad, t.value(a)));
        });
    }

    // broadcast a 1 x C row onto every row of a
    NodeId add_rowvec(NodeId a, NodeId b) {
        if (value(b).rows() != 1 || value(b).cols() != value(a).cols())
            throw ShapeError("add_rowvec: b must be 1 x cols(a)");
        Matrix out = value(a);
        for (std::size_t r = 0; r < out.rows(); ++r)
            for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += value(b)(0, c);
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            Matrix gb(1, n.grad.cols());
            for (std::size_t r = 0; r < n.grad.rows(); ++r)
                for (std::size_t c = 0; c < n.grad.cols(); ++c) gb(0, c) += n.grad(r, c);
            t.accumulate(b, gb);
        });
    }

    NodeId feature_map(NodeId a, FeatureMapKind kind) {
        Matrix out = apply_feature_map(kind, value(a));
        return push(std::move(out), [a, kind](Tape& t, const Node& n) {
            Matrix ga = n.grad;
            const Matrix& x = t.value(a);
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga.raw()[i] *= feature_map_derivative(kind, x.raw()[i]);
            t.accumulate(a, ga);
        });
    }

    NodeId gelu(NodeId a) {
        Matrix out = value(a);
        for (auto& v : out.raw()) v = gelu_scalar(v);
        return push(std::move(out), [a](Tape& t, const Node& n) {
            Matrix ga = n.grad;
            const Matrix& x = t.value(a);
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga.raw()[i] *= gelu_derivative(x.raw()[i]);
            t.accumulate(a, ga);
        });
    }

    // gather rows of an embedding table
    NodeId embed(NodeId table, std::vector<int> ids) {
        const Matrix& tab = value(table);
        Matrix out(ids.size(), tab.cols());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const int id = ids[r];
            if (id < 0 || static_cast<std::size_t>(id) >= tab.rows())
                throw ShapeError("embed: id out of range");
            for (std::size_t c = 0; c < tab.cols(); ++c) out(r, c) = tab(id, c);
        }
        return push(std::move(out), [table, ids = std::move(ids)](Tape& t, const Node& n) {
            Matrix gt(t.value(table).rows(), t.value(table).cols());
            for (std::size_t r = 0; r < ids.size(); ++r)
                for (std::size_t c = 0; c < gt.cols(); ++c)
                    gt(static_cast<std::size_t>(ids[r]), c) += n.grad(r, c);
            t.accumulate(table, gt);
        });
    }

    // add a seq_len x C position table to each length-seq_len block of rows
    NodeId add_position(NodeId a, NodeId pos, std::size_t batch, std::size_t seq) {
        if (value(a).rows() != batch * seq || value(pos).rows() != seq ||
            value(pos).cols() != value(a).cols())
            throw ShapeError("add_position: shape mismatch");
        Matrix out = value(a);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < seq; ++i)
                for (std::size_t c = 0; c < out.cols(); ++c)
                    out(b * seq + i, c) += value(pos)(i, c);
        return push(std::move(out), [a, pos, batch, seq](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            Matrix gp(seq, n.grad.cols());
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t i = 0; i < seq; ++i)
                    for (std::size_t c = 0; c < n.grad.cols(); ++c)
                        gp(i, c) += n.grad(b * seq + i, c);
            t.accumulate(pos, gp);
        });
    }

    // out_ij = a_ij / d_i with d a column (rows x 1)
    NodeId div_by_col(NodeId a, NodeId d) {
        const Matrix& av = value(a);
        const Matrix& dv = value(d);
        if (dv.cols() != 1 || dv.rows() != av.rows())
            throw ShapeError("div_by_col: d must be rows(a) x 1");
        Matrix out = av;
        for (std::size_t r = 0; r < out.rows(); ++r)
            for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= dv(r, 0);
        return push(std::move(out), [a, d](Tape& t, const Node& n) {
            const Matrix& av2 = t.value(a);
            const Matrix& dv2 = t.value(d);
            Matrix ga(av2.rows(), av2.cols());
            Matrix gd(dv2.rows(), 1);
            for (std::size_t r = 0; r < av2.rows(); ++r) {
                const double di = dv2(r, 0);
                double acc = 0.0;
                for (std::size_t c = 0; c < av2.cols(); ++c) {
                    ga(r, c) = n.grad(r, c) / di;
                    acc += n.grad(r, c) * av2(r, c);
                }
                gd(r, 0) = -acc / (di * di);
            }
            t.accumulate(a, ga);
            t.accumulate(d, gd);
        });
    }

    // Streaming attention numerator/denominator shared by the linear and
    // momentum forms: per sequence, S_i = decay S_{i-1} + in_scale
    // phi_k_i v_i^T and out_i = phi_q_i^T S_i. Inputs are stacked
    // (batch * seq) x D and (batch * seq) x D_v.
    NodeId causal_scan_qkv(NodeId phi_q, NodeId phi_k, NodeId v, double decay, double in_scale,
                           std::size_t batch, std::size_t seq) {
        const Matrix& pq = value(phi_q);
        const Matrix& pk = value(phi_k);
        const Matrix& vv = value(v);
        if (pq.rows() != batch * seq || !pq.same_shape(pk) || vv.rows() != pq.rows())
            throw ShapeError("causal_scan_qkv: shape mismatch");
        const std::size_t d = pq.cols(), d_v = vv.cols();
        Matrix out(pq.rows(), d_v);
        auto states = std::make_shared<std::vector<Matrix>>();
        states->reserve(batch * seq);
        for (std::size_t b = 0; b < batch; ++b) {
            Matrix s(d, d_v);
            for (std::size_t i = 0; i < seq; ++i) {
                const std::size_t r = b * seq + i;
                const double* __restrict kr = pk.row(r);
                const double* __restrict vr = vv.row(r);
                for (std::size_t p = 0; p < d; ++p) {
                    double* __restrict sr = s.row(p);
                    const double kp = in_scale * kr[p];
                    for (std::size_t c = 0; c < d_v; ++c)
                        sr[c] = decay * sr[c] + kp * vr[c];
                }
                states->push_back(s);
                const double* __restrict qr = pq.row(r);
                double* __restrict orow = out.row(r);
                for (std::size_t p = 0; p < d; ++p) {
                    const double qp = qr[p];
                    const double* __restrict sr = s.row(p);
                    for (std::size_t c = 0; c < d_v; ++c) orow[c] += qp * sr[c];
                }
            }
        }
        return push(std::move(out), [phi_q, phi_k, v, decay, in_scale, batch, seq,
                                     states](Tape& t, const Node& n) {
            const Matrix& pq2 = t.value(phi_q);
            const Matrix& pk2 = t.value(phi_k);
            const Matrix& vv2 = t.value(v);
            const std::size_t d = pq2.cols(), d_v = vv2.cols();
            Matrix gq(pq2.rows(), d);
            Matrix gk(pk2.rows(), d);
            Matrix gv(vv2.rows(), d_v);
            for (std::size_t b = 0; b < batch; ++b) {
                Matrix sbar(d, d_v);
                for (std::size_t ii = seq; ii-- > 0;) {
                    const std::size_t r = b * seq + ii;
                    const Matrix& s_i = (*states)[r];
                    const double* __restrict gout = n.grad.row(r);
                    const double* __restrict qr = pq2.row(r);
                    // sbar_i = phi_q_i grad_i^T + decay * sbar_{i+1}
                    for (std::size_t p = 0; p < d; ++p) {
                        double* __restrict sb = sbar.row(p);
                        const double qp = qr[p];
                        for (std::size_t c = 0; c < d_v; ++c)
                            sb[c] = decay * sb[c] + qp * gout[c];
                    }
                    // grad wrt phi_q_i: S_i grad_i
                    double* __restrict gqr = gq.row(r);
                    for (std::size_t p = 0; p < d; ++p) {
                        const double* __restrict sr = s_i.row(p);
                        double acc = 0.0;
                        for (std::size_t c = 0; c < d_v; ++c) acc += sr[c] * gout[c];
                        gqr[p] = acc;
                    }
                    // grad wrt phi_k_i and v_i through the outer product
                    const double* __restrict kr = pk2.row(r);
                    const double* __restrict vr = vv2.row(r);
                    double* __restrict gkr = gk.row(r);
                    double* __restrict gvr = gv.row(r);
                    for (std::size_t p = 0; p < d; ++p) {
                        const double* __restrict sb = sbar.row(p);
                        double acc = 0.0;
                        for (std::size_t c = 0; c < d_v; ++c) {
                            acc += sb[c] * vr[c];
                            gvr[c] += in_scale * sb[c] * kr[p];
                        }
                        gkr[p] = in_scale * acc;
                    }
                }
            }
            t.accumulate(phi_q, gq);
            t.accumulate(phi_k, gk);
            t.accumulate(v, gv);
        });
    }

    // Full-sequence (non-causal) counterpart: every position shares the
    // weighted sum T = sum_j w_j phi_k_j v_j^T, weights indexed by position
    // within the sequence.
    NodeId full_sum_qkv(NodeId phi_q, NodeId phi_k, NodeId v, std::vector<double> weights,
                        std::size_t batch, std::size_t seq) {
        const Matrix& pq = value(phi_q);
        const Matrix& pk = value(phi_k);
        const Matrix& vv = value(v);
        if (pq.rows() != batch * seq || !pq.same_shape(pk) || vv.rows() != pq.rows() ||
            weights.size() != seq)
            throw ShapeError("full_sum_qkv: shape mismatch");
        const std::size_t d = pq.cols(), d_v = vv.cols();
        Matrix out(pq.rows(), d_v);
        auto sums = std::make_shared<std::vector<Matrix>>();
        sums->reserve(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            Matrix total(d, d_v);
            for (std::size_t j = 0; j < seq; ++j) {
                const std::size_t r = b * seq + j;
                const double w = weights[j];
                for (std::size_t p = 0; p < d; ++p) {
                    const double kp = w * pk(r, p);
                    for (std::size_t c = 0; c < d_v; ++c) total(p, c) += kp * vv(r, c);
                }
            }
            sums->push_back(total);
            for (std::size_t i = 0; i < seq; ++i) {
                const std::size_t r = b * seq + i;
                for (std::size_t p = 0; p < d; ++p)
                    for (std::size_t c = 0; c < d_v; ++c) out(r, c) += pq(r, p) * total(p, c);
            }
        }
        return push(std::move(out), [phi_q, phi_k, v, weights = std::move(weights), batch, seq,
                                     sums](Tape& t, const Node& n) {
            const Matrix& pq2 = t.value(phi_q);
            const Matrix& pk2 = t.value(phi_k);
            const Matrix& vv2 = t.value(v);
            const std::size_t d = pq2.cols(), d_v = vv2.cols();
            Matrix gq(pq2.rows(), d);
            Matrix gk(pk2.rows(), d);
            Matrix gv(vv2.rows(), d_v);
            for (std::size_t b = 0; b < batch; ++b) {
                const Matrix& total = (*sums)[b];
                Matrix tbar(d, d_v);
                for (std::size_t i = 0; i < seq; ++i) {
                    const std::size_t r = b * seq + i;
                    for (std::size_t p = 0; p < d; ++p) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < d_v; ++c) {
                            acc += total(p, c) * n.grad(r, c);
                            tbar(p, c) += pq2(r, p) * n.grad(r, c);
                        }
                        gq(r, p) = acc;
                    }
                }
                for (std::size_t j = 0; j < seq; ++j) {
                    const std::size_t r = b * seq + j;
                    const double w = weights[j];
                    for (std::size_t p = 0; p < d; ++p) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < d_v; ++c) {
                            acc += tbar(p, c) * vv2(r, c);
                            gv(r, c) += w * tbar(p, c) * pk2(r, p);
                        }
                        gk(r, p) = w * acc;
                    }
                }
            }
            t.accumulate(phi_q, gq);
            t.accumulate(phi_k, gk);
            t.accumulate(v, gv);
        });
    }

    // Softmax attention over stacked sequences; materializes the per-sequence
    // weight matrices for the backward pass.
    NodeId softmax_attention(NodeId q, NodeId k, NodeId v, bool causal, std::size_t batch,
                             std::size_t seq) {
        const Matrix& qv = value(q);
        const Matrix& kv = value(k);
        const Matrix& vv = value(v);
        if (qv.rows() != batch * seq || !qv.same_shape(kv) || vv.rows() != qv.rows())
            throw ShapeError("softmax_attention: shape mismatch");
        const std::size_t d = qv.cols(), d_v = vv.cols();
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
        Matrix out(qv.rows(), d_v);
        auto weights = std::make_shared<std::vector<Matrix>>();
        weights->reserve(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            Matrix w(seq, seq);
            for (std::size_t i = 0; i < seq; ++i) {
                const std::size_t ri = b * seq + i;
                const std::size_t limit = causal ? i + 1 : seq;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < limit; ++j) {
                    double s = 0.0;
                    for (std::size_t p = 0; p < d; ++p) s += qv(ri, p) * kv(b * seq + j, p);
                    w(i, j) = s * inv_sqrt_d;
                    mx = std::max(mx, w(i, j));
                }
                double den = 0.0;
                for (std::size_t j = 0; j < limit; ++j) {
                    w(i, j) = std::exp(w(i, j) - mx);
                    den += w(i, j);
                }
                for (std::size_t j = 0; j < limit; ++j) {
                    w(i, j) /= den;
                    for (std::size_t c = 0; c < d_v; ++c)
                        out(ri, c) += w(i, j) * vv(b * seq + j, c);
                }
            }
            weights->push_back(std::move(w));
        }
        return push(std::move(out), [q, k, v, causal, batch, seq, weights](Tape& t,
                                                                           const Node& n) {
            const Matrix& qv2 = t.value(q);
            const Matrix& kv2 = t.value(k);
            const Matrix& vv2 = t.value(v);
            const std::size_t d = qv2.cols(), d_v = vv2.cols();
            const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
            Matrix gq(qv2.rows(), d);
            Matrix gk(kv2.rows(), d);
            Matrix gv(vv2.rows(), d_v);
            for (std::size_t b = 0; b < batch; ++b) {
                const Matrix& w = (*weights)[b];
                for (std::size_t i = 0; i < seq; ++i) {
                    const std::size_t ri = b * seq + i;
                    const std::size_t limit = causal ? i + 1 : seq;
                    // dL/dw_ij and softmax backward in one sweep
                    double inner = 0.0;
                    std::vector<double> gw(limit);
                    for (std::size_t j = 0; j < limit; ++j) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < d_v; ++c)
                            acc += n.grad(ri, c) * vv2(b * seq + j, c);
                        gw[j] = acc;
                        inner += acc * w(i, j);
                    }
                    for (std::size_t j = 0; j < limit; ++j) {
                        const std::size_t rj = b * seq + j;
                        const double gs = (gw[j] - inner) * w(i, j) * inv_sqrt_d;
                        for (std::size_t p = 0; p < d; ++p) {
                            gq(ri, p) += gs * kv2(rj, p);
                            gk(rj, p) += gs * qv2(ri, p);
                        }
                        for (std::size_t c = 0; c < d_v; ++c)
                            gv(rj, c) += w(i, j) * n.grad(ri, c);
                    }
                }
            }
            t.accumulate(q, gq);
            t.accumulate(k, gk);
            t.accumulate(v, gv);
        });
    }

    // sum of elementwise product with a fixed matrix; yields a scalar node
    NodeId dot_all(NodeId a, Matrix w) {
        const Matrix& av = value(a);
        if (!av.same_shape(w)) throw ShapeError("dot_all: shape mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < av.size(); ++i) acc += av.raw()[i] * w.raw()[i];
        Matrix out(1, 1);
        out(0, 0) = acc;
        return push(std::move(out), [a, w = std::move(w)](Tape& t, const Node& n) {
            Matrix ga = w;
            for (auto& v : ga.raw()) v *= n.grad(0, 0);
            t.accumulate(a, ga);
        });
    }

    NodeId sum_all(NodeId a) {
        const Matrix& av = value(a);
        Matrix out(1, 1);
        for (const double v : av.raw()) out(0, 0) += v;
        return push(std::move(out), [a](Tape& t, const Node& n) {
            Matrix ga(t.value(a).rows(), t.value(a).cols(), n.grad(0, 0));
            t.accumulate(a, ga);
        });
    }

    // 0.5 * sum of squares
    NodeId half_sum_squares(NodeId a) {
        const Matrix& av = value(a);
        Matrix out(1, 1);
        for (const double v : av.raw()) out(0, 0) += 0.5 * v * v;
        return push(std::move(out), [a](Tape& t, const Node& n) {
            Matrix ga = t.value(a);
            for (auto& v : ga.raw()) v *= n.grad(0, 0);
            t.accumulate(a, ga);
        });
    }

    // Fused softmax + cross-entropy, mean over rows with target >= 0.
    NodeId cross_entropy_logits(NodeId logits, std::vector<int> targets) {
        const Matrix& lv = value(logits);
        if (targets.size() != lv.rows())
            throw ShapeError("cross_entropy_logits: one target per row");
        auto probs = std::make_shared<Matrix>(lv.rows(), lv.cols());
        std::size_t count = 0;
        double loss = 0.0;
        for (std::size_t r = 0; r < lv.rows(); ++r) {
            if (targets[r] < 0) continue;
            if (static_cast<std::size_t>(targets[r]) >= lv.cols())
                throw ShapeError("cross_entropy_logits: target out of range");
            ++count;
            double mx = lv(r, 0);
            for (std::size_t c = 1; c < lv.cols(); ++c) mx = std::max(mx, lv(r, c));
            double den = 0.0;
            for (std::size_t c = 0; c < lv.cols(); ++c) {
                (*probs)(r, c) = std::exp(lv(r, c) - mx);
                den += (*probs)(r, c);
            }
            for (std::size_t c = 0; c < lv.cols(); ++c) (*probs)(r, c) /= den;
            loss -= std::log((*probs)(r, static_cast<std::size_t>(targets[r])));
        }
        if (count == 0) throw ShapeError("cross_entropy_logits: no valid targets");
        Matrix out(1, 1);
        out(0, 0) = loss / static_cast<double>(count);
        return push(std::move(out), [logits, targets = std::move(targets), probs,
                                     count](Tape& t, const Node& n) {
            const double g = n.grad(0, 0) / static_cast<double>(count);
            Matrix gl(probs->rows(), probs->cols());
            for (std::size_t r = 0; r < probs->rows(); ++r) {
                if (targets[r] < 0) continue;
                for (std::size_t c = 0; c < probs->cols(); ++c) gl(r, c) = g * (*probs)(r, c);
                gl(r, static_cast<std::size_t>(targets[r])) -= g;
            }
            t.accumulate(logits, gl);
        });
    }

    // Seed d(loss)/d(loss) = 1 and sweep the tape in reverse.
    void backward(NodeId loss) {
        Node& ln = nodes_[static_cast<std::size_t>(loss)];
        if (ln.value.rows() != 1 || ln.value.cols() != 1)
            throw ShapeError("backward: loss must be a 1x1 scalar");
        for (auto& n : nodes_) n.grad.fill(0.0);
        ln.grad(0, 0) = 1.0;
        for (std::size_t i = static_cast<std::size_t>(loss) + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.back) n.back(*this, n);
        }
    }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Node&)> back;
    };

    NodeId push(Matrix value, std::function<void(Tape&, const Node&)> back) {
        Node n;
        n.grad = Matrix(value.rows(), value.cols());
        n.value = std::move(value);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    void accumulate(NodeId id, const Matrix& g) {
        Matrix& dst = nodes_[static_cast<std::size_t>(id)].grad;
        for (std::size_t i = 0; i < dst.size(); ++i) dst.raw()[i] += g.raw()[i];
    }

    void accumulate_scaled(NodeId id, double c, const Matrix& g) {
        Matrix& dst = nodes_[static_cast<std::size_t>(id)].grad;
        for (std::size_t i = 0; i < dst.size(); ++i) dst.raw()[i] += c * g.raw()[i];
    }

    static double gelu_scalar(double x) {
        return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    }

    static double gelu_derivative(double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
    }

    std::vector<Node> nodes_;
};

// Central-difference gradient check. Returns the worst relative error over
// all components, with |a| + |f| floored at 1 so near-zero components are
// judged on absolute error.
template <typename Forward>
double grad_check_max_rel_error(Forward&& forward, std::vector<Matrix*> params,
                                const std::vector<const Matrix*>& analytic, double h) {
    if (h < 1e-7 || h > 1e-3) throw ConfigError("grad_check: h must be in [1e-7, 1e-3]");
    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Matrix& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.raw()[i];
            p.raw()[i] = saved + h;
            const double fp = forward();
            p.raw()[i] = saved - h;
            const double fm = forward();
            p.raw()[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[pi]->raw()[i];
            const double denom = std::max(1.0, std::max(std::abs(fd), std::abs(an)));
            worst = std::max(worst, std::abs(fd - an) / denom);
        }
    }
    return worst;
}

}  // namespace momo
