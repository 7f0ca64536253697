// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "momo/attention.hpp"
#include "momo/autodiff.hpp"
#include "momo/error.hpp"
#include "momo/matrix.hpp"
#include "momo/rng.hpp"

namespace momo {

enum class AttentionKind { Softmax, Linear, Momentum, MomentumWithConnection, AdaptiveMomentum };

inline AttentionKind attention_kind_from_name(const std::string& name) {
    if (name == "softmax") return AttentionKind::Softmax;
    if (name == "linear") return AttentionKind::Linear;
    if (name == "momentum") return AttentionKind::Momentum;
    if (name == "momentum-connection") return AttentionKind::MomentumWithConnection;
    if (name == "adaptive-momentum") return AttentionKind::AdaptiveMomentum;
    throw ConfigError("unknown attention kind: " + name);
}

inline std::string attention_kind_name(AttentionKind k) {
    switch (k) {
        case AttentionKind::Softmax: return "softmax";
        case AttentionKind::Linear: return "linear";
        case AttentionKind::Momentum: return "momentum";
        case AttentionKind::MomentumWithConnection: return "momentum-connection";
        case AttentionKind::AdaptiveMomentum: return "adaptive-momentum";
    }
    return "?";
}

struct ModelConfig {
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t d_model = 16;
    std::size_t d_ff = 64;
    AttentionKind attention_kind = AttentionKind::Linear;
    MomentumConfig<> momentum;
    FeatureMapKind feature_map = FeatureMapKind::EluPlusOne;

    void validate() const {
        if (n_layers == 0 || n_heads == 0 || d_model == 0 || d_ff == 0)
            throw ConfigError("ModelConfig: sizes must be positive");
        if (d_model % n_heads != 0)
            throw ConfigError("ModelConfig: d_model must be divisible by n_heads");
        momentum.validate();
    }

    bool uses_connection() const {
        return attention_kind == AttentionKind::MomentumWithConnection ||
               attention_kind == AttentionKind::AdaptiveMomentum;
    }
};

// Autoregressive toy transformer over a fixed-length token task. Layers
// follow out = ff(attention + input), optionally with the momentum term
// gamma_tilde * c * (X_l - X_{l-1}) added for the connection variants.
class TransformerModel {
public:
    struct Layer {
        std::vector<Matrix> w_q, w_k, w_v;  // per head: d_head x d_model
        std::vector<Matrix> w_o;            // per head: d_head x d_model
        Matrix w1, b1, w2, b2;              // feedforward
    };

    ModelConfig cfg;
    std::size_t vocab_size = 0;
    std::size_t seq_len = 0;
    Matrix embedding;  // vocab x d_model
    Matrix positions;  // seq_len x d_model
    std::vector<Layer> layers;
    Matrix w_cls, b_cls;

    struct ForwardResult {
        std::unique_ptr<Tape> tape;
        Tape::NodeId logits = -1;
        Tape::NodeId loss = -1;
        std::vector<Tape::NodeId> param_nodes;
        // connection momentum actually used per layer (0 when inactive)
        std::vector<double> connection_momenta;
    };

    std::vector<Matrix*> parameters() {
        std::vector<Matrix*> out;
        out.push_back(&embedding);
        out.push_back(&positions);
        for (auto& l : layers) {
            for (auto& m : l.w_q) out.push_back(&m);
            for (auto& m : l.w_k) out.push_back(&m);
            for (auto& m : l.w_v) out.push_back(&m);
            for (auto& m : l.w_o) out.push_back(&m);
            out.push_back(&l.w1);
            out.push_back(&l.b1);
            out.push_back(&l.w2);
            out.push_back(&l.b2);
        }
        out.push_back(&w_cls);
        out.push_back(&b_cls);
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (const Matrix* m : parameters()) n += m->size();
        return n;
    }

    // Forward over a batch of equal-length token sequences. Supplying
    // targets (stacked, -1 = ignore) adds the cross-entropy loss node.
    // frozen_connection replays recorded adaptive momenta; the adaptive
    // scalar is treated as a schedule, never differentiated through.
    ForwardResult forward(const std::vector<std::vector<int>>& tokens,
                          const std::vector<int>* targets = nullptr,
                          const std::vector<double>* frozen_connection = nullptr) const {
        const std::size_t batch = tokens.size();
        if (batch == 0) throw ShapeError("forward: empty batch");
        const std::size_t n = tokens[0].size();
        if (n != seq_len) throw ShapeError("forward: sequence length mismatch");
        std::vector<int> flat;
        flat.reserve(batch * n);
        for (const auto& seq : tokens) {
            if (seq.size() != n) throw ShapeError("forward: ragged batch");
            flat.insert(flat.end(), seq.begin(), seq.end());
        }

        ForwardResult res;
        res.tape = std::make_unique<Tape>();
        Tape& t = *res.tape;

        const Tape::NodeId emb_id = t.param(embedding);
        const Tape::NodeId pos_id = t.param(positions);
        res.param_nodes.push_back(emb_id);
        res.param_nodes.push_back(pos_id);
        struct LayerNodes {
            std::vector<Tape::NodeId> w_q, w_k, w_v, w_o;
            Tape::NodeId w1, b1, w2, b2;
        };
        std::vector<LayerNodes> lids(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (const auto& m : layers[l].w_q) lids[l].w_q.push_back(t.param(m));
            for (const auto& m : layers[l].w_k) lids[l].w_k.push_back(t.param(m));
            for (const auto& m : layers[l].w_v) lids[l].w_v.push_back(t.param(m));
            for (const auto& m : layers[l].w_o) lids[l].w_o.push_back(t.param(m));
            lids[l].w1 = t.param(layers[l].w1);
            lids[l].b1 = t.param(layers[l].b1);
            lids[l].w2 = t.param(layers[l].w2);
            lids[l].b2 = t.param(layers[l].b2);
            for (auto id : lids[l].w_q) res.param_nodes.push_back(id);
            for (auto id : lids[l].w_k) res.param_nodes.push_back(id);
            for (auto id : lids[l].w_v) res.param_nodes.push_back(id);
            for (auto id : lids[l].w_o) res.param_nodes.push_back(id);
            res.param_nodes.push_back(lids[l].w1);
            res.param_nodes.push_back(lids[l].b1);
            res.param_nodes.push_back(lids[l].w2);
            res.param_nodes.push_back(lids[l].b2);
        }
        const Tape::NodeId cls_id = t.param(w_cls);
        const Tape::NodeId bcls_id = t.param(b_cls);
        res.param_nodes.push_back(cls_id);
        res.param_nodes.push_back(bcls_id);

        const Tape::NodeId ones =
            t.leaf(Matrix(batch * n, 1, 1.0));  // denominator pseudo-values

        Tape::NodeId x = t.add_position(t.embed(emb_id, flat), pos_id, batch, n);
        Tape::NodeId x_prev = -1;
        Tape::NodeId attn_prev = -1;
        res.connection_momenta.assign(layers.size(), 0.0);

        for (std::size_t l = 0; l < layers.size(); ++l) {
            Tape::NodeId attn_out = -1;
            for (std::size_t h = 0; h < cfg.n_heads; ++h) {
                const Tape::NodeId qh = t.matmul_nt(x, lids[l].w_q[h]);
                const Tape::NodeId kh = t.matmul_nt(x, lids[l].w_k[h]);
                const Tape::NodeId vh = t.matmul_nt(x, lids[l].w_v[h]);
                Tape::NodeId oh;
                if (cfg.attention_kind == AttentionKind::Softmax) {
                    oh = t.softmax_attention(qh, kh, vh, /*causal=*/true, batch, n);
                } else {
                    const Tape::NodeId pq = t.feature_map(qh, cfg.feature_map);
                    const Tape::NodeId pk = t.feature_map(kh, cfg.feature_map);
                    const Tape::NodeId den = t.add_const(
                        t.causal_scan_qkv(pq, pk, ones, 1.0, 1.0, batch, n), cfg.momentum.eps);
                    if (cfg.attention_kind == AttentionKind::Linear) {
                        const Tape::NodeId num =
                            t.causal_scan_qkv(pq, pk, vh, 1.0, 1.0, batch, n);
                        oh = t.div_by_col(num, den);
                    } else {
                        const double beta = cfg.momentum.beta;
                        const Tape::NodeId plain =
                            t.causal_scan_qkv(pq, pk, vh, 1.0, 1.0, batch, n);
                        const Tape::NodeId geom =
                            t.causal_scan_qkv(pq, pk, vh, beta, beta, batch, n);
                        const Tape::NodeId num =
                            t.scale(t.sub(plain, geom), cfg.momentum.gamma / (1.0 - beta));
                        oh = t.div_by_col(num, den);
                    }
                }
                const Tape::NodeId proj = t.matmul(oh, lids[l].w_o[h]);
                attn_out = (h == 0) ? proj : t.add(attn_out, proj);
            }

            Tape::NodeId pre = t.add(attn_out, x);
            if (cfg.uses_connection() && l > 0) {
                double c;
                if (cfg.attention_kind == AttentionKind::AdaptiveMomentum) {
                    if (frozen_connection) {
                        c = (*frozen_connection)[l];
                    } else {
                        c = adaptive_connection_momentum(
                            frobenius_norm(momo::sub(t.value(attn_out), t.value(attn_prev))),
                            frobenius_norm(t.value(attn_prev)), cfg.momentum.gamma_tilde,
                            cfg.momentum.delta);
                    }
                } else {
                    c = cfg.momentum.beta_tilde;
                }
                res.connection_momenta[l] = c;
                pre = t.add_scaled(pre, t.sub(x, x_prev), cfg.momentum.gamma_tilde * c);
            }

            const Tape::NodeId hidden = t.gelu(t.add_rowvec(t.matmul_nt(pre, lids[l].w1),
                                                            lids[l].b1));
            const Tape::NodeId out = t.add_rowvec(t.matmul_nt(hidden, lids[l].w2), lids[l].b2);
            x_prev = x;
            attn_prev = attn_out;
            x = out;
        }

        res.logits = t.add_rowvec(t.matmul_nt(x, cls_id), bcls_id);
        if (targets) res.loss = t.cross_entropy_logits(res.logits, *targets);
        return res;
    }
};

// Fresh model with deterministic initialization from the rng stream.
inline TransformerModel build_model(const ModelConfig& cfg, std::size_t vocab_size,
                                    std::size_t seq_len, Rng& rng) {
    cfg.validate();
    if (vocab_size < 2) throw ConfigError("build_model: vocab_size must be >= 2");
    TransformerModel m;
    m.cfg = cfg;
    m.vocab_size = vocab_size;
    m.seq_len = seq_len;
    const std::size_t d_head = cfg.d_model / cfg.n_heads;

    auto glorot = [&rng](std::size_t rows, std::size_t cols) {
        const double std_dev = std::sqrt(2.0 / static_cast<double>(rows + cols));
        return rng.normal_matrix(rows, cols, std_dev);
    };

    m.embedding = rng.normal_matrix(vocab_size, cfg.d_model, 0.25);
    m.positions = rng.normal_matrix(seq_len, cfg.d_model, 0.25);
    m.layers.resize(cfg.n_layers);
    for (auto& l : m.layers) {
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            l.w_q.push_back(glorot(d_head, cfg.d_model));
            l.w_k.push_back(glorot(d_head, cfg.d_model));
            l.w_v.push_back(glorot(d_head, cfg.d_model));
            l.w_o.push_back(glorot(d_head, cfg.d_model));
        }
        l.w1 = glorot(cfg.d_ff, cfg.d_model);
        l.b1 = Matrix(1, cfg.d_ff);
        l.w2 = glorot(cfg.d_model, cfg.d_ff);
        l.b2 = Matrix(1, cfg.d_model);
    }
    m.w_cls = glorot(vocab_size, cfg.d_model);
    m.b_cls = Matrix(1, vocab_size);
    return m;
}

}  // namespace momo
