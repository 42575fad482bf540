// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Temporal mix-of-experts attention. Each key-value pair acts as a local
// expert tied to one token; a query scores every candidate expert by
// feature similarity times a learnable temporal-decay factor, keeps the
// top-k, optionally appends a shared global expert, and aggregates the
// survivors through a softmax gate. Vanilla and random-subset attention
// live here too as baselines.

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "tmoe/common.hpp"
#include "tmoe/ops.hpp"
#include "tmoe/rng.hpp"
#include "tmoe/tensor.hpp"

namespace tmoe {

enum class AttentionVariant { full, random, tmoe };

inline std::string to_string(AttentionVariant v) {
    switch (v) {
        case AttentionVariant::full: return "full";
        case AttentionVariant::random: return "random";
        case AttentionVariant::tmoe: return "tmoe";
    }
    return "?";
}

inline AttentionVariant attention_variant_from_string(const std::string& s) {
    if (s == "full") return AttentionVariant::full;
    if (s == "random") return AttentionVariant::random;
    if (s == "tmoe") return AttentionVariant::tmoe;
    throw InvalidArgument("unknown attention variant: " + s);
}

struct TmoeConfig {
    int d_model = 128;
    int num_heads = 8;
    int top_k = 8;
    bool share_global = true;
    bool causal = false;
    AttentionVariant variant = AttentionVariant::tmoe;

    int d_k() const { return d_model / num_heads; }

    void validate() const {
        if (d_model < 1 || num_heads < 1) throw InvalidArgument("TmoeConfig: bad dimensions");
        if (d_model % num_heads != 0)
            throw InvalidArgument("TmoeConfig: d_model must be divisible by num_heads");
        if (top_k < 1) throw InvalidArgument("TmoeConfig: top_k must be >= 1");
        if (d_k() < 1) throw InvalidArgument("TmoeConfig: d_k must be >= 1");
    }
};

// Per-head projection weights plus the shared output projection.
template <typename T>
struct AttentionParams {
    std::vector<Tensor<T>> wq, wk, wv;      // [d_model x d_k] each
    std::vector<Tensor<T>> decay;           // [1] raw lambda per head
    std::vector<Tensor<T>> phi_w, phi_b;    // global-expert projection per head
    Tensor<T> wo;                           // [d_model x d_model]
};

// Diagnostics for every routing decision the mechanism makes.
struct QuerySelection {
    std::vector<double> candidate_scores;  // one per candidate (0..t for causal)
    std::vector<int> selected;             // token indices; -1 marks the global expert
    std::vector<double> gates;             // same order as selected, sums to 1
};

struct HeadTrace {
    std::vector<QuerySelection> queries;
};

struct SelectionTrace {
    std::vector<HeadTrace> heads;
};

// psi(d) = exp(-softplus(lambda) * d / n_ctx): 1 at d=0, strictly decreasing
// in d whenever softplus(lambda) > 0, and always in (0, 1].
template <typename T>
inline T temporal_relevance(std::size_t distance, T lambda_raw, std::size_t n_ctx) {
    if (n_ctx < 1) throw InvalidArgument("temporal_relevance: n_ctx must be >= 1");
    return std::exp(-softplus(lambda_raw) * static_cast<T>(distance) / static_cast<T>(n_ctx));
}

// [N x N] matrix of psi(|t-s|), differentiable in the raw lambda.
template <typename T>
Tensor<T> temporal_decay_matrix(const Tensor<T>& lambda_raw, std::size_t n) {
    if (lambda_raw.size() != 1) throw InvalidShape("temporal_decay_matrix: lambda is a scalar");
    const T lam = lambda_raw(0);
    const T sp = softplus(lam);
    std::vector<T> out(n * n);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t s = 0; s < n; ++s) {
            const T d = static_cast<T>(t > s ? t - s : s - t);
            out[t * n + s] = std::exp(-sp * d / static_cast<T>(n));
        }
    return detail::make_op<T>(
        Shape{n, n}, std::move(out), {lambda_raw},
        [n, lam](detail::Node<T>& node) {
            auto* gl = detail::grad_sink(node.parents[0]);
            if (!gl) return;
            const T sig = sigmoid(lam);  // d softplus / d lambda
            T acc = T(0);
            for (std::size_t t = 0; t < n; ++t)
                for (std::size_t s = 0; s < n; ++s) {
                    const T d = static_cast<T>(t > s ? t - s : s - t);
                    acc += node.grad[t * n + s] * node.values[t * n + s] *
                           (-d / static_cast<T>(n)) * sig;
                }
            (*gl)[0] += acc;
        },
        "temporal_decay_matrix");
}

// Scores of every candidate expert for one query position (plain values,
// no graph). Candidates are 0..t under causal, all tokens otherwise.
template <typename T>
inline std::vector<T> local_expert_scores(std::span<const T> q_t, const Tensor<T>& k,
                                          std::size_t t, T lambda_raw, bool causal) {
    const std::size_t n = k.rows(), d_k = k.cols();
    if (t >= n) throw InvalidArgument("local_expert_scores: query index out of range");
    const std::size_t n_cand = causal ? t + 1 : n;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(d_k));
    std::vector<T> scores(n_cand);
    for (std::size_t s = 0; s < n_cand; ++s) {
        T sim = T(0);
        for (std::size_t j = 0; j < d_k; ++j) sim += q_t[j] * k(s, j);
        const std::size_t dist = t > s ? t - s : s - t;
        scores[s] = sim * inv_sqrt * temporal_relevance(dist, lambda_raw, n);
    }
    return scores;
}

template <typename T>
inline std::vector<int> select_local_experts(std::span<const T> scores, int k) {
    return top_k_indices(scores, k);
}

// Softmax-weighted self-pooling over time, one weight profile per model
// dimension: pooled_d = sum_t softmax_t(X[., d]) * X[t, d].
template <typename T>
Tensor<T> softpool_time(const Tensor<T>& x) {
    if (x.rank() != 2 || x.rows() < 1) throw InvalidShape("softpool_time: expects [N x d]");
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<T> out(d, T(0));
    std::vector<T> w(n);
    for (std::size_t j = 0; j < d; ++j) {
        T maxv = x(0, j);
        for (std::size_t t = 1; t < n; ++t) maxv = std::max(maxv, x(t, j));
        T sum = T(0);
        for (std::size_t t = 0; t < n; ++t) {
            w[t] = std::exp(x(t, j) - maxv);
            sum += w[t];
        }
        for (std::size_t t = 0; t < n; ++t) out[j] += (w[t] / sum) * x(t, j);
    }
    return detail::make_op<T>(
        Shape{1, d}, std::move(out), {x},
        [n, d](detail::Node<T>& node) {
            auto* gx = detail::grad_sink(node.parents[0]);
            if (!gx) return;
            const auto& xv = node.parents[0]->values;
            std::vector<T> w(n);
            for (std::size_t j = 0; j < d; ++j) {
                T maxv = xv[j];
                for (std::size_t t = 1; t < n; ++t) maxv = std::max(maxv, xv[t * d + j]);
                T sum = T(0);
                for (std::size_t t = 0; t < n; ++t) {
                    w[t] = std::exp(xv[t * d + j] - maxv);
                    sum += w[t];
                }
                const T pooled = node.values[j];
                const T gp = node.grad[j];
                for (std::size_t t = 0; t < n; ++t) {
                    const T wt = w[t] / sum;
                    // d pooled / d x_t = w_t * (1 + x_t - pooled)
                    (*gx)[t * d + j] += gp * wt * (T(1) + xv[t * d + j] - pooled);
                }
            }
        },
        "softpool_time");
}

// Causal variant: row t pools over tokens 0..t only.
template <typename T>
Tensor<T> softpool_time_prefix(const Tensor<T>& x) {
    if (x.rank() != 2 || x.rows() < 1) throw InvalidShape("softpool_time_prefix: expects [N x d]");
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<T> out(n * d, T(0));
    std::vector<T> w(n);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < d; ++j) {
            T maxv = x(0, j);
            for (std::size_t u = 1; u <= t; ++u) maxv = std::max(maxv, x(u, j));
            T sum = T(0);
            for (std::size_t u = 0; u <= t; ++u) {
                w[u] = std::exp(x(u, j) - maxv);
                sum += w[u];
            }
            T pooled = T(0);
            for (std::size_t u = 0; u <= t; ++u) pooled += (w[u] / sum) * x(u, j);
            out[t * d + j] = pooled;
        }
    }
    return detail::make_op<T>(
        Shape{n, d}, std::move(out), {x},
        [n, d](detail::Node<T>& node) {
            auto* gx = detail::grad_sink(node.parents[0]);
            if (!gx) return;
            const auto& xv = node.parents[0]->values;
            std::vector<T> w(n);
            for (std::size_t t = 0; t < n; ++t) {
                for (std::size_t j = 0; j < d; ++j) {
                    const T gp = node.grad[t * d + j];
                    if (gp == T(0)) continue;
                    T maxv = xv[j];
                    for (std::size_t u = 1; u <= t; ++u)
                        maxv = std::max(maxv, xv[u * d + j]);
                    T sum = T(0);
                    for (std::size_t u = 0; u <= t; ++u) {
                        w[u] = std::exp(xv[u * d + j] - maxv);
                        sum += w[u];
                    }
                    const T pooled = node.values[t * d + j];
                    for (std::size_t u = 0; u <= t; ++u) {
                        const T wu = w[u] / sum;
                        (*gx)[u * d + j] += gp * wu * (T(1) + xv[u * d + j] - pooled);
                    }
                }
            }
        },
        "softpool_time_prefix");
}

// ---------------------------------------------------------------------------
// Vanilla scaled dot-product attention (baseline / degeneration oracle)
// ---------------------------------------------------------------------------

template <typename T>
struct AttentionOutput {
    Tensor<T> y;        // [N x d_k]
    Tensor<T> weights;  // [N x N], detached; zero above the diagonal if causal
};

template <typename T>
AttentionOutput<T> vanilla_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                     bool causal) {
    if (q.rank() != 2 || q.shape() != k.shape() || k.shape() != v.shape())
        throw InvalidShape("vanilla_attention: Q/K/V must share [N x d_k]");
    const std::size_t n = q.rows(), d_k = q.cols();
    if (n < 1) throw InvalidShape("vanilla_attention: empty sequence");
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(d_k));

    std::vector<T> alpha(n * n, T(0));
    std::vector<T> y(n * d_k, T(0));
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t limit = causal ? t + 1 : n;
        T* arow = alpha.data() + t * n;
        for (std::size_t s = 0; s < limit; ++s) {
            T dot = T(0);
            for (std::size_t j = 0; j < d_k; ++j) dot += q(t, j) * k(s, j);
            arow[s] = dot * inv_sqrt;
        }
        stable_softmax_inplace(std::span<T>(arow, limit));
        for (std::size_t s = 0; s < limit; ++s)
            for (std::size_t j = 0; j < d_k; ++j) y[t * d_k + j] += arow[s] * v(s, j);
    }

    Tensor<T> weights = Tensor<T>::from_data(Shape{n, n}, alpha);
    Tensor<T> out = detail::make_op<T>(
        Shape{n, d_k}, std::move(y), {q, k, v},
        [n, d_k, causal, inv_sqrt, alpha = std::move(alpha)](detail::Node<T>& node) {
            const auto& qv = node.parents[0]->values;
            const auto& kv = node.parents[1]->values;
            const auto& vv = node.parents[2]->values;
            auto* gq = detail::grad_sink(node.parents[0]);
            auto* gk = detail::grad_sink(node.parents[1]);
            auto* gv = detail::grad_sink(node.parents[2]);
            std::vector<T> dalpha(n);
            for (std::size_t t = 0; t < n; ++t) {
                const std::size_t limit = causal ? t + 1 : n;
                const T* arow = alpha.data() + t * n;
                const T* dy = node.grad.data() + t * d_k;
                T dot_sum = T(0);
                for (std::size_t s = 0; s < limit; ++s) {
                    T da = T(0);
                    for (std::size_t j = 0; j < d_k; ++j) da += dy[j] * vv[s * d_k + j];
                    dalpha[s] = da;
                    dot_sum += da * arow[s];
                    if (gv)
                        for (std::size_t j = 0; j < d_k; ++j)
                            (*gv)[s * d_k + j] += arow[s] * dy[j];
                }
                for (std::size_t s = 0; s < limit; ++s) {
                    const T dlogit = arow[s] * (dalpha[s] - dot_sum) * inv_sqrt;
                    if (gq)
                        for (std::size_t j = 0; j < d_k; ++j)
                            (*gq)[t * d_k + j] += dlogit * kv[s * d_k + j];
                    if (gk)
                        for (std::size_t j = 0; j < d_k; ++j)
                            (*gk)[s * d_k + j] += dlogit * qv[t * d_k + j];
                }
            }
        },
        "vanilla_attention");
    return {std::move(out), std::move(weights)};
}

// ---------------------------------------------------------------------------
// Sparse expert attention (the TMOE core and the random-subset ablation)
// ---------------------------------------------------------------------------

enum class SelectionMode { top_k, random };

template <typename T>
struct HeadForwardResult {
    Tensor<T> y;  // [N x d_k]
    HeadTrace trace;
};

// One attention head over a sparse expert subset.
//
//   scores  s_{t,s} = (q_t . k_s / sqrt(d_k)) * psi[t,s]
//   subset  top-k of the candidates (or a seeded uniform subset)
//   global  optional shared expert with score q_t . g_t / sqrt(d_k), no psi
//   gates   softmax over the selected scores; y_t = sum gates * values
//
// Gradients flow through gates, values, psi and the global rows; the discrete
// selection is treated as fixed (gradient only w.r.t. survivors).
template <typename T>
HeadForwardResult<T> sparse_expert_attention(const Tensor<T>& q, const Tensor<T>& k,
                                             const Tensor<T>& v, const Tensor<T>& psi,
                                             const Tensor<T>& global_rows, int top_k, bool causal,
                                             SelectionMode mode, Rng* rng) {
    if (q.rank() != 2 || q.shape() != k.shape() || k.shape() != v.shape())
        throw InvalidShape("sparse_expert_attention: Q/K/V must share [N x d_k]");
    const std::size_t n = q.rows(), d_k = q.cols();
    if (n < 1) throw InvalidShape("sparse_expert_attention: empty sequence");
    if (top_k < 1) throw InvalidArgument("sparse_expert_attention: top_k must be >= 1");
    const bool has_psi = psi.defined();
    const bool has_global = global_rows.defined();
    if (has_psi && (psi.rows() != n || psi.cols() != n))
        throw InvalidShape("sparse_expert_attention: psi must be [N x N]");
    if (has_global && (global_rows.rows() != n || global_rows.cols() != d_k))
        throw InvalidShape("sparse_expert_attention: global rows must be [N x d_k]");
    if (mode == SelectionMode::random && rng == nullptr)
        throw InvalidArgument("sparse_expert_attention: random mode needs an rng");

    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(d_k));

    struct QuerySel {
        std::vector<int> sel;    // token indices; -1 = global (always last)
        std::vector<T> gates;
    };
    std::vector<QuerySel> picks(n);
    HeadTrace trace;
    trace.queries.resize(n);

    std::vector<T> y(n * d_k, T(0));
    std::vector<T> cand(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t n_cand = causal ? t + 1 : n;
        for (std::size_t s = 0; s < n_cand; ++s) {
            T sim = T(0);
            for (std::size_t j = 0; j < d_k; ++j) sim += q(t, j) * k(s, j);
            sim *= inv_sqrt;
            cand[s] = has_psi ? sim * psi(t, s) : sim;
            if (!std::isfinite(static_cast<double>(cand[s])))
                throw NonFinite("sparse_expert_attention: non-finite expert score");
        }

        std::vector<int> sel;
        if (mode == SelectionMode::top_k) {
            sel = top_k_indices(std::span<const T>(cand.data(), n_cand), top_k);
        } else {
            sel = rng->sample_without_replacement(static_cast<int>(n_cand),
                                                  std::min<int>(top_k, static_cast<int>(n_cand)));
        }

        std::vector<T> gates(sel.size() + (has_global ? 1 : 0));
        for (std::size_t i = 0; i < sel.size(); ++i) gates[i] = cand[static_cast<std::size_t>(sel[i])];
        if (has_global) {
            T gscore = T(0);
            for (std::size_t j = 0; j < d_k; ++j) gscore += q(t, j) * global_rows(t, j);
            gates.back() = gscore * inv_sqrt;
            if (!std::isfinite(static_cast<double>(gates.back())))
                throw NonFinite("sparse_expert_attention: non-finite global expert score");
        }

        auto& tq = trace.queries[t];
        tq.candidate_scores.assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(n_cand));
        tq.selected.assign(sel.begin(), sel.end());
        if (has_global) tq.selected.push_back(-1);

        stable_softmax_inplace(std::span<T>(gates.data(), gates.size()));
        tq.gates.assign(gates.begin(), gates.end());

        for (std::size_t i = 0; i < sel.size(); ++i) {
            const std::size_t s = static_cast<std::size_t>(sel[i]);
            for (std::size_t j = 0; j < d_k; ++j) y[t * d_k + j] += gates[i] * v(s, j);
        }
        if (has_global) {
            for (std::size_t j = 0; j < d_k; ++j)
                y[t * d_k + j] += gates.back() * global_rows(t, j);
        }
        picks[t].sel = std::move(sel);
        if (has_global) picks[t].sel.push_back(-1);
        picks[t].gates.assign(gates.begin(), gates.end());
    }

    std::vector<Tensor<T>> parents = {q, k, v};
    const int psi_ix = has_psi ? 3 : -1;
    const int glob_ix = has_psi ? (has_global ? 4 : -1) : (has_global ? 3 : -1);
    if (has_psi) parents.push_back(psi);
    if (has_global) parents.push_back(global_rows);

    Tensor<T> out = detail::make_op<T>(
        Shape{n, d_k}, std::move(y), std::move(parents),
        [n, d_k, inv_sqrt, has_psi, psi_ix, glob_ix,
         picks = std::move(picks)](detail::Node<T>& node) {
            const auto& qv = node.parents[0]->values;
            const auto& kv = node.parents[1]->values;
            const auto& vv = node.parents[2]->values;
            const std::vector<T>* psiv =
                psi_ix >= 0 ? &node.parents[static_cast<std::size_t>(psi_ix)]->values : nullptr;
            const std::vector<T>* gbv =
                glob_ix >= 0 ? &node.parents[static_cast<std::size_t>(glob_ix)]->values : nullptr;
            auto* gq = detail::grad_sink(node.parents[0]);
            auto* gk = detail::grad_sink(node.parents[1]);
            auto* gv = detail::grad_sink(node.parents[2]);
            auto* gpsi = psi_ix >= 0
                             ? detail::grad_sink(node.parents[static_cast<std::size_t>(psi_ix)])
                             : nullptr;
            auto* gglob = glob_ix >= 0
                              ? detail::grad_sink(node.parents[static_cast<std::size_t>(glob_ix)])
                              : nullptr;

            std::vector<T> dgate, dscore;
            for (std::size_t t = 0; t < n; ++t) {
                const auto& pick = picks[t];
                const std::size_t m = pick.sel.size();
                const T* dy = node.grad.data() + t * d_k;
                dgate.assign(m, T(0));
                T dot_sum = T(0);
                for (std::size_t i = 0; i < m; ++i) {
                    const int s = pick.sel[i];
                    const T* val = s >= 0 ? vv.data() + static_cast<std::size_t>(s) * d_k
                                          : gbv->data() + t * d_k;
                    T da = T(0);
                    for (std::size_t j = 0; j < d_k; ++j) da += dy[j] * val[j];
                    dgate[i] = da;
                    dot_sum += da * pick.gates[i];
                }
                dscore.assign(m, T(0));
                for (std::size_t i = 0; i < m; ++i)
                    dscore[i] = pick.gates[i] * (dgate[i] - dot_sum);

                for (std::size_t i = 0; i < m; ++i) {
                    const int s_signed = pick.sel[i];
                    if (s_signed >= 0) {
                        const std::size_t s = static_cast<std::size_t>(s_signed);
                        // value path
                        if (gv)
                            for (std::size_t j = 0; j < d_k; ++j)
                                (*gv)[s * d_k + j] += pick.gates[i] * dy[j];
                        // score path: s_{t,s} = sim * psi
                        T sim = T(0);
                        for (std::size_t j = 0; j < d_k; ++j)
                            sim += qv[t * d_k + j] * kv[s * d_k + j];
                        sim *= inv_sqrt;
                        const T psival = has_psi ? (*psiv)[t * n + s] : T(1);
                        const T dsim = dscore[i] * psival;
                        if (gpsi) (*gpsi)[t * n + s] += dscore[i] * sim;
                        if (gq)
                            for (std::size_t j = 0; j < d_k; ++j)
                                (*gq)[t * d_k + j] += dsim * inv_sqrt * kv[s * d_k + j];
                        if (gk)
                            for (std::size_t j = 0; j < d_k; ++j)
                                (*gk)[s * d_k + j] += dsim * inv_sqrt * qv[t * d_k + j];
                    } else {
                        // global expert: value and score both read global row t
                        if (gglob)
                            for (std::size_t j = 0; j < d_k; ++j)
                                (*gglob)[t * d_k + j] += pick.gates[i] * dy[j];
                        const T ds = dscore[i] * inv_sqrt;
                        if (gq)
                            for (std::size_t j = 0; j < d_k; ++j)
                                (*gq)[t * d_k + j] += ds * (*gbv)[t * d_k + j];
                        if (gglob)
                            for (std::size_t j = 0; j < d_k; ++j)
                                (*gglob)[t * d_k + j] += ds * qv[t * d_k + j];
                    }
                }
            }
        },
        "sparse_expert_attention");
    return {std::move(out), std::move(trace)};
}

// Global expert rows for one head: softmax self-pooling of the layer input,
// projected into key space. k_global and v_global coincide by construction.
template <typename T>
Tensor<T> global_expert_rows(const Tensor<T>& x_layer, const Tensor<T>& phi_w,
                             const Tensor<T>& phi_b, bool causal) {
    const std::size_t n = x_layer.rows();
    if (causal) {
        Tensor<T> pooled = softpool_time_prefix(x_layer);       // [N x d_model]
        return linear(pooled, phi_w, phi_b);                    // [N x d_k]
    }
    Tensor<T> pooled = softpool_time(x_layer);                  // [1 x d_model]
    return broadcast_row(linear(pooled, phi_w, phi_b), n);      // [N x d_k]
}

// Convenience wrapper matching the per-head contract.
template <typename T>
HeadForwardResult<T> tmoe_head_forward(const Tensor<T>& x_layer, const Tensor<T>& wq,
                                       const Tensor<T>& wk, const Tensor<T>& wv,
                                       const Tensor<T>& lambda_raw, const Tensor<T>& phi_w,
                                       const Tensor<T>& phi_b, const TmoeConfig& cfg) {
    const std::size_t n = x_layer.rows();
    Tensor<T> q = matmul(x_layer, wq);
    Tensor<T> k = matmul(x_layer, wk);
    Tensor<T> v = matmul(x_layer, wv);
    Tensor<T> psi = temporal_decay_matrix(lambda_raw, n);
    Tensor<T> global_rows;
    if (cfg.share_global) global_rows = global_expert_rows(x_layer, phi_w, phi_b, cfg.causal);
    return sparse_expert_attention(q, k, v, psi, global_rows, cfg.top_k, cfg.causal,
                                   SelectionMode::top_k, nullptr);
}

// Random-subset ablation baseline: seeded uniform selection, softmax gating
// over the subset. Degenerates to vanilla attention when k >= N.
template <typename T>
Tensor<T> random_attention_forward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                   int top_k, Rng& rng, bool causal = false) {
    auto res = sparse_expert_attention(q, k, v, Tensor<T>{}, Tensor<T>{}, top_k, causal,
                                       SelectionMode::random, &rng);
    return res.y;
}

template <typename T>
struct MultiHeadResult {
    Tensor<T> y;  // [N x d_model]
    SelectionTrace trace;
};

// Runs every head with independent weights, concatenates, projects through W_O.
template <typename T>
MultiHeadResult<T> multi_head_attention(const Tensor<T>& x_layer, const AttentionParams<T>& params,
                                        const TmoeConfig& cfg, Rng* rng = nullptr) {
    cfg.validate();
    if (x_layer.cols() != static_cast<std::size_t>(cfg.d_model))
        throw InvalidShape("multi_head_attention: input width != d_model");
    MultiHeadResult<T> result;
    std::vector<Tensor<T>> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(cfg.num_heads));
    for (int h = 0; h < cfg.num_heads; ++h) {
        const auto hs = static_cast<std::size_t>(h);
        if (cfg.variant == AttentionVariant::full) {
            Tensor<T> q = matmul(x_layer, params.wq[hs]);
            Tensor<T> k = matmul(x_layer, params.wk[hs]);
            Tensor<T> v = matmul(x_layer, params.wv[hs]);
            head_outputs.push_back(vanilla_attention(q, k, v, cfg.causal).y);
            result.trace.heads.emplace_back();
        } else if (cfg.variant == AttentionVariant::random) {
            Tensor<T> q = matmul(x_layer, params.wq[hs]);
            Tensor<T> k = matmul(x_layer, params.wk[hs]);
            Tensor<T> v = matmul(x_layer, params.wv[hs]);
            auto res = sparse_expert_attention(q, k, v, Tensor<T>{}, Tensor<T>{}, cfg.top_k,
                                               cfg.causal, SelectionMode::random, rng);
            head_outputs.push_back(std::move(res.y));
            result.trace.heads.push_back(std::move(res.trace));
        } else {
            auto res = tmoe_head_forward(x_layer, params.wq[hs], params.wk[hs], params.wv[hs],
                                         params.decay[hs], params.phi_w[hs], params.phi_b[hs], cfg);
            head_outputs.push_back(std::move(res.y));
            result.trace.heads.push_back(std::move(res.trace));
        }
    }
    Tensor<T> merged = cfg.num_heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
    result.y = matmul(merged, params.wo);
    return result;
}

}  // namespace tmoe
