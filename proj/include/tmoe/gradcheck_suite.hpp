// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// The 64-bit gradient verification suite: one TMOE head (lambda and phi
// included), one encoder block, and a full tiny model, each checked against
// central finite differences at probe points whose top-k score gaps exceed
// 10h (so the discrete selection cannot flip under perturbation).

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "tmoe/attention.hpp"
#include "tmoe/grad_check.hpp"
#include "tmoe/model.hpp"
#include "tmoe/ops.hpp"

namespace tmoe {

struct GradCheckSuiteResult {
    double head_err = 1.0;
    double block_err = 1.0;
    double model_err = 1.0;
    double g_model_err = 1.0;

    double max_err() const {
        return std::max(std::max(head_err, block_err), std::max(model_err, g_model_err));
    }
};

namespace detail {

inline double min_topk_gap(const std::vector<SelectionTrace>& traces, int top_k) {
    double min_gap = 1e18;
    for (const auto& trace : traces)
        for (const auto& head : trace.heads)
            for (const auto& q : head.queries) {
                auto sorted = q.candidate_scores;
                std::sort(sorted.begin(), sorted.end(), std::greater<>());
                const auto k = static_cast<std::size_t>(top_k);
                if (sorted.size() > k) min_gap = std::min(min_gap, sorted[k - 1] - sorted[k]);
            }
    return min_gap;
}

inline double min_topk_gap(const HeadTrace& trace, int top_k) {
    SelectionTrace wrap;
    wrap.heads.push_back(trace);
    std::vector<SelectionTrace> v{wrap};
    return min_topk_gap(v, top_k);
}

inline Tensor<double> uniform_matrix(Rng& rng, std::size_t r, std::size_t c,
                                     double scale = 1.0) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.uniform(-scale, scale);
    return Tensor<double>::from_data({r, c}, std::move(v));
}

}  // namespace detail

// One head with the shared global expert; loss = mean of squared outputs.
inline double gradcheck_tmoe_head(double h = 1e-4) {
    const std::size_t n = 5, d_model = 4, d_k = 2;
    TmoeConfig cfg;
    cfg.d_model = static_cast<int>(d_model);
    cfg.num_heads = 1;
    cfg.top_k = 2;
    cfg.share_global = true;

    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        Rng rng(seed);
        auto x = detail::uniform_matrix(rng, n, d_model);
        ParamStore<double> params;
        params.add("wq", detail::uniform_matrix(rng, d_model, d_k));
        params.add("wk", detail::uniform_matrix(rng, d_model, d_k));
        params.add("wv", detail::uniform_matrix(rng, d_model, d_k));
        params.add("lam", Tensor<double>::from_data({1}, {0.4}));
        params.add("phi_w", detail::uniform_matrix(rng, d_model, d_k));
        params.add("phi_b", detail::uniform_matrix(rng, 1, d_k, 0.1));
        double gap;
        {
            NoGradGuard ng;
            auto res = tmoe_head_forward(x, params.get("wq"), params.get("wk"),
                                         params.get("wv"), params.get("lam"),
                                         params.get("phi_w"),
                                         reshape(params.get("phi_b"), Shape{d_k}), cfg);
            gap = detail::min_topk_gap(res.trace, cfg.top_k);
        }
        if (gap <= 10 * h) continue;
        return grad_check<double>(
            [&](ParamStore<double>& p) {
                auto res = tmoe_head_forward(x, p.get("wq"), p.get("wk"), p.get("wv"),
                                             p.get("lam"), p.get("phi_w"),
                                             reshape(p.get("phi_b"), Shape{d_k}), cfg);
                return mean_all(mul(res.y, res.y));
            },
            params, h);
    }
    return 1.0;  // no stable probe found
}

// One full encoder block (attention + FFN + both layer norms). The default
// step is larger here: a handful of block parameters have near-zero true
// gradients, where the difference quotient is cancellation-noise-limited and
// a small h amplifies that noise against the 1e-8 denominator floor.
inline double gradcheck_encoder_block(double h = 1e-3) {
    const std::size_t n = 4, d = 8, d_ff = 16, d_k = 4;
    TmoeConfig cfg;
    cfg.d_model = static_cast<int>(d);
    cfg.num_heads = 2;
    cfg.top_k = 2;
    cfg.share_global = true;

    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        Rng rng(seed + 500);
        auto x = detail::uniform_matrix(rng, n, d);
        ParamStore<double> params;
        for (int head = 0; head < 2; ++head) {
            const std::string hp = "h" + std::to_string(head) + ".";
            params.add(hp + "wq", detail::uniform_matrix(rng, d, d_k));
            params.add(hp + "wk", detail::uniform_matrix(rng, d, d_k));
            params.add(hp + "wv", detail::uniform_matrix(rng, d, d_k));
            params.add(hp + "lam", Tensor<double>::from_data({1}, {0.3}));
            params.add(hp + "phi_w", detail::uniform_matrix(rng, d, d_k));
            params.add(hp + "phi_b", detail::uniform_matrix(rng, 1, d_k, 0.1));
        }
        params.add("wo", detail::uniform_matrix(rng, d, d));
        params.add("ln1.g", Tensor<double>::full({d}, 1.0));
        params.add("ln1.b", Tensor<double>::zeros({d}));
        params.add("ffn.w1", detail::uniform_matrix(rng, d, d_ff, 0.5));
        params.add("ffn.b1", detail::uniform_matrix(rng, 1, d_ff, 0.1));
        params.add("ffn.w2", detail::uniform_matrix(rng, d_ff, d, 0.5));
        params.add("ffn.b2", detail::uniform_matrix(rng, 1, d, 0.1));
        params.add("ln2.g", Tensor<double>::full({d}, 1.0));
        params.add("ln2.b", Tensor<double>::zeros({d}));

        auto make_layer = [&](ParamStore<double>& p) {
            EncoderLayerParams<double> layer;
            for (int head = 0; head < 2; ++head) {
                const std::string hp = "h" + std::to_string(head) + ".";
                layer.attn.wq.push_back(p.get(hp + "wq"));
                layer.attn.wk.push_back(p.get(hp + "wk"));
                layer.attn.wv.push_back(p.get(hp + "wv"));
                layer.attn.decay.push_back(p.get(hp + "lam"));
                layer.attn.phi_w.push_back(p.get(hp + "phi_w"));
                layer.attn.phi_b.push_back(reshape(p.get(hp + "phi_b"), Shape{d_k}));
            }
            layer.attn.wo = p.get("wo");
            layer.ln1_g = p.get("ln1.g");
            layer.ln1_b = p.get("ln1.b");
            layer.ffn_w1 = p.get("ffn.w1");
            layer.ffn_b1 = reshape(p.get("ffn.b1"), Shape{d_ff});
            layer.ffn_w2 = p.get("ffn.w2");
            layer.ffn_b2 = reshape(p.get("ffn.b2"), Shape{d});
            layer.ln2_g = p.get("ln2.g");
            layer.ln2_b = p.get("ln2.b");
            return layer;
        };

        double gap;
        {
            NoGradGuard ng;
            ForwardCtx ctx;
            auto layer = make_layer(params);
            auto [y, trace] = encoder_block(x, layer, cfg, 0.0, ctx);
            std::vector<SelectionTrace> traces{trace};
            gap = detail::min_topk_gap(traces, cfg.top_k);
        }
        if (gap <= 10 * h) continue;
        return grad_check<double>(
            [&](ParamStore<double>& p) {
                ForwardCtx ctx;
                auto layer = make_layer(p);
                auto [y, trace] = encoder_block(x, layer, cfg, 0.0, ctx);
                return mean_all(mul(y, y));
            },
            params, h);
    }
    return 1.0;
}

// Full tiny TimeExpert: L=16, P=4, S=4, d_model=8, 2 heads, k=2, horizon=4.
inline double gradcheck_tiny_timeexpert(double h = 1e-4) {
    ModelConfig cfg;
    cfg.patch = {16, 4, 4};
    cfg.tmoe.d_model = 8;
    cfg.tmoe.num_heads = 2;
    cfg.tmoe.top_k = 2;
    cfg.tmoe.share_global = true;
    cfg.num_layers = 2;
    cfg.horizon = 4;
    cfg.dropout = 0.0;

    for (std::uint64_t seed = 1; seed <= 64; ++seed) {
        TimeExpert<double> model(cfg, seed);
        Rng rng(seed + 100);
        auto lb = detail::uniform_matrix(rng, 16, 1);
        auto tg = detail::uniform_matrix(rng, 4, 1);
        double gap;
        {
            NoGradGuard ng;
            std::vector<SelectionTrace> traces;
            ForwardCtx ctx;
            ctx.traces = &traces;
            (void)model.window_loss(lb, tg, ctx);
            gap = detail::min_topk_gap(traces, cfg.tmoe.top_k);
        }
        if (gap <= 10 * h) continue;
        return grad_check<double>(
            [&](ParamStore<double>&) {
                ForwardCtx ctx;
                return model.window_loss(lb, tg, ctx);
            },
            model.params(), h);
    }
    return 1.0;
}

// Tiny causal next-segment model.
inline double gradcheck_tiny_timeexpert_g(double h = 1e-4) {
    ModelConfig cfg;
    cfg.variant = ModelVariant::timeexpert_g;
    cfg.patch = {4, 4, 4};
    cfg.tmoe.d_model = 4;
    cfg.tmoe.num_heads = 1;
    cfg.tmoe.top_k = 2;
    cfg.tmoe.share_global = true;
    cfg.tmoe.causal = true;
    cfg.num_layers = 1;
    cfg.horizon = 4;
    cfg.dropout = 0.0;
    cfg.max_tokens = 5;

    for (std::uint64_t seed = 1; seed <= 64; ++seed) {
        TimeExpert<double> model(cfg, seed);
        Rng rng(seed + 700);
        auto context = detail::uniform_matrix(rng, 12, 1);
        double gap;
        {
            NoGradGuard ng;
            std::vector<SelectionTrace> traces;
            ForwardCtx ctx;
            ctx.traces = &traces;
            (void)model.g_loss(context, ctx);
            gap = detail::min_topk_gap(traces, cfg.tmoe.top_k);
        }
        if (gap <= 10 * h) continue;
        return grad_check<double>(
            [&](ParamStore<double>&) {
                ForwardCtx ctx;
                return model.g_loss(context, ctx);
            },
            model.params(), h);
    }
    return 1.0;
}

// h = 0 selects each check's own default step.
inline GradCheckSuiteResult run_gradcheck_suite(double h = 0.0) {
    GradCheckSuiteResult r;
    r.head_err = h > 0.0 ? gradcheck_tmoe_head(h) : gradcheck_tmoe_head();
    r.block_err = h > 0.0 ? gradcheck_encoder_block(h) : gradcheck_encoder_block();
    r.model_err = h > 0.0 ? gradcheck_tiny_timeexpert(h) : gradcheck_tiny_timeexpert();
    r.g_model_err = h > 0.0 ? gradcheck_tiny_timeexpert_g(h) : gradcheck_tiny_timeexpert_g();
    return r;
}

}  // namespace tmoe
