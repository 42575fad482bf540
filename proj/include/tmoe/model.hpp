// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// TimeExpert: instance norm -> patch embedding -> TMOE encoder blocks ->
// flatten head, applied to each channel independently with shared weights.
// TimeExpert-G: causal variant over non-overlapping segments with a
// next-segment prediction head and autoregressive generation.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tmoe/attention.hpp"
#include "tmoe/common.hpp"
#include "tmoe/ops.hpp"
#include "tmoe/param_store.hpp"
#include "tmoe/rng.hpp"
#include "tmoe/tensor.hpp"

namespace tmoe {

struct PatchConfig {
    int lookback = 96;
    int patch_len = 16;
    int stride = 8;

    int token_count() const { return (lookback - patch_len) / stride + 1; }

    void validate() const {
        if (lookback < 1 || patch_len < 1) throw InvalidArgument("PatchConfig: bad sizes");
        if (patch_len > lookback)
            throw InvalidArgument("PatchConfig: patch_len must not exceed lookback");
        if (stride < 1) throw InvalidArgument("PatchConfig: stride must be >= 1");
    }
};

enum class ModelVariant { timeexpert, timeexpert_g };

inline std::string to_string(ModelVariant v) {
    return v == ModelVariant::timeexpert ? "timeexpert" : "timeexpert_g";
}

inline ModelVariant model_variant_from_string(const std::string& s) {
    if (s == "timeexpert") return ModelVariant::timeexpert;
    if (s == "timeexpert_g") return ModelVariant::timeexpert_g;
    throw InvalidArgument("unknown model variant: " + s);
}

struct ModelConfig {
    PatchConfig patch;
    TmoeConfig tmoe;
    int num_layers = 2;
    int d_ff = 0;  // 0 -> 2 * d_model
    int horizon = 96;
    double dropout = 0.1;
    ModelVariant variant = ModelVariant::timeexpert;
    int max_tokens = 0;  // 0 -> token_count (timeexpert) or 15 (timeexpert_g)

    int d_ff_resolved() const { return d_ff > 0 ? d_ff : 2 * tmoe.d_model; }

    int segment_len() const { return patch.patch_len; }

    int tokens_max() const {
        if (max_tokens > 0) return max_tokens;
        return variant == ModelVariant::timeexpert ? patch.token_count() : 15;
    }

    void validate() const {
        patch.validate();
        tmoe.validate();
        if (num_layers < 1) throw InvalidArgument("ModelConfig: num_layers must be >= 1");
        if (horizon < 1) throw InvalidArgument("ModelConfig: horizon must be >= 1");
        if (dropout < 0.0 || dropout >= 1.0)
            throw InvalidArgument("ModelConfig: dropout must be in [0,1)");
        if (variant == ModelVariant::timeexpert_g && !tmoe.causal)
            throw InvalidArgument("ModelConfig: timeexpert_g requires causal attention");
    }
};

template <typename T = float>
struct WindowStats {
    T mu = T(0);
    T sigma = T(0);
    static constexpr T eps = T(1e-5);
};

// Per-channel, per-window zero-mean/unit-std transform; inverted at the
// output so forecasts live on the original scale.
template <typename T>
std::pair<std::vector<T>, WindowStats<T>> instance_normalize(std::span<const T> window) {
    if (window.empty()) throw InvalidShape("instance_normalize: empty window");
    WindowStats<T> stats;
    for (const T v : window) stats.mu += v;
    stats.mu /= static_cast<T>(window.size());
    T var = T(0);
    for (const T v : window) {
        const T c = v - stats.mu;
        var += c * c;
    }
    var /= static_cast<T>(window.size());
    stats.sigma = std::sqrt(var);
    std::vector<T> out(window.size());
    const T denom = stats.sigma + WindowStats<T>::eps;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (window[i] - stats.mu) / denom;
    return {std::move(out), stats};
}

template <typename T>
Tensor<T> denormalize(const Tensor<T>& y_norm, const WindowStats<T>& stats) {
    return affine(y_norm, stats.sigma + WindowStats<T>::eps, stats.mu);
}

// Strided patch tokens; any tail shorter than patch_len is dropped.
template <typename T>
Tensor<T> patchify(std::span<const T> window, int patch_len, int stride) {
    if (patch_len < 1 || stride < 1) throw InvalidArgument("patchify: bad geometry");
    if (static_cast<std::size_t>(patch_len) > window.size())
        throw InvalidArgument("patchify: patch_len exceeds window");
    const std::size_t n =
        (window.size() - static_cast<std::size_t>(patch_len)) / static_cast<std::size_t>(stride) +
        1;
    std::vector<T> out(n * static_cast<std::size_t>(patch_len));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < static_cast<std::size_t>(patch_len); ++j)
            out[i * static_cast<std::size_t>(patch_len) + j] =
                window[i * static_cast<std::size_t>(stride) + j];
    return Tensor<T>::from_data(Shape{n, static_cast<std::size_t>(patch_len)}, std::move(out));
}

template <typename T>
Tensor<T> embed_patches(const Tensor<T>& tokens, const Tensor<T>& w_emb, const Tensor<T>& pos) {
    if (tokens.rows() > pos.rows())
        throw InvalidArgument("embed_patches: more tokens than positional slots");
    return add(matmul(tokens, w_emb), slice_rows(pos, 0, tokens.rows()));
}

struct ForwardCtx {
    bool training = false;
    Rng* rng = nullptr;
    std::vector<SelectionTrace>* traces = nullptr;  // appended per (channel, layer)
};

template <typename T>
struct EncoderLayerParams {
    AttentionParams<T> attn;
    Tensor<T> ln1_g, ln1_b, ln2_g, ln2_b;
    Tensor<T> ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

// Post-norm residual block:
//   Z   = LayerNorm(X + Dropout(MultiHeadTMOE(X)))
//   out = LayerNorm(Z + Dropout(FFN(Z)))
template <typename T>
std::pair<Tensor<T>, SelectionTrace> encoder_block(const Tensor<T>& x,
                                                   const EncoderLayerParams<T>& layer,
                                                   const TmoeConfig& tmoe_cfg, double drop_rate,
                                                   const ForwardCtx& ctx) {
    const bool need_rng =
        (ctx.training && drop_rate > 0.0) || tmoe_cfg.variant == AttentionVariant::random;
    if (need_rng && ctx.rng == nullptr)
        throw InvalidArgument("encoder_block: this configuration needs an rng");

    auto mha = multi_head_attention(x, layer.attn, tmoe_cfg, ctx.rng);
    Tensor<T> a = ctx.training && drop_rate > 0.0
                      ? dropout(mha.y, drop_rate, *ctx.rng, true)
                      : mha.y;
    Tensor<T> z = layer_norm(add(x, a), layer.ln1_g, layer.ln1_b);

    Tensor<T> f = linear(z, layer.ffn_w1, layer.ffn_b1);
    f = gelu(f);
    f = linear(f, layer.ffn_w2, layer.ffn_b2);
    if (ctx.training && drop_rate > 0.0) f = dropout(f, drop_rate, *ctx.rng, true);
    Tensor<T> out = layer_norm(add(z, f), layer.ln2_g, layer.ln2_b);
    return {std::move(out), std::move(mha.trace)};
}

template <typename T = float>
class TimeExpert {
public:
    TimeExpert(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        init_params_(seed);
        bind_views_();
    }

    TimeExpert(ModelConfig cfg, ParamStore<T> store) : cfg_(std::move(cfg)), store_(std::move(store)) {
        cfg_.validate();
        validate_store_();
        bind_views_();
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return store_; }
    const ParamStore<T>& params() const { return store_; }

    // ---- TimeExpert (fixed-horizon forecaster) ----

    // One channel, graph attached: lookback values -> denormalized [1 x H].
    Tensor<T> channel_forecast(std::span<const T> lookback, const ForwardCtx& ctx) const {
        if (cfg_.variant != ModelVariant::timeexpert)
            throw InvalidArgument("channel_forecast: model is not a timeexpert variant");
        if (lookback.size() != static_cast<std::size_t>(cfg_.patch.lookback))
            throw InvalidShape("channel_forecast: lookback length mismatch");
        auto [norm, stats] = instance_normalize(lookback);
        Tensor<T> tokens =
            patchify(std::span<const T>(norm.data(), norm.size()), cfg_.patch.patch_len,
                     cfg_.patch.stride);
        Tensor<T> x = run_encoder_(tokens, ctx);
        Tensor<T> flat = reshape(x, Shape{1, x.rows() * x.cols()});
        Tensor<T> y = linear(flat, head_w_, head_b_);
        return denormalize(y, stats);
    }

    // Full multivariate window loss: mean over channels of per-channel MSE.
    Tensor<T> window_loss(const Tensor<T>& lookback, const Tensor<T>& target,
                          const ForwardCtx& ctx) const {
        const std::size_t channels = lookback.cols();
        if (target.cols() != channels) throw InvalidShape("window_loss: channel mismatch");
        Tensor<T> total;
        for (std::size_t c = 0; c < channels; ++c) {
            const std::vector<T> chan = channel_values_(lookback, c);
            Tensor<T> pred = channel_forecast({chan.data(), chan.size()}, ctx);
            Tensor<T> truth =
                Tensor<T>::from_data(Shape{1, target.rows()}, channel_values_(target, c));
            Tensor<T> l = mse(pred, truth);
            total = total.defined() ? add(total, l) : l;
        }
        return scale(total, static_cast<T>(1.0 / static_cast<double>(channels)));
    }

    // Forecast without a graph: [L x C] -> [H x C].
    Tensor<T> predict(const Tensor<T>& lookback, const ForwardCtx& ctx = {}) const {
        NoGradGuard no_grad;
        const std::size_t channels = lookback.cols();
        const std::size_t horizon = static_cast<std::size_t>(cfg_.horizon);
        Tensor<T> out = Tensor<T>::zeros(Shape{horizon, channels});
        for (std::size_t c = 0; c < channels; ++c) {
            const std::vector<T> chan = channel_values_(lookback, c);
            Tensor<T> pred = channel_forecast({chan.data(), chan.size()}, ctx);
            for (std::size_t i = 0; i < horizon; ++i) out.at(i, c) = pred(0, i);
        }
        return out;
    }

    // ---- TimeExpert-G (causal next-segment predictor) ----

    // Per-position predictions for one channel context: [n x seg_len], row i
    // is the model's forecast of segment i+1 given segments 0..i.
    Tensor<T> g_positions(std::span<const T> context, const ForwardCtx& ctx) const {
        require_g_();
        const int seg = cfg_.segment_len();
        if (context.empty() || context.size() % static_cast<std::size_t>(seg) != 0)
            throw InvalidArgument("timeexpert_g: context length must be a positive multiple of " +
                                  std::to_string(seg));
        const std::size_t n = context.size() / static_cast<std::size_t>(seg);
        if (n > static_cast<std::size_t>(cfg_.tokens_max()))
            throw InvalidArgument("timeexpert_g: context exceeds max token count");
        Tensor<T> tokens = patchify(context, seg, seg);
        Tensor<T> x = run_encoder_(tokens, ctx);
        return linear(x, head_w_, head_b_);  // [n x seg]
    }

    // Shift-by-one training objective over all supervised positions.
    Tensor<T> g_loss(const Tensor<T>& context, const ForwardCtx& ctx) const {
        require_g_();
        const std::size_t channels = context.cols();
        const int seg = cfg_.segment_len();
        const std::size_t n = context.rows() / static_cast<std::size_t>(seg);
        if (n < 2) throw InvalidArgument("timeexpert_g: need at least two segments to train");
        Tensor<T> total;
        for (std::size_t c = 0; c < channels; ++c) {
            std::vector<T> chan = channel_values_(context, c);
            Tensor<T> preds = g_positions(std::span<const T>(chan.data(), chan.size()), ctx);
            std::vector<T> next(chan.begin() + seg, chan.end());
            Tensor<T> truth = Tensor<T>::from_data(
                Shape{n - 1, static_cast<std::size_t>(seg)}, std::move(next));
            Tensor<T> l = mse(slice_rows(preds, 0, n - 1), truth);
            total = total.defined() ? add(total, l) : l;
        }
        return scale(total, static_cast<T>(1.0 / static_cast<double>(channels)));
    }

    // Autoregressive generation: appends predicted segments until the horizon
    // is covered, sliding the context over the newest tokens_max() segments.
    Tensor<T> g_generate(const Tensor<T>& context, int horizon, const ForwardCtx& ctx = {}) const {
        require_g_();
        NoGradGuard no_grad;
        if (horizon < 1) throw InvalidArgument("timeexpert_g: horizon must be >= 1");
        const int seg = cfg_.segment_len();
        const std::size_t channels = context.cols();
        Tensor<T> out = Tensor<T>::zeros(Shape{static_cast<std::size_t>(horizon), channels});
        const int steps = (horizon + seg - 1) / seg;
        for (std::size_t c = 0; c < channels; ++c) {
            std::vector<T> seq = channel_values_(context, c);
            std::vector<T> generated;
            for (int step = 0; step < steps; ++step) {
                const std::size_t n_avail = seq.size() / static_cast<std::size_t>(seg);
                const std::size_t n_use =
                    std::min<std::size_t>(n_avail, static_cast<std::size_t>(cfg_.tokens_max()));
                std::span<const T> tail(seq.data() + (n_avail - n_use) * seg,
                                        n_use * static_cast<std::size_t>(seg));
                Tensor<T> preds = g_positions(tail, ctx);
                const std::size_t last = preds.rows() - 1;
                for (int j = 0; j < seg; ++j) {
                    const T v = preds(last, static_cast<std::size_t>(j));
                    seq.push_back(v);
                    generated.push_back(v);
                }
            }
            for (int i = 0; i < horizon; ++i) out.at(static_cast<std::size_t>(i), c) =
                generated[static_cast<std::size_t>(i)];
        }
        return out;
    }

    std::uint64_t init_seed() const { return init_seed_; }

private:
    void require_g_() const {
        if (cfg_.variant != ModelVariant::timeexpert_g)
            throw InvalidArgument("operation requires the timeexpert_g variant");
    }

    Tensor<T> run_encoder_(const Tensor<T>& tokens, const ForwardCtx& ctx) const {
        Tensor<T> x = embed_patches(tokens, embed_w_, embed_pos_);
        for (const auto& layer : layers_) {
            auto [next, trace] = encoder_block(x, layer, cfg_.tmoe, cfg_.dropout, ctx);
            x = std::move(next);
            if (ctx.traces) ctx.traces->push_back(std::move(trace));
        }
        return x;
    }

    static std::vector<T> channel_values_(const Tensor<T>& m, std::size_t c) {
        std::vector<T> out(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
        return out;
    }

    // (name, shape) schema in insertion order; shared by init and validation.
    std::vector<std::pair<std::string, Shape>> param_schema_() const {
        const std::size_t d_model = static_cast<std::size_t>(cfg_.tmoe.d_model);
        const std::size_t d_k = static_cast<std::size_t>(cfg_.tmoe.d_k());
        const std::size_t d_ff = static_cast<std::size_t>(cfg_.d_ff_resolved());
        const std::size_t in_width = cfg_.variant == ModelVariant::timeexpert
                                         ? static_cast<std::size_t>(cfg_.patch.patch_len)
                                         : static_cast<std::size_t>(cfg_.segment_len());
        std::vector<std::pair<std::string, Shape>> schema;
        schema.emplace_back("embed.w", Shape{in_width, d_model});
        schema.emplace_back("embed.pos", Shape{static_cast<std::size_t>(cfg_.tokens_max()), d_model});
        for (int l = 0; l < cfg_.num_layers; ++l) {
            const std::string p = "enc." + std::to_string(l) + ".";
            for (int h = 0; h < cfg_.tmoe.num_heads; ++h) {
                const std::string hp = p + "attn.h" + std::to_string(h) + ".";
                schema.emplace_back(hp + "wq", Shape{d_model, d_k});
                schema.emplace_back(hp + "wk", Shape{d_model, d_k});
                schema.emplace_back(hp + "wv", Shape{d_model, d_k});
                schema.emplace_back(hp + "lambda", Shape{1});
                schema.emplace_back(hp + "phi_w", Shape{d_model, d_k});
                schema.emplace_back(hp + "phi_b", Shape{d_k});
            }
            schema.emplace_back(p + "attn.wo", Shape{d_model, d_model});
            schema.emplace_back(p + "ln1.g", Shape{d_model});
            schema.emplace_back(p + "ln1.b", Shape{d_model});
            schema.emplace_back(p + "ffn.w1", Shape{d_model, d_ff});
            schema.emplace_back(p + "ffn.b1", Shape{d_ff});
            schema.emplace_back(p + "ffn.w2", Shape{d_ff, d_model});
            schema.emplace_back(p + "ffn.b2", Shape{d_model});
            schema.emplace_back(p + "ln2.g", Shape{d_model});
            schema.emplace_back(p + "ln2.b", Shape{d_model});
        }
        if (cfg_.variant == ModelVariant::timeexpert) {
            const std::size_t n_tok = static_cast<std::size_t>(cfg_.patch.token_count());
            schema.emplace_back("head.w", Shape{n_tok * d_model, static_cast<std::size_t>(cfg_.horizon)});
            schema.emplace_back("head.b", Shape{static_cast<std::size_t>(cfg_.horizon)});
        } else {
            schema.emplace_back("head.w",
                                Shape{d_model, static_cast<std::size_t>(cfg_.segment_len())});
            schema.emplace_back("head.b", Shape{static_cast<std::size_t>(cfg_.segment_len())});
        }
        return schema;
    }

    void init_params_(std::uint64_t seed) {
        init_seed_ = seed;
        Rng rng(seed);
        const T lambda0 = static_cast<T>(std::log(std::expm1(1.0)));  // softplus(l0) = 1
        for (const auto& [name, shape] : param_schema_()) {
            std::vector<T> values(numel(shape), T(0));
            const bool is_bias = name.ends_with(".b") || name.ends_with("_b") ||
                                 name.ends_with(".b1") || name.ends_with(".b2") ||
                                 name.ends_with("phi_b");
            if (name.ends_with("ln1.g") || name.ends_with("ln2.g")) {
                std::fill(values.begin(), values.end(), T(1));
            } else if (name.ends_with(".lambda")) {
                values[0] = lambda0;
            } else if (name == "embed.pos") {
                for (auto& v : values) v = static_cast<T>(rng.uniform(-0.02, 0.02));
            } else if (!is_bias) {
                const double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
                for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
            }
            store_.add(name, Tensor<T>::from_data(shape, std::move(values)));
        }
    }

    void validate_store_() const {
        const auto schema = param_schema_();
        if (store_.size() != schema.size())
            throw InvalidArgument("TimeExpert: parameter store entry count mismatch");
        for (std::size_t i = 0; i < schema.size(); ++i) {
            const auto& e = store_.entries()[i];
            if (e.name != schema[i].first || e.tensor.shape() != schema[i].second)
                throw InvalidArgument("TimeExpert: parameter mismatch at " + schema[i].first);
        }
    }

    void bind_views_() {
        embed_w_ = store_.get("embed.w");
        embed_pos_ = store_.get("embed.pos");
        layers_.clear();
        for (int l = 0; l < cfg_.num_layers; ++l) {
            const std::string p = "enc." + std::to_string(l) + ".";
            EncoderLayerParams<T> lp;
            for (int h = 0; h < cfg_.tmoe.num_heads; ++h) {
                const std::string hp = p + "attn.h" + std::to_string(h) + ".";
                lp.attn.wq.push_back(store_.get(hp + "wq"));
                lp.attn.wk.push_back(store_.get(hp + "wk"));
                lp.attn.wv.push_back(store_.get(hp + "wv"));
                lp.attn.decay.push_back(store_.get(hp + "lambda"));
                lp.attn.phi_w.push_back(store_.get(hp + "phi_w"));
                lp.attn.phi_b.push_back(store_.get(hp + "phi_b"));
            }
            lp.attn.wo = store_.get(p + "attn.wo");
            lp.ln1_g = store_.get(p + "ln1.g");
            lp.ln1_b = store_.get(p + "ln1.b");
            lp.ffn_w1 = store_.get(p + "ffn.w1");
            lp.ffn_b1 = store_.get(p + "ffn.b1");
            lp.ffn_w2 = store_.get(p + "ffn.w2");
            lp.ffn_b2 = store_.get(p + "ffn.b2");
            lp.ln2_g = store_.get(p + "ln2.g");
            lp.ln2_b = store_.get(p + "ln2.b");
            layers_.push_back(std::move(lp));
        }
        head_w_ = store_.get("head.w");
        head_b_ = store_.get("head.b");
    }

    ModelConfig cfg_;
    ParamStore<T> store_;
    std::uint64_t init_seed_ = 0;
    Tensor<T> embed_w_, embed_pos_, head_w_, head_b_;
    std::vector<EncoderLayerParams<T>> layers_;
};

}  // namespace tmoe
