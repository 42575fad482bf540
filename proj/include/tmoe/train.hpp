// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Adam optimization over window batches with seeded shuffling, early
// stopping on validation MSE, and best-weight restoration. Single worker;
// batch order is derived from the seed, so runs are bitwise reproducible.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "tmoe/data.hpp"
#include "tmoe/model.hpp"
#include "tmoe/ops.hpp"
#include "tmoe/param_store.hpp"
#include "tmoe/rng.hpp"

namespace tmoe {

template <typename T = float>
struct OptimState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<T>> m, v;

    void init(const ParamStore<T>& params) {
        m.clear();
        v.clear();
        for (const auto& e : params.entries()) {
            m.emplace_back(e.tensor.size(), T(0));
            v.emplace_back(e.tensor.size(), T(0));
        }
        step = 0;
    }
};

// Standard bias-corrected Adam update from the accumulated gradients.
template <typename T>
void adam_step(ParamStore<T>& params, OptimState<T>& state) {
    if (state.m.size() != params.size()) state.init(params);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    std::size_t ix = 0;
    for (auto& e : params.entries()) {
        auto values = e.tensor.mutable_data();
        auto grads = e.tensor.grad();
        auto& m = state.m[ix];
        auto& v = state.v[ix];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = static_cast<double>(grads[i]);
            const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            values[i] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
        }
        ++ix;
    }
}

template <typename T>
Tensor<T> to_precision(const Tensor<float>& x) {
    if constexpr (std::is_same_v<T, float>) {
        return x;
    } else {
        std::vector<T> values(x.size());
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(x.data()[i]);
        return Tensor<T>::from_data(x.shape(), std::move(values));
    }
}

// Variant dispatch: the fixed-horizon forecaster trains on (lookback, target)
// MSE; the causal variant trains shift-by-one over the stacked window.
template <typename T>
Tensor<T> model_loss(const TimeExpert<T>& model, const Tensor<T>& lookback,
                     const Tensor<T>& target, const ForwardCtx& ctx) {
    if (model.config().variant == ModelVariant::timeexpert)
        return model.window_loss(lookback, target, ctx);
    const std::size_t rows = lookback.rows() + target.rows();
    const std::size_t channels = lookback.cols();
    std::vector<T> stacked;
    stacked.reserve(rows * channels);
    stacked.insert(stacked.end(), lookback.data().begin(), lookback.data().end());
    stacked.insert(stacked.end(), target.data().begin(), target.data().end());
    return model.g_loss(Tensor<T>::from_data(Shape{rows, channels}, std::move(stacked)), ctx);
}

// Forecast entry point used by evaluation: predict() or generate().
template <typename T>
Tensor<T> model_forecast(const TimeExpert<T>& model, const Tensor<T>& lookback,
                         const ForwardCtx& ctx = {}) {
    if (model.config().variant == ModelVariant::timeexpert) return model.predict(lookback, ctx);
    return model.g_generate(lookback, model.config().horizon, ctx);
}

struct TrainConfig {
    int epochs = 10;
    int batch = 32;
    int patience = 3;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    double train_loss = 0.0;
    double val_mse = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
};

template <typename T>
double validation_mse(const TimeExpert<T>& model, const WindowSet& windows,
                      std::uint64_t seed = 0) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        auto [lb, tg] = windows.materialize(i);
        Rng rng = Rng(seed).fork(i);
        ForwardCtx ctx;
        ctx.rng = &rng;
        Tensor<T> pred = model_forecast(model, to_precision<T>(lb), ctx);
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double d = static_cast<double>(pred.data()[j]) - tg.data()[j];
            total += d * d;
        }
        count += pred.size();
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

template <typename T>
TrainHistory train(TimeExpert<T>& model, const WindowSet& train_windows,
                   const WindowSet& val_windows, const TrainConfig& cfg,
                   OptimState<T>* state_io = nullptr) {
    if (cfg.epochs < 1 || cfg.batch < 1 || cfg.patience < 0)
        throw InvalidArgument("train: bad hyperparameters");
    OptimState<T> local_state;
    OptimState<T>& state = state_io ? *state_io : local_state;
    state.lr = cfg.lr;
    state.init(model.params());

    TrainHistory history;
    auto best_weights = model.params().snapshot_values();
    int epochs_since_improve = 0;

    std::vector<std::size_t> order(train_windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(epoch) * 2 + 1);
        Rng dropout_rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(epoch) * 2 + 2);
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        std::size_t batch_index = 0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), cursor + static_cast<std::size_t>(cfg.batch));
            model.params().zero_grad();
            const std::size_t batch_n = batch_end - cursor;
            try {
                for (std::size_t w = cursor; w < batch_end; ++w) {
                    auto [lb, tg] = train_windows.materialize(order[w]);
                    ForwardCtx ctx;
                    ctx.training = true;
                    ctx.rng = &dropout_rng;
                    Tensor<T> loss =
                        model_loss(model, to_precision<T>(lb), to_precision<T>(tg), ctx);
                    loss.backward();
                    epoch_loss += static_cast<double>(loss.value());
                    ++seen;
                }
            } catch (const NonFinite& e) {
                throw NonFiniteLoss(std::string("train: non-finite loss in batch ") +
                                        std::to_string(batch_index) + ": " + e.what(),
                                    batch_index);
            }
            // Mean gradient over the batch.
            const T inv = static_cast<T>(1.0 / static_cast<double>(batch_n));
            for (auto& e : model.params().entries()) {
                auto g = e.tensor.mutable_grad();
                for (auto& v : g) v *= inv;
            }
            adam_step(model.params(), state);
            cursor = batch_end;
            ++batch_index;
        }

        EpochRecord rec;
        rec.train_loss = seen ? epoch_loss / static_cast<double>(seen) : 0.0;
        rec.val_mse = validation_mse(model, val_windows, cfg.seed);
        history.epochs.push_back(rec);

        if (rec.val_mse < history.best_val) {
            history.best_val = rec.val_mse;
            history.best_epoch = epoch;
            best_weights = model.params().snapshot_values();
            epochs_since_improve = 0;
        } else {
            ++epochs_since_improve;
            if (epochs_since_improve >= cfg.patience && cfg.patience > 0) break;
        }
    }

    model.params().restore_values(best_weights);
    return history;
}

}  // namespace tmoe
