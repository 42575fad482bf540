// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>

#include "tmoe/common.hpp"
#include "tmoe/param_store.hpp"
#include "tmoe/tensor.hpp"

namespace tmoe {

// Compares reverse-mode gradients against central finite differences,
// element by element over every parameter in the store. Meant to run with
// T = double; float rounding drowns the difference quotient.
//
// Returns max |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
template <typename T>
double grad_check(const std::function<Tensor<T>(ParamStore<T>&)>& f, ParamStore<T>& params,
                  double h = 1e-3) {
    params.zero_grad();
    Tensor<T> loss = f(params);
    if (loss.size() != 1) throw InvalidShape("grad_check: f must return a scalar");
    if (!std::isfinite(static_cast<double>(loss.value())))
        throw NonFiniteLoss("grad_check: non-finite loss at probe point", 0);
    loss.backward();

    std::vector<std::vector<T>> analytic;
    analytic.reserve(params.size());
    for (auto& e : params.entries())
        analytic.emplace_back(e.tensor.grad().begin(), e.tensor.grad().end());

    double max_rel = 0.0;
    {
        NoGradGuard no_grad;
        std::size_t p_ix = 0;
        for (auto& e : params.entries()) {
            auto values = e.tensor.mutable_data();
            for (std::size_t i = 0; i < values.size(); ++i) {
                const T saved = values[i];
                values[i] = saved + static_cast<T>(h);
                const double f_plus = static_cast<double>(f(params).value());
                values[i] = saved - static_cast<T>(h);
                const double f_minus = static_cast<double>(f(params).value());
                values[i] = saved;
                if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                    throw NonFiniteLoss("grad_check: non-finite loss under perturbation", 0);
                const double numeric = (f_plus - f_minus) / (2.0 * h);
                const double a = static_cast<double>(analytic[p_ix][i]);
                const double rel =
                    std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
                max_rel = std::max(max_rel, rel);
            }
            ++p_ix;
        }
    }
    return max_rel;
}

}  // namespace tmoe
