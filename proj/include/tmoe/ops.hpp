// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Primitive kernels with hand-written backward rules. Everything the model
// needs and nothing more; no general broadcasting.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tmoe/common.hpp"
#include "tmoe/rng.hpp"
#include "tmoe/tensor.hpp"

namespace tmoe {

// ---------------------------------------------------------------------------
// Plain (non-autograd) numeric helpers
// ---------------------------------------------------------------------------

template <typename T>
inline T softplus(T x) {
    // log(1 + e^x), overflow-safe.
    const T m = std::max(x, T(0));
    return m + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
inline T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// Max-subtraction softmax over a contiguous span, in place.
template <typename T>
inline void stable_softmax_inplace(std::span<T> x) {
    if (x.empty()) throw InvalidShape("stable_softmax: empty axis");
    T maxv = x[0];
    for (const T v : x) maxv = std::max(maxv, v);
    T sum = T(0);
    for (T& v : x) {
        v = std::exp(v - maxv);
        sum += v;
    }
    for (T& v : x) v /= sum;
}

// Indices of the min(k, n) largest scores; ties -> smaller index; result
// sorted ascending. Deterministic on every platform.
template <typename T>
inline std::vector<int> top_k_indices(std::span<const T> scores, int k) {
    if (k < 1) throw InvalidArgument("top_k_indices: k must be >= 1");
    for (const T s : scores) {
        if (!std::isfinite(static_cast<double>(s))) {
            throw InvalidArgument("top_k_indices: non-finite score");
        }
    }
    const int n = static_cast<int>(scores.size());
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[static_cast<std::size_t>(a)] >
                                                scores[static_cast<std::size_t>(b)]; });
    idx.resize(static_cast<std::size_t>(std::min(k, n)));
    std::sort(idx.begin(), idx.end());
    return idx;
}

// ---------------------------------------------------------------------------
// Elementwise / linear algebra ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw InvalidShape("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                           shape_str(b.shape()));
    }
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return detail::make_op<T>(
        a.shape(), std::move(out), {a, b},
        [](detail::Node<T>& n) {
            for (int p = 0; p < 2; ++p) {
                if (auto* g = detail::grad_sink(n.parents[static_cast<std::size_t>(p)])) {
                    for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i];
                }
            }
        },
        "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw InvalidShape("sub: shape mismatch");
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return detail::make_op<T>(
        a.shape(), std::move(out), {a, b},
        [](detail::Node<T>& n) {
            if (auto* g = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i];
            if (auto* g = detail::grad_sink(n.parents[1]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] -= n.grad[i];
        },
        "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw InvalidShape("mul: shape mismatch");
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return detail::make_op<T>(
        a.shape(), std::move(out), {a, b},
        [](detail::Node<T>& n) {
            const auto& av = n.parents[0]->values;
            const auto& bv = n.parents[1]->values;
            if (auto* g = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i] * bv[i];
            if (auto* g = detail::grad_sink(n.parents[1]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i] * av[i];
        },
        "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
    return detail::make_op<T>(
        a.shape(), std::move(out), {a},
        [factor](detail::Node<T>& n) {
            if (auto* g = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i] * factor;
        },
        "scale");
}

// y = a*x + b with constant coefficients (denormalization path).
template <typename T>
Tensor<T> affine(const Tensor<T>& x, T a, T b) {
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x.data()[i] + b;
    return detail::make_op<T>(
        x.shape(), std::move(out), {x},
        [a](detail::Node<T>& n) {
            if (auto* g = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i] * a;
        },
        "affine");
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw InvalidShape("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                           shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<T> out(m * n, T(0));
    const T* ap = a.data().data();
    const T* bp = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const T av = ap[i * k + l];
            const T* brow = bp + l * n;
            T* orow = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return detail::make_op<T>(
        Shape{m, n}, std::move(out), {a, b},
        [m, k, n](detail::Node<T>& n_) {
            const auto& av = n_.parents[0]->values;
            const auto& bv = n_.parents[1]->values;
            if (auto* ga = detail::grad_sink(n_.parents[0])) {
                // dA = dC * B^T
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const T gv = n_.grad[i * n + j];
                        for (std::size_t l = 0; l < k; ++l) (*ga)[i * k + l] += gv * bv[l * n + j];
                    }
            }
            if (auto* gb = detail::grad_sink(n_.parents[1])) {
                // dB = A^T * dC
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t l = 0; l < k; ++l) {
                        const T av_ = av[i * k + l];
                        for (std::size_t j = 0; j < n; ++j)
                            (*gb)[l * n + j] += av_ * n_.grad[i * n + j];
                    }
            }
        },
        "matmul");
}

// y = x*W + b. dW = x^T dY, dx = dY W^T, db = column sums of dY.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.rank() != 2 || w.rank() != 2 || x.cols() != w.rows()) {
        throw InvalidShape("linear: incompatible shapes " + shape_str(x.shape()) + " x " +
                           shape_str(w.shape()));
    }
    const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
    const bool has_bias = b.defined();
    if (has_bias && b.size() != n) throw InvalidShape("linear: bias size mismatch");
    std::vector<T> out(m * n, T(0));
    const T* xp = x.data().data();
    const T* wp = w.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        T* orow = out.data() + i * n;
        if (has_bias)
            for (std::size_t j = 0; j < n; ++j) orow[j] = b.data()[j];
        for (std::size_t l = 0; l < k; ++l) {
            const T xv = xp[i * k + l];
            const T* wrow = wp + l * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += xv * wrow[j];
        }
    }
    std::vector<Tensor<T>> parents = {x, w};
    if (has_bias) parents.push_back(b);
    return detail::make_op<T>(
        Shape{m, n}, std::move(out), std::move(parents),
        [m, k, n, has_bias](detail::Node<T>& n_) {
            const auto& xv = n_.parents[0]->values;
            const auto& wv = n_.parents[1]->values;
            if (auto* gx = detail::grad_sink(n_.parents[0])) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const T gv = n_.grad[i * n + j];
                        for (std::size_t l = 0; l < k; ++l) (*gx)[i * k + l] += gv * wv[l * n + j];
                    }
            }
            if (auto* gw = detail::grad_sink(n_.parents[1])) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t l = 0; l < k; ++l) {
                        const T xval = xv[i * k + l];
                        for (std::size_t j = 0; j < n; ++j)
                            (*gw)[l * n + j] += xval * n_.grad[i * n + j];
                    }
            }
            if (has_bias) {
                if (auto* gb = detail::grad_sink(n_.parents[2])) {
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += n_.grad[i * n + j];
                }
            }
        },
        "linear");
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w) {
    return linear(x, w, Tensor<T>{});
}

// ---------------------------------------------------------------------------
// Softmax / normalization / activation
// ---------------------------------------------------------------------------

// Softmax along `axis` of a 1-D or 2-D tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis = -1) {
    if (x.rank() == 0 || x.size() == 0) throw InvalidShape("softmax: empty input");
    const bool is_vec = x.rank() == 1;
    if (axis < 0) axis = is_vec ? 0 : 1;
    if (is_vec && axis != 0) throw InvalidShape("softmax: bad axis for vector");
    if (!is_vec && axis != 0 && axis != 1) throw InvalidShape("softmax: bad axis");

    const std::size_t rows = is_vec ? 1 : x.rows();
    const std::size_t cols = is_vec ? x.size() : x.cols();
    // Treat axis==0 on a matrix as softmax over columns via strided walk.
    const bool over_cols = !is_vec && axis == 0;
    const std::size_t groups = over_cols ? cols : rows;
    const std::size_t span_len = over_cols ? rows : cols;
    if (span_len == 0) throw InvalidShape("stable_softmax: empty axis");
    const std::size_t stride = over_cols ? cols : 1;

    std::vector<T> out(x.data().begin(), x.data().end());
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = over_cols ? g : g * cols;
        T maxv = out[base];
        for (std::size_t i = 0; i < span_len; ++i) maxv = std::max(maxv, out[base + i * stride]);
        T sum = T(0);
        for (std::size_t i = 0; i < span_len; ++i) {
            T& v = out[base + i * stride];
            v = std::exp(v - maxv);
            sum += v;
        }
        for (std::size_t i = 0; i < span_len; ++i) out[base + i * stride] /= sum;
    }
    return detail::make_op<T>(
        x.shape(), std::move(out), {x},
        [groups, span_len, stride, over_cols, cols](detail::Node<T>& n) {
            auto* gx = detail::grad_sink(n.parents[0]);
            if (!gx) return;
            for (std::size_t g = 0; g < groups; ++g) {
                const std::size_t base = over_cols ? g : g * cols;
                T dot = T(0);
                for (std::size_t i = 0; i < span_len; ++i) {
                    const std::size_t ix = base + i * stride;
                    dot += n.grad[ix] * n.values[ix];
                }
                for (std::size_t i = 0; i < span_len; ++i) {
                    const std::size_t ix = base + i * stride;
                    (*gx)[ix] += n.values[ix] * (n.grad[ix] - dot);
                }
            }
        },
        "softmax");
}

// LayerNorm over the last dimension with affine parameters.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5)) {
    const std::size_t d = x.rank() == 1 ? x.size() : x.cols();
    const std::size_t rows = x.rank() == 1 ? 1 : x.rows();
    if (d < 1) throw InvalidShape("layer_norm: empty feature dim");
    if (gamma.size() != d || beta.size() != d) throw InvalidShape("layer_norm: affine size");

    std::vector<T> out(x.size());
    std::vector<T> inv_std(rows), means(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = x.data().data() + r * d;
        T mean = T(0);
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<T>(d);
        T var = T(0);
        for (std::size_t j = 0; j < d; ++j) {
            const T c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<T>(d);
        const T is = T(1) / std::sqrt(var + eps);
        means[r] = mean;
        inv_std[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            out[r * d + j] = gamma.data()[j] * ((row[j] - mean) * is) + beta.data()[j];
        }
    }
    return detail::make_op<T>(
        x.shape(), std::move(out), {x, gamma, beta},
        [rows, d, means = std::move(means), inv_std = std::move(inv_std)](detail::Node<T>& n) {
            const auto& xv = n.parents[0]->values;
            const auto& gv = n.parents[1]->values;
            auto* gx = detail::grad_sink(n.parents[0]);
            auto* gg = detail::grad_sink(n.parents[1]);
            auto* gb = detail::grad_sink(n.parents[2]);
            std::vector<T> xhat(d), dxhat(d);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < d; ++j) {
                    xhat[j] = (xv[r * d + j] - means[r]) * inv_std[r];
                }
                if (gg)
                    for (std::size_t j = 0; j < d; ++j) (*gg)[j] += n.grad[r * d + j] * xhat[j];
                if (gb)
                    for (std::size_t j = 0; j < d; ++j) (*gb)[j] += n.grad[r * d + j];
                if (gx) {
                    T mean_dx = T(0), mean_dxx = T(0);
                    for (std::size_t j = 0; j < d; ++j) {
                        dxhat[j] = n.grad[r * d + j] * gv[j];
                        mean_dx += dxhat[j];
                        mean_dxx += dxhat[j] * xhat[j];
                    }
                    mean_dx /= static_cast<T>(d);
                    mean_dxx /= static_cast<T>(d);
                    for (std::size_t j = 0; j < d; ++j) {
                        (*gx)[r * d + j] +=
                            inv_std[r] * (dxhat[j] - mean_dx - xhat[j] * mean_dxx);
                    }
                }
            }
        },
        "layer_norm");
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = static_cast<double>(x.data()[i]);
        out[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
    }
    return detail::make_op<T>(
        x.shape(), std::move(out), {x},
        [](detail::Node<T>& n) {
            auto* gx = detail::grad_sink(n.parents[0]);
            if (!gx) return;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                const double v = static_cast<double>(n.parents[0]->values[i]);
                const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                (*gx)[i] += n.grad[i] * static_cast<T>(cdf + v * pdf);
            }
        },
        "gelu");
}

// Inverted dropout; identity when not training or rate == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw InvalidArgument("dropout: rate must be in [0,1)");
    if (!training || rate == 0.0) return x;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    std::vector<T> mask(x.size());
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        mask[i] = rng.uniform() < rate ? T(0) : keep_scale;
        out[i] = x.data()[i] * mask[i];
    }
    return detail::make_op<T>(
        x.shape(), std::move(out), {x},
        [mask = std::move(mask)](detail::Node<T>& n) {
            if (auto* gx = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*gx)[i] += n.grad[i] * mask[i];
        },
        "dropout");
}

// ---------------------------------------------------------------------------
// Reductions and shape plumbing
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    T s = T(0);
    for (const T v : x.data()) s += v;
    return detail::make_op<T>(
        Shape{1}, {s}, {x},
        [](detail::Node<T>& n) {
            if (auto* gx = detail::grad_sink(n.parents[0]))
                for (auto& g : *gx) g += n.grad[0];
        },
        "sum");
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    return scale(sum(x), static_cast<T>(1.0 / static_cast<double>(x.size())));
}

// Mean squared error against a (typically constant) target of the same shape.
template <typename T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape()) throw InvalidShape("mse: shape mismatch");
    const std::size_t n = pred.size();
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        const T d = pred.data()[i] - target.data()[i];
        s += d * d;
    }
    s /= static_cast<T>(n);
    return detail::make_op<T>(
        Shape{1}, {s}, {pred, target},
        [n](detail::Node<T>& node) {
            const auto& pv = node.parents[0]->values;
            const auto& tv = node.parents[1]->values;
            const T c = node.grad[0] * T(2) / static_cast<T>(n);
            if (auto* gp = detail::grad_sink(node.parents[0]))
                for (std::size_t i = 0; i < n; ++i) (*gp)[i] += c * (pv[i] - tv[i]);
            if (auto* gt = detail::grad_sink(node.parents[1]))
                for (std::size_t i = 0; i < n; ++i) (*gt)[i] -= c * (pv[i] - tv[i]);
        },
        "mse");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
    if (numel(new_shape) != x.size()) throw InvalidShape("reshape: element count mismatch");
    std::vector<T> out(x.data().begin(), x.data().end());
    return detail::make_op<T>(
        std::move(new_shape), std::move(out), {x},
        [](detail::Node<T>& n) {
            if (auto* gx = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i) (*gx)[i] += n.grad[i];
        },
        "reshape");
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count) {
    if (x.rank() != 2) throw InvalidShape("slice_rows: expects a matrix");
    if (start + count > x.rows()) throw InvalidArgument("slice_rows: range out of bounds");
    const std::size_t c = x.cols();
    std::vector<T> out(count * c);
    std::copy_n(x.data().data() + start * c, count * c, out.data());
    return detail::make_op<T>(
        Shape{count, c}, std::move(out), {x},
        [start, c](detail::Node<T>& n) {
            if (auto* gx = detail::grad_sink(n.parents[0]))
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    (*gx)[start * c + i] += n.grad[i];
        },
        "slice_rows");
}

// Concatenate matrices with equal row counts along columns (head merge).
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw InvalidShape("concat_cols: no inputs");
    const std::size_t rows = parts[0].rows();
    std::size_t total_cols = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.rows() != rows) throw InvalidShape("concat_cols: row mismatch");
        total_cols += p.cols();
    }
    std::vector<T> out(rows * total_cols);
    std::size_t col_off = 0;
    std::vector<std::size_t> offsets, widths;
    for (const auto& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(p.data().data() + r * w, w, out.data() + r * total_cols + col_off);
        offsets.push_back(col_off);
        widths.push_back(w);
        col_off += w;
    }
    return detail::make_op<T>(
        Shape{rows, total_cols}, std::move(out), parts,
        [rows, total_cols, offsets = std::move(offsets),
         widths = std::move(widths)](detail::Node<T>& n) {
            for (std::size_t p = 0; p < n.parents.size(); ++p) {
                auto* gp = detail::grad_sink(n.parents[p]);
                if (!gp) continue;
                const std::size_t w = widths[p], off = offsets[p];
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < w; ++j)
                        (*gp)[r * w + j] += n.grad[r * total_cols + off + j];
            }
        },
        "concat_cols");
}

// Repeat a single row n times; backward sums row gradients.
template <typename T>
Tensor<T> broadcast_row(const Tensor<T>& x, std::size_t n) {
    if (x.rank() != 2 || x.rows() != 1) throw InvalidShape("broadcast_row: expects [1 x d]");
    const std::size_t d = x.cols();
    std::vector<T> out(n * d);
    for (std::size_t r = 0; r < n; ++r) std::copy_n(x.data().data(), d, out.data() + r * d);
    return detail::make_op<T>(
        Shape{n, d}, std::move(out), {x},
        [n, d](detail::Node<T>& node) {
            if (auto* gx = detail::grad_sink(node.parents[0]))
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t j = 0; j < d; ++j) (*gx)[j] += node.grad[r * d + j];
        },
        "broadcast_row");
}

}  // namespace tmoe
