// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensor with reverse-mode autodiff. Training and inference
// run in float; the same templates instantiate with double for gradient
// checking. The graph is dynamic: each op wires a backward closure onto the
// output node, and backward() replays them in reverse topological order.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tmoe/common.hpp"

namespace tmoe {

namespace detail {

// Scoped switch: while disabled, ops skip backward wiring entirely.
inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // allocated on first use
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), T(0));
    }
};

template <typename T>
inline void check_finite(const std::vector<T>& values, const char* op) {
    for (const T v : values) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw NonFinite(std::string(op) + ": produced a non-finite value");
        }
    }
}

}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

class NoGradGuard {
public:
    NoGradGuard() : prev_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
    ~NoGradGuard() { detail::grad_mode_flag() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

template <typename T = float>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    static Tensor zeros(Shape shape) {
        return Tensor(std::move(shape), {}, /*fill*/ T(0));
    }

    static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), {}, value); }

    static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

    static Tensor from_data(Shape shape, std::vector<T> values) {
        if (numel(shape) != values.size()) {
            throw InvalidShape("Tensor: shape " + shape_str(shape) + " does not match " +
                               std::to_string(values.size()) + " values");
        }
        return Tensor(std::move(shape), std::move(values));
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_ ? node_->values.size() : 0; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t rows() const { return node_->shape.empty() ? 0 : node_->shape[0]; }
    std::size_t cols() const { return node_->shape.size() < 2 ? 1 : node_->shape[1]; }

    std::span<const T> data() const { return {node_->values.data(), node_->values.size()}; }
    std::span<T> mutable_data() { return {node_->values.data(), node_->values.size()}; }

    T operator()(std::size_t i) const { return node_->values[i]; }
    T operator()(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }
    T& at(std::size_t i) { return node_->values[i]; }
    T& at(std::size_t r, std::size_t c) { return node_->values[r * cols() + c]; }

    T value() const {
        if (size() != 1) throw InvalidShape("Tensor::value: not a scalar");
        return node_->values[0];
    }

    bool requires_grad() const { return node_ && node_->requires_grad; }

    Tensor& set_requires_grad(bool flag = true) {
        node_->requires_grad = flag;
        return *this;
    }

    std::span<const T> grad() const {
        node_->ensure_grad();
        return {node_->grad.data(), node_->grad.size()};
    }

    std::span<T> mutable_grad() {
        node_->ensure_grad();
        return {node_->grad.data(), node_->grad.size()};
    }

    void zero_grad() {
        if (node_) node_->grad.assign(node_->values.size(), T(0));
    }

    // Copy of the values with no graph attached.
    Tensor detach() const { return Tensor(node_->shape, node_->values); }

    // Reverse-mode sweep from a scalar output. Seeds d(out)/d(out) = 1 and
    // applies each recorded closure exactly once, children before parents.
    void backward() {
        if (size() != 1) throw InvalidShape("backward: output must be scalar");
        std::vector<detail::Node<T>*> order;
        topo_collect(node_.get(), order);
        node_->ensure_grad();
        node_->grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            detail::Node<T>* n = *it;
            if (n->backward) n->backward(*n);
        }
    }

    std::shared_ptr<detail::Node<T>>& node() { return node_; }
    const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

    explicit Tensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}

private:
    Tensor(Shape shape, std::vector<T> values, T fill = T(0)) {
        node_ = std::make_shared<detail::Node<T>>();
        node_->shape = std::move(shape);
        if (values.empty() && numel(node_->shape) != 0) {
            node_->values.assign(numel(node_->shape), fill);
        } else {
            node_->values = std::move(values);
        }
    }

    static void topo_collect(detail::Node<T>* root, std::vector<detail::Node<T>*>& order) {
        // Iterative DFS; graph depth can exceed the stack on long chains.
        std::unordered_set<detail::Node<T>*> visited;
        std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
        stack.emplace_back(root, 0);
        visited.insert(root);
        while (!stack.empty()) {
            auto& [node, next_child] = stack.back();
            if (next_child < node->parents.size()) {
                detail::Node<T>* child = node->parents[next_child].get();
                ++next_child;
                if (child && !visited.count(child)) {
                    visited.insert(child);
                    stack.emplace_back(child, 0);
                }
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
    }

    std::shared_ptr<detail::Node<T>> node_;
};

namespace detail {

// Shared glue for every op: materializes the output node, runs the eager
// NaN/Inf check, and wires the backward closure iff autograd is live.
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> values, std::vector<Tensor<T>> parents,
                  std::function<void(Node<T>&)> backward, const char* op_name) {
    check_finite(values, op_name);
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    if (grad_mode_flag()) {
        bool needs = false;
        for (const auto& p : parents) {
            if (p.defined() && p.requires_grad()) needs = true;
        }
        if (needs) {
            node->requires_grad = true;
            node->parents.reserve(parents.size());
            for (auto& p : parents) node->parents.push_back(p.node());
            node->backward = std::move(backward);
        }
    }
    return Tensor<T>(std::move(node));
}

// Accumulate into a parent's grad buffer if it participates in the graph.
template <typename T>
inline std::vector<T>* grad_sink(const std::shared_ptr<Node<T>>& parent) {
    if (!parent || !parent->requires_grad) return nullptr;
    parent->ensure_grad();
    return &parent->grad;
}

}  // namespace detail

}  // namespace tmoe
