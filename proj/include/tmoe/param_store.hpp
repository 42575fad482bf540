// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tmoe/common.hpp"
#include "tmoe/tensor.hpp"

namespace tmoe {

// Named trainable tensors with co-located gradient buffers, addressed by
// hierarchical string keys ("enc.0.attn.h2.wq"). Iteration order is insertion
// order, which fixes checkpoint payload order and optimizer walk order.
template <typename T = float>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor<T> tensor;
    };

    Tensor<T>& add(const std::string& name, Tensor<T> tensor) {
        if (index_.count(name)) throw InvalidArgument("ParamStore: duplicate key " + name);
        tensor.set_requires_grad(true);
        index_.emplace(name, entries_.size());
        entries_.push_back(Entry{name, std::move(tensor)});
        return entries_.back().tensor;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Tensor<T>& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw InvalidArgument("ParamStore: no key " + name);
        return entries_[it->second].tensor;
    }

    const Tensor<T>& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw InvalidArgument("ParamStore: no key " + name);
        return entries_[it->second].tensor;
    }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    std::size_t size() const { return entries_.size(); }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.size();
        return n;
    }

    void zero_grad() {
        for (auto& e : entries_) e.tensor.zero_grad();
    }

    // Deep copy of current values (graph-free), shapes preserved.
    std::vector<std::vector<T>> snapshot_values() const {
        std::vector<std::vector<T>> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_)
            out.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
        return out;
    }

    void restore_values(const std::vector<std::vector<T>>& snap) {
        if (snap.size() != entries_.size())
            throw InvalidArgument("ParamStore: snapshot entry count mismatch");
        for (std::size_t i = 0; i < snap.size(); ++i) {
            if (snap[i].size() != entries_[i].tensor.size())
                throw InvalidArgument("ParamStore: snapshot shape mismatch at " +
                                      entries_[i].name);
            std::copy(snap[i].begin(), snap[i].end(),
                      entries_[i].tensor.mutable_data().begin());
        }
    }

    // Value-converting copy (float <-> double), used by the gradient checker.
    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& e : entries_) {
            std::vector<U> values(e.tensor.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                values[i] = static_cast<U>(e.tensor.data()[i]);
            out.add(e.name, Tensor<U>::from_data(e.tensor.shape(), std::move(values)));
        }
        return out;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace tmoe
