#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hcg/tensor.hpp"

namespace hcg {

/// Named collection of learnable tensors. Iteration follows insertion order,
/// which fixes the optimizer update order and the checkpoint layout.
template <typename T>
class ParamStore {
public:
    TensorPtr<T> add(const std::string& name, TensorPtr<T> t) {
        if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
        t->requires_grad = true;
        index_[name] = items_.size();
        items_.emplace_back(name, t);
        return items_.back().second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const TensorPtr<T>& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UsageError("unknown parameter: " + name);
        return items_[it->second].second;
    }

    std::size_t size() const { return items_.size(); }

    std::int64_t total_params() const {
        std::int64_t total = 0;
        for (const auto& [name, t] : items_) total += t->numel();
        return total;
    }

    void zero_grads() {
        for (auto& [name, t] : items_) t->drop_grad();
    }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<std::pair<std::string, TensorPtr<T>>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace hcg
