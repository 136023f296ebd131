#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hcg/error.hpp"
#include "hcg/rng.hpp"

namespace hcg {

/// (batch, channel, height, width), row-major with w fastest.
struct Shape {
    std::int64_t n = 0;
    std::int64_t c = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;

    std::int64_t numel() const { return n * c * h * w; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }
};

template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until a backward pass touches this tensor
    bool requires_grad = false;

    Tensor() = default;

    explicit Tensor(Shape s, bool rg = false) : shape(s), requires_grad(rg) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
            throw ShapeError("negative tensor dimension " + s.str());
        }
        data.assign(static_cast<std::size_t>(s.numel()), T(0));
    }

    std::int64_t numel() const { return shape.numel(); }

    std::int64_t offset(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
        return ((n * shape.c + c) * shape.h + y) * shape.w + x;
    }

    T& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
        return data[static_cast<std::size_t>(offset(n, c, y, x))];
    }
    const T& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
        return data[static_cast<std::size_t>(offset(n, c, y, x))];
    }

    bool has_grad() const { return !grad.empty(); }

    /// Allocates a zero-filled gradient buffer if absent.
    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
    }

    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
    void drop_grad() { grad.clear(); }

    bool all_finite() const {
        for (const T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }
};

template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <typename T>
TensorPtr<T> zeros(Shape s, bool requires_grad = false) {
    return std::make_shared<Tensor<T>>(s, requires_grad);
}

template <typename T>
TensorPtr<T> full(Shape s, T value, bool requires_grad = false) {
    auto t = std::make_shared<Tensor<T>>(s, requires_grad);
    std::fill(t->data.begin(), t->data.end(), value);
    return t;
}

template <typename T>
TensorPtr<T> from_values(Shape s, std::vector<T> values, bool requires_grad = false) {
    if (static_cast<std::int64_t>(values.size()) != s.numel()) {
        throw ShapeError("value count " + std::to_string(values.size()) + " does not fill " + s.str());
    }
    auto t = std::make_shared<Tensor<T>>(s, requires_grad);
    t->data = std::move(values);
    return t;
}

template <typename T>
TensorPtr<T> randn(Shape s, Rng& rng, double stddev = 1.0, bool requires_grad = false) {
    auto t = std::make_shared<Tensor<T>>(s, requires_grad);
    for (auto& v : t->data) v = static_cast<T>(rng.normal(0.0, stddev));
    return t;
}

}  // namespace hcg
