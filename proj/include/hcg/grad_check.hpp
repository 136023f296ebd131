#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hcg/rng.hpp"
#include "hcg/tape.hpp"
#include "hcg/tensor.hpp"

namespace hcg {

/// Compares analytic gradients against central finite differences on a random
/// coordinate subset of each input. `fn` must rebuild the computation from
/// the inputs' current values and return a scalar. Relative error uses
/// |a - n| / max(|a|, |n|, 1e-8).
template <typename T>
double grad_check(const std::function<TensorPtr<T>(Tape<T>&)>& fn,
                  const std::vector<TensorPtr<T>>& inputs, double eps, Rng& rng,
                  std::int64_t coords_per_input = 32) {
    if (eps <= 0) throw UsageError("grad_check: eps must be positive");
    for (const auto& in : inputs) {
        in->requires_grad = true;
        in->drop_grad();
    }
    Tape<T> tape;
    auto loss = fn(tape);
    tape.backward(loss);

    std::vector<std::vector<T>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& in : inputs) {
        in->ensure_grad();
        analytic.push_back(in->grad);
    }

    double max_rel = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        auto& in = *inputs[t];
        const std::int64_t count = in.numel();
        std::vector<std::int64_t> coords;
        if (count <= coords_per_input) {
            coords.resize(static_cast<std::size_t>(count));
            for (std::int64_t i = 0; i < count; ++i) coords[static_cast<std::size_t>(i)] = i;
        } else {
            for (std::int64_t i = 0; i < coords_per_input; ++i) {
                coords.push_back(rng.uniform_int(0, count - 1));
            }
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        }
        for (const std::int64_t idx : coords) {
            const T saved = in.data[static_cast<std::size_t>(idx)];
            in.data[static_cast<std::size_t>(idx)] = saved + static_cast<T>(eps);
            Tape<T> fwd_plus(false);
            const double f_plus = static_cast<double>(fn(fwd_plus)->data[0]);
            in.data[static_cast<std::size_t>(idx)] = saved - static_cast<T>(eps);
            Tape<T> fwd_minus(false);
            const double f_minus = static_cast<double>(fn(fwd_minus)->data[0]);
            in.data[static_cast<std::size_t>(idx)] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = static_cast<double>(analytic[t][static_cast<std::size_t>(idx)]);
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
        in.drop_grad();
    }
    return max_rel;
}

}  // namespace hcg
