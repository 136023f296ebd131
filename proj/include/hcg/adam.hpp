#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hcg/param_store.hpp"

namespace hcg {

struct AdamOpts {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

/// Bias-corrected Adam over one ParamStore. Moment slots are matched to the
/// store by position, so the store must not grow after construction.
template <typename T>
class AdamState {
public:
    explicit AdamState(const ParamStore<T>& params, AdamOpts opts = {}) : opts_(opts) {
        for (const auto& [name, t] : params) {
            slots_.push_back(Slot{std::vector<T>(t->data.size(), T(0)),
                                  std::vector<T>(t->data.size(), T(0))});
        }
    }

    double lr() const { return opts_.lr; }
    void set_lr(double lr) { opts_.lr = lr; }
    const AdamOpts& opts() const { return opts_; }
    std::int64_t step_count() const { return t_; }

    /// One update; every parameter must carry a gradient. Gradients are
    /// released afterwards.
    void step(ParamStore<T>& params) {
        if (params.size() != slots_.size()) {
            throw UsageError("adam: parameter store changed size");
        }
        std::size_t i = 0;
        for (const auto& [name, t] : params) {
            if (!t->has_grad()) throw UsageError("adam: missing gradient for " + name);
            ++i;
        }
        ++t_;
        const T b1 = static_cast<T>(opts_.beta1);
        const T b2 = static_cast<T>(opts_.beta2);
        const T corr1 = static_cast<T>(1.0 - std::pow(opts_.beta1, static_cast<double>(t_)));
        const T corr2 = static_cast<T>(1.0 - std::pow(opts_.beta2, static_cast<double>(t_)));
        const T step_size = static_cast<T>(opts_.lr);
        const T eps = static_cast<T>(opts_.eps);
        i = 0;
        for (auto& [name, t] : params) {
            Slot& s = slots_[i++];
            for (std::size_t k = 0; k < t->data.size(); ++k) {
                const T g = t->grad[k];
                s.m[k] = b1 * s.m[k] + (T(1) - b1) * g;
                s.v[k] = b2 * s.v[k] + (T(1) - b2) * g * g;
                const T m_hat = s.m[k] / corr1;
                const T v_hat = s.v[k] / corr2;
                t->data[k] -= step_size * m_hat / (std::sqrt(v_hat) + eps);
            }
            t->drop_grad();
        }
    }

private:
    struct Slot {
        std::vector<T> m, v;
    };
    std::vector<Slot> slots_;
    std::int64_t t_ = 0;
    AdamOpts opts_;
};

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state) {
    state.step(params);
}

}  // namespace hcg
