#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "hcg/grad_check.hpp"
#include "hcg/ops.hpp"

namespace hcg {

/// One named finite-difference check; run(seed, eps) returns the max
/// relative error between analytic and central-difference gradients.
///
/// Input construction is precision-aware. In double the cases use plain
/// N(0,1) tensors. In single precision a gradient that is a near-cancelled
/// sum of many terms is itself only accurate to ~1e-7 * sum|terms|, so no
/// finite-difference scheme can confirm it to 1e-3 relative; the float cases
/// therefore use sign/magnitude-bounded inputs that keep every sampled
/// gradient away from the cancellation floor. Cases whose loss is exactly
/// linear in each checked coordinate widen eps internally (truncation error
/// is zero for them, and a longer lever arm beats float roundoff).
template <typename T>
struct GradCheckCase {
    std::string name;
    std::function<double(std::uint64_t seed, double eps)> run;
};

namespace detail {

constexpr double kLinearEpsBoost = 10.0;

/// sign * uniform[lo, hi]
template <typename T>
TensorPtr<T> bounded_signed(Shape s, Rng& rng, double lo, double hi) {
    auto t = zeros<T>(s);
    for (auto& v : t->data) {
        const double mag = rng.uniform(lo, hi);
        v = static_cast<T>(rng.bernoulli(0.5) ? mag : -mag);
    }
    return t;
}

/// uniform[lo, hi]
template <typename T>
TensorPtr<T> bounded_positive(Shape s, Rng& rng, double lo, double hi) {
    auto t = zeros<T>(s);
    for (auto& v : t->data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

/// N(0,1) in double; positive bounded in float (see header comment).
template <typename T>
TensorPtr<T> conditioned(Shape s, Rng& rng) {
    if constexpr (std::is_same_v<T, float>) {
        return bounded_positive<T>(s, rng, 0.3, 1.0);
    } else {
        return randn<T>(s, rng);
    }
}

/// Pushes every entry at least `margin` away from zero so relu/prelu/l1
/// kinks cannot sit inside the finite-difference stencil.
template <typename T>
void clear_of_zero(Tensor<T>& t, double margin) {
    for (auto& v : t.data) {
        if (std::abs(static_cast<double>(v)) < margin) {
            v = v < T(0) ? static_cast<T>(-margin) : static_cast<T>(margin);
        }
    }
}

/// Ensures the per-pixel channel max wins by at least `margin` so the argmax
/// is stable under perturbation.
template <typename T>
void separate_channel_max(Tensor<T>& t, double margin) {
    const int64_t plane = t.shape.h * t.shape.w;
    for (int64_t n = 0; n < t.shape.n; ++n) {
        T* base = t.data.data() + n * t.shape.c * plane;
        for (int64_t i = 0; i < plane; ++i) {
            int64_t best = 0;
            for (int64_t c = 1; c < t.shape.c; ++c) {
                if (base[c * plane + i] > base[best * plane + i]) best = c;
            }
            T second = -std::numeric_limits<T>::infinity();
            for (int64_t c = 0; c < t.shape.c; ++c) {
                if (c != best) second = std::max(second, base[c * plane + i]);
            }
            if (base[best * plane + i] - second < static_cast<T>(margin)) {
                base[best * plane + i] = second + static_cast<T>(margin);
            }
        }
    }
}

/// Smooth scalar head: sum(x * r) for a fixed weight tensor.
template <typename T>
TensorPtr<T> weighted_sum(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& r) {
    return reduce_sum(tape, mul(tape, x, r));
}

}  // namespace detail

/// The per-operator finite-difference suite. Every differentiable op in the
/// library appears at least once, checked with respect to every input that
/// carries gradients.
template <typename T>
std::vector<GradCheckCase<T>> op_gradcheck_cases() {
    using detail::bounded_positive;
    using detail::bounded_signed;
    using detail::conditioned;
    using detail::kLinearEpsBoost;
    using detail::weighted_sum;
    std::vector<GradCheckCase<T>> cases;

    cases.push_back({"conv2d", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = conditioned<T>({2, 3, 6, 5}, rng);
        auto w = conditioned<T>({4, 3, 3, 3}, rng);
        auto b = conditioned<T>({1, 4, 1, 1}, rng);
        auto r = conditioned<T>({2, 4, 6, 5}, rng);
        auto fn = [&](Tape<T>& t) {
            return weighted_sum(t, conv2d(t, x, w, b, {1, 1, 1}), r);
        };
        return grad_check<T>(fn, {x, w, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"conv2d_strided_dilated", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = conditioned<T>({1, 2, 9, 9}, rng);
        auto w = conditioned<T>({3, 2, 3, 3}, rng);
        auto b = conditioned<T>({1, 3, 1, 1}, rng);
        Tape<T> probe(false);
        auto shape = conv2d(probe, x, w, b, {2, 2, 2})->shape;
        auto r = conditioned<T>(shape, rng);
        auto fn = [&](Tape<T>& t) {
            return weighted_sum(t, conv2d(t, x, w, b, {2, 2, 2}), r);
        };
        return grad_check<T>(fn, {x, w, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"conv_transpose2d", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = conditioned<T>({2, 3, 4, 5}, rng);
        auto w = conditioned<T>({3, 2, 4, 4}, rng);
        auto b = conditioned<T>({1, 2, 1, 1}, rng);
        auto r = conditioned<T>({2, 2, 8, 10}, rng);
        auto fn = [&](Tape<T>& t) {
            return weighted_sum(t, conv_transpose2d(t, x, w, b, 2, 1), r);
        };
        return grad_check<T>(fn, {x, w, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"depthwise_conv2d", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = conditioned<T>({2, 4, 5, 5}, rng);
        auto w = conditioned<T>({4, 1, 3, 3}, rng);
        auto b = conditioned<T>({1, 4, 1, 1}, rng);
        auto r = conditioned<T>({2, 4, 5, 5}, rng);
        auto fn = [&](Tape<T>& t) {
            return weighted_sum(t, depthwise_conv2d(t, x, w, b, 1, 1), r);
        };
        return grad_check<T>(fn, {x, w, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"relu", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        // |x| >= 0.1 keeps the kink outside the stencil
        auto x = bounded_signed<T>({2, 3, 4, 4}, rng, 0.1, 1.0);
        auto r = bounded_signed<T>(x->shape, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, relu(t, x), r); };
        return grad_check<T>(fn, {x}, eps, rng);
    }});

    cases.push_back({"sigmoid", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = bounded_signed<T>({2, 2, 4, 4}, rng, 0.2, 1.5);
        auto r = bounded_signed<T>(x->shape, rng, 0.5, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, sigmoid(t, x), r); };
        return grad_check<T>(fn, {x}, eps, rng);
    }});

    cases.push_back({"prelu", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        // |x| >= 0.2 keeps kinks clear and slope gradients of
        // sparse-negative channels above the float noise floor
        auto x = bounded_signed<T>({2, 3, 4, 4}, rng, 0.2, 1.0);
        auto slope = bounded_signed<T>({1, 3, 1, 1}, rng, 0.2, 0.6);
        auto r = bounded_positive<T>(x->shape, rng, 0.5, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, prelu(t, x, slope), r); };
        return grad_check<T>(fn, {x, slope}, eps, rng);
    }});

    for (const EwKind kind : {EwKind::kAdd, EwKind::kSub, EwKind::kMul}) {
        const char* name = kind == EwKind::kAdd   ? "elementwise_add"
                           : kind == EwKind::kSub ? "elementwise_sub"
                                                  : "elementwise_mul";
        cases.push_back({name, [kind](std::uint64_t seed, double eps) {
            Rng rng(seed);
            auto a = bounded_signed<T>({2, 3, 4, 4}, rng, 0.3, 1.0);
            auto b = bounded_signed<T>({2, 3, 4, 4}, rng, 0.3, 1.0);
            auto r = bounded_signed<T>(a->shape, rng, 0.3, 1.0);
            auto fn = [&](Tape<T>& t) {
                return weighted_sum(t, elementwise(t, a, b, kind), r);
            };
            return grad_check<T>(fn, {a, b}, eps * kLinearEpsBoost, rng);
        }});
    }

    cases.push_back({"broadcast_mul_channel", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto a = conditioned<T>({2, 4, 3, 3}, rng);
        auto b = conditioned<T>({1, 4, 1, 1}, rng);
        auto r = conditioned<T>(a->shape, rng);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, mul(t, a, b), r); };
        return grad_check<T>(fn, {a, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"broadcast_mul_spatial_map", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto a = conditioned<T>({2, 4, 3, 3}, rng);
        auto b = conditioned<T>({2, 1, 3, 3}, rng);
        auto r = conditioned<T>(a->shape, rng);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, mul(t, a, b), r); };
        return grad_check<T>(fn, {a, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"concat_channels", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto a = randn<T>({2, 2, 3, 3}, rng);
        auto b = randn<T>({2, 5, 3, 3}, rng);
        auto r = bounded_signed<T>({2, 7, 3, 3}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, concat_channels(t, {a, b}), r); };
        return grad_check<T>(fn, {a, b}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"channel_slice", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = randn<T>({2, 6, 3, 3}, rng);
        auto r = bounded_signed<T>({2, 3, 3, 3}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, channel_slice(t, x, 2, 5), r); };
        return grad_check<T>(fn, {x}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"channel_reduce_max", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = randn<T>({2, 5, 4, 4}, rng);
        detail::separate_channel_max(*x, 0.05);
        auto r = bounded_signed<T>({2, 1, 4, 4}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) {
            return weighted_sum(t, channel_reduce(t, x, ReduceKind::kMax), r);
        };
        return grad_check<T>(fn, {x}, eps, rng);
    }});

    cases.push_back({"channel_reduce_mean", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = randn<T>({2, 5, 4, 4}, rng);
        auto r = bounded_signed<T>({2, 1, 4, 4}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) {
            return weighted_sum(t, channel_reduce(t, x, ReduceKind::kMean), r);
        };
        return grad_check<T>(fn, {x}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"pixel_shuffle_roundtrip", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = randn<T>({2, 8, 3, 3}, rng);
        auto r = bounded_signed<T>({2, 2, 6, 6}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) {
            auto y = pixel_shuffle(t, x, 2);
            auto z = pixel_shuffle(t, pixel_unshuffle(t, y, 2), 2);
            return weighted_sum(t, z, r);
        };
        return grad_check<T>(fn, {x}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"resize_bilinear_up", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = randn<T>({2, 2, 4, 5}, rng);
        auto r = bounded_positive<T>({2, 2, 9, 11}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, resize_bilinear(t, x, 9, 11), r); };
        return grad_check<T>(fn, {x}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"resize_bilinear_down", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto x = randn<T>({2, 2, 8, 8}, rng);
        auto r = bounded_positive<T>({2, 2, 3, 3}, rng, 0.3, 1.0);
        auto fn = [&](Tape<T>& t) { return weighted_sum(t, resize_bilinear(t, x, 3, 3), r); };
        return grad_check<T>(fn, {x}, eps * kLinearEpsBoost, rng);
    }});

    cases.push_back({"l1_loss", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        auto p = randn<T>({2, 2, 4, 4}, rng);
        auto g = randn<T>({2, 2, 4, 4}, rng);
        // keep |p - g| outside the stencil so the |u| kink is never crossed
        for (std::size_t i = 0; i < p->data.size(); ++i) {
            if (std::abs(static_cast<double>(p->data[i] - g->data[i])) < 0.05) {
                p->data[i] = g->data[i] + T(0.05);
            }
        }
        auto fn = [&](Tape<T>& t) { return l1_loss(t, p, g); };
        return grad_check<T>(fn, {p}, eps, rng);
    }});

    cases.push_back({"composite_conv_sigmoid_l1", [](std::uint64_t seed, double eps) {
        Rng rng(seed);
        TensorPtr<T> x, w, b, target;
        double eps_boost = 1.0;
        if constexpr (std::is_same_v<T, float>) {
            // centered pre-activations with all-positive chain gradients, so
            // even the weakly-connected corner pixels sit above float noise
            x = bounded_positive<T>({1, 2, 5, 5}, rng, 0.5, 0.7);
            w = bounded_positive<T>({3, 2, 3, 3}, rng, 0.10, 0.12);
            b = bounded_positive<T>({1, 3, 1, 1}, rng, -1.25, -1.15);
            target = zeros<T>({1, 3, 5, 5});
            eps_boost = 3.0;
        } else {
            x = randn<T>({1, 2, 6, 6}, rng);
            w = randn<T>({3, 2, 3, 3}, rng, 0.5);
            b = randn<T>({1, 3, 1, 1}, rng, 0.5);
            target = randn<T>({1, 3, 6, 6}, rng, 2.0);
            eps_boost = 5.0;
            // keep the |pred - target| kink outside the stencil
            Tape<T> probe(false);
            auto pred = sigmoid(probe, conv2d(probe, x, w, b, {1, 1, 1}));
            for (std::size_t i = 0; i < target->data.size(); ++i) {
                if (std::abs(static_cast<double>(pred->data[i] - target->data[i])) < 0.05) {
                    target->data[i] = pred->data[i] - T(0.05);
                }
            }
        }
        auto fn = [&](Tape<T>& t) {
            return l1_loss(t, sigmoid(t, conv2d(t, x, w, b, {1, 1, 1})), target);
        };
        return grad_check<T>(fn, {x, w, b}, eps * eps_boost, rng);
    }});

    return cases;
}

}  // namespace hcg
