#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

#include "hcg/gemm.hpp"
#include "hcg/tape.hpp"
#include "hcg/tensor.hpp"
#include "hcg/threading.hpp"

namespace hcg {

using std::int64_t;

struct Conv2dSpec {
    int64_t stride = 1;
    int64_t pad = 0;
    int64_t dilation = 1;
};

enum class ActKind { kRelu, kSigmoid, kPrelu };
enum class EwKind { kAdd, kSub, kMul };
enum class ReduceKind { kMax, kMean };

namespace detail {

template <typename T>
void add_bias(T* out, const T* bias, int64_t oc, int64_t span) {
    for (int64_t o = 0; o < oc; ++o) {
        const T bv = bias[o];
        T* row = out + o * span;
        for (int64_t i = 0; i < span; ++i) row[i] += bv;
    }
}

template <typename T>
void check_bias(const TensorPtr<T>& b, int64_t oc, const char* op) {
    if (b && !(b->shape == Shape{1, oc, 1, 1})) {
        throw ShapeError(std::string(op) + ": bias shape " + b->shape.str() + " expected (1," +
                         std::to_string(oc) + ",1,1)");
    }
}

}  // namespace detail

/// 2-D cross-correlation with zero padding. Weights are (out_c, in_c, kh, kw).
template <typename T>
TensorPtr<T> conv2d(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& w,
                    const std::type_identity_t<TensorPtr<T>>& b = nullptr, Conv2dSpec spec = {}) {
    const Shape xs = x->shape;
    const Shape ws = w->shape;
    if (spec.stride < 1 || spec.dilation < 1 || spec.pad < 0) {
        throw ShapeError("conv2d: stride/dilation must be >= 1 and pad >= 0");
    }
    if (xs.c != ws.c) {
        throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                         std::to_string(ws.c));
    }
    detail::check_bias(b, ws.n, "conv2d");
    const int64_t oh = (xs.h + 2 * spec.pad - spec.dilation * (ws.h - 1) - 1) / spec.stride + 1;
    const int64_t ow = (xs.w + 2 * spec.pad - spec.dilation * (ws.w - 1) - 1) / spec.stride + 1;
    if (oh <= 0 || ow <= 0) {
        throw ShapeError("conv2d: non-positive output size for input " + xs.str());
    }

    const int64_t oc = ws.n;
    const int64_t patch = ws.c * ws.h * ws.w;
    const int64_t span = oh * ow;
    const int64_t in_plane = xs.c * xs.h * xs.w;
    auto out = zeros<T>({xs.n, oc, oh, ow});

    parallel_for(xs.n, [&](int64_t n) {
        std::vector<T> cols(static_cast<std::size_t>(patch * span));
        im2col(x->data.data() + n * in_plane, xs.c, xs.h, xs.w, ws.h, ws.w, spec.stride, spec.pad,
               spec.dilation, oh, ow, cols.data());
        T* out_n = out->data.data() + n * oc * span;
        gemm_nn(oc, span, patch, w->data.data(), cols.data(), out_n);
        if (b) detail::add_bias(out_n, b->data.data(), oc, span);
    });

    out->requires_grad = x->requires_grad || w->requires_grad || (b && b->requires_grad);
    if (tape.recording() && out->requires_grad) {
        tape.record("conv2d", [x, w, b, out, spec, oh, ow]() {
            if (!out->has_grad()) return;
            const Shape xs = x->shape;
            const Shape ws = w->shape;
            const int64_t oc = ws.n;
            const int64_t patch = ws.c * ws.h * ws.w;
            const int64_t span = oh * ow;
            const int64_t in_plane = xs.c * xs.h * xs.w;
            const bool need_gx = x->requires_grad;
            const bool need_gw = w->requires_grad;
            if (need_gx) x->ensure_grad();
            if (need_gw) w->ensure_grad();
            std::vector<std::vector<T>> w_parts(need_gw ? xs.n : 0);

            parallel_for(xs.n, [&](int64_t n) {
                const T* gy_n = out->grad.data() + n * oc * span;
                std::vector<T> cols(static_cast<std::size_t>(patch * span));
                if (need_gw) {
                    im2col(x->data.data() + n * in_plane, xs.c, xs.h, xs.w, ws.h, ws.w, spec.stride,
                           spec.pad, spec.dilation, oh, ow, cols.data());
                    w_parts[n].resize(static_cast<std::size_t>(oc * patch));
                    gemm_nt(oc, patch, span, gy_n, cols.data(), w_parts[n].data());
                }
                if (need_gx) {
                    gemm_tn(patch, span, oc, w->data.data(), gy_n, cols.data());
                    col2im_add(cols.data(), xs.c, xs.h, xs.w, ws.h, ws.w, spec.stride, spec.pad,
                               spec.dilation, oh, ow, x->grad.data() + n * in_plane);
                }
            });
            if (need_gw) {
                for (int64_t n = 0; n < xs.n; ++n) {
                    for (int64_t i = 0; i < oc * patch; ++i) w->grad[i] += w_parts[n][i];
                }
            }
            if (b && b->requires_grad) {
                b->ensure_grad();
                for (int64_t n = 0; n < xs.n; ++n) {
                    const T* gy_n = out->grad.data() + n * oc * span;
                    for (int64_t o = 0; o < oc; ++o) {
                        T acc = 0;
                        const T* row = gy_n + o * span;
                        for (int64_t i = 0; i < span; ++i) acc += row[i];
                        b->grad[o] += acc;
                    }
                }
            }
        });
    }
    return out;
}

/// Transposed convolution: the exact adjoint of conv2d for the same weight
/// tensor. Weights are (in_c, out_c, kh, kw); in_c matches the input.
template <typename T>
TensorPtr<T> conv_transpose2d(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& w,
                              const std::type_identity_t<TensorPtr<T>>& b = nullptr, int64_t stride = 1, int64_t pad = 0) {
    const Shape xs = x->shape;
    const Shape ws = w->shape;
    if (stride < 1 || pad < 0) throw ShapeError("conv_transpose2d: stride must be >= 1 and pad >= 0");
    if (xs.c != ws.n) {
        throw ShapeError("conv_transpose2d: input has " + std::to_string(xs.c) +
                         " channels, weight expects " + std::to_string(ws.n));
    }
    const int64_t oc = ws.c;
    detail::check_bias(b, oc, "conv_transpose2d");
    const int64_t oh = (xs.h - 1) * stride - 2 * pad + ws.h;
    const int64_t ow = (xs.w - 1) * stride - 2 * pad + ws.w;
    if (oh <= 0 || ow <= 0) {
        throw ShapeError("conv_transpose2d: non-positive output size for input " + xs.str());
    }

    const int64_t patch = oc * ws.h * ws.w;
    const int64_t span = xs.h * xs.w;  // input grid plays the conv-output role
    const int64_t in_plane = xs.c * span;
    const int64_t out_plane = oc * oh * ow;
    auto out = zeros<T>({xs.n, oc, oh, ow});

    parallel_for(xs.n, [&](int64_t n) {
        std::vector<T> cols(static_cast<std::size_t>(patch * span));
        // cols = w^T * x_n, then scatter back onto the upsampled grid
        gemm_tn(patch, span, xs.c, w->data.data(), x->data.data() + n * in_plane, cols.data());
        T* out_n = out->data.data() + n * out_plane;
        col2im_add(cols.data(), oc, oh, ow, ws.h, ws.w, stride, pad, 1, xs.h, xs.w, out_n);
        if (b) detail::add_bias(out_n, b->data.data(), oc, oh * ow);
    });

    out->requires_grad = x->requires_grad || w->requires_grad || (b && b->requires_grad);
    if (tape.recording() && out->requires_grad) {
        tape.record("conv_transpose2d", [x, w, b, out, stride, pad, oh, ow]() {
            if (!out->has_grad()) return;
            const Shape xs = x->shape;
            const Shape ws = w->shape;
            const int64_t oc = ws.c;
            const int64_t patch = oc * ws.h * ws.w;
            const int64_t span = xs.h * xs.w;
            const int64_t in_plane = xs.c * span;
            const int64_t out_plane = oc * oh * ow;
            const bool need_gx = x->requires_grad;
            const bool need_gw = w->requires_grad;
            if (need_gx) x->ensure_grad();
            if (need_gw) w->ensure_grad();
            std::vector<std::vector<T>> w_parts(need_gw ? xs.n : 0);

            parallel_for(xs.n, [&](int64_t n) {
                std::vector<T> cols(static_cast<std::size_t>(patch * span));
                im2col(out->grad.data() + n * out_plane, oc, oh, ow, ws.h, ws.w, stride, pad, 1,
                       xs.h, xs.w, cols.data());
                if (need_gx) {
                    gemm_nn(xs.c, span, patch, w->data.data(), cols.data(),
                            x->grad.data() + n * in_plane, T(1));
                }
                if (need_gw) {
                    w_parts[n].resize(static_cast<std::size_t>(xs.c * patch));
                    gemm_nt(xs.c, patch, span, x->data.data() + n * in_plane, cols.data(),
                            w_parts[n].data());
                }
            });
            if (need_gw) {
                for (int64_t n = 0; n < xs.n; ++n) {
                    for (int64_t i = 0; i < xs.c * patch; ++i) w->grad[i] += w_parts[n][i];
                }
            }
            if (b && b->requires_grad) {
                b->ensure_grad();
                for (int64_t n = 0; n < xs.n; ++n) {
                    const T* gy_n = out->grad.data() + n * out_plane;
                    for (int64_t o = 0; o < oc; ++o) {
                        T acc = 0;
                        const T* row = gy_n + o * oh * ow;
                        for (int64_t i = 0; i < oh * ow; ++i) acc += row[i];
                        b->grad[o] += acc;
                    }
                }
            }
        });
    }
    return out;
}

/// Per-channel 3x3-style convolution with weights (c, 1, kh, kw).
template <typename T>
TensorPtr<T> depthwise_conv2d(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& w,
                              const std::type_identity_t<TensorPtr<T>>& b = nullptr, int64_t stride = 1, int64_t pad = 0) {
    const Shape xs = x->shape;
    const Shape ws = w->shape;
    if (stride < 1 || pad < 0) throw ShapeError("depthwise_conv2d: stride must be >= 1 and pad >= 0");
    if (ws.n != xs.c || ws.c != 1) {
        throw ShapeError("depthwise_conv2d: weight shape " + ws.str() + " expected (" +
                         std::to_string(xs.c) + ",1,kh,kw)");
    }
    detail::check_bias(b, xs.c, "depthwise_conv2d");
    const int64_t oh = (xs.h + 2 * pad - ws.h) / stride + 1;
    const int64_t ow = (xs.w + 2 * pad - ws.w) / stride + 1;
    if (oh <= 0 || ow <= 0) throw ShapeError("depthwise_conv2d: non-positive output size");

    auto out = zeros<T>({xs.n, xs.c, oh, ow});
    parallel_for(xs.n * xs.c, [&](int64_t plane) {
        const int64_t ci = plane % xs.c;
        const T* src = x->data.data() + plane * xs.h * xs.w;
        const T* ker = w->data.data() + ci * ws.h * ws.w;
        const T bias = b ? b->data[ci] : T(0);
        T* dst = out->data.data() + plane * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
                T acc = bias;
                for (int64_t ky = 0; ky < ws.h; ++ky) {
                    const int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= xs.h) continue;
                    for (int64_t kx = 0; kx < ws.w; ++kx) {
                        const int64_t ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < xs.w) acc += ker[ky * ws.w + kx] * src[iy * xs.w + ix];
                    }
                }
                dst[oy * ow + ox] = acc;
            }
        }
    });

    out->requires_grad = x->requires_grad || w->requires_grad || (b && b->requires_grad);
    if (tape.recording() && out->requires_grad) {
        tape.record("depthwise_conv2d", [x, w, b, out, stride, pad, oh, ow]() {
            if (!out->has_grad()) return;
            const Shape xs = x->shape;
            const Shape ws = w->shape;
            if (x->requires_grad) x->ensure_grad();
            if (w->requires_grad) w->ensure_grad();
            if (b && b->requires_grad) b->ensure_grad();
            // serial over batch: weight/bias gradients reduce across planes
            for (int64_t n = 0; n < xs.n; ++n) {
                for (int64_t ci = 0; ci < xs.c; ++ci) {
                    const int64_t plane = n * xs.c + ci;
                    const T* src = x->data.data() + plane * xs.h * xs.w;
                    const T* ker = w->data.data() + ci * ws.h * ws.w;
                    const T* gy = out->grad.data() + plane * oh * ow;
                    for (int64_t oy = 0; oy < oh; ++oy) {
                        for (int64_t ox = 0; ox < ow; ++ox) {
                            const T g = gy[oy * ow + ox];
                            if (b && b->requires_grad) b->grad[ci] += g;
                            for (int64_t ky = 0; ky < ws.h; ++ky) {
                                const int64_t iy = oy * stride - pad + ky;
                                if (iy < 0 || iy >= xs.h) continue;
                                for (int64_t kx = 0; kx < ws.w; ++kx) {
                                    const int64_t ix = ox * stride - pad + kx;
                                    if (ix < 0 || ix >= xs.w) continue;
                                    if (w->requires_grad) {
                                        w->grad[ci * ws.h * ws.w + ky * ws.w + kx] +=
                                            g * src[iy * xs.w + ix];
                                    }
                                    if (x->requires_grad) {
                                        x->grad[plane * xs.h * xs.w + iy * xs.w + ix] +=
                                            g * ker[ky * ws.w + kx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

/// Elementwise relu / sigmoid / prelu. prelu takes one learnable slope per
/// channel, shaped (1, c, 1, 1).
template <typename T>
TensorPtr<T> activation(Tape<T>& tape, const TensorPtr<T>& x, ActKind kind,
                        const std::type_identity_t<TensorPtr<T>>& slope = nullptr) {
    const Shape xs = x->shape;
    if (kind == ActKind::kPrelu) {
        if (!slope) throw ConfigError("prelu requires a slope parameter");
        if (!(slope->shape == Shape{1, xs.c, 1, 1})) {
            throw ShapeError("prelu: slope shape " + slope->shape.str() + " expected (1," +
                             std::to_string(xs.c) + ",1,1)");
        }
    }
    auto out = zeros<T>(xs);
    const int64_t plane = xs.h * xs.w;
    parallel_for(xs.n * xs.c, [&](int64_t p) {
        const int64_t ci = p % xs.c;
        const T* src = x->data.data() + p * plane;
        T* dst = out->data.data() + p * plane;
        switch (kind) {
            case ActKind::kRelu:
                for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
                break;
            case ActKind::kSigmoid:
                for (int64_t i = 0; i < plane; ++i) dst[i] = T(1) / (T(1) + std::exp(-src[i]));
                break;
            case ActKind::kPrelu: {
                const T a = slope->data[ci];
                for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] >= T(0) ? src[i] : a * src[i];
                break;
            }
        }
    });

    out->requires_grad = x->requires_grad || (slope && slope->requires_grad);
    if (tape.recording() && out->requires_grad) {
        tape.record("activation", [x, out, kind, slope]() {
            if (!out->has_grad()) return;
            const Shape xs = x->shape;
            const int64_t plane = xs.h * xs.w;
            if (x->requires_grad) x->ensure_grad();
            if (slope && slope->requires_grad) slope->ensure_grad();
            for (int64_t p = 0; p < xs.n * xs.c; ++p) {
                const int64_t ci = p % xs.c;
                const T* src = x->data.data() + p * plane;
                const T* y = out->data.data() + p * plane;
                const T* g = out->grad.data() + p * plane;
                switch (kind) {
                    case ActKind::kRelu:
                        if (x->requires_grad) {
                            T* gx = x->grad.data() + p * plane;
                            for (int64_t i = 0; i < plane; ++i) {
                                if (src[i] > T(0)) gx[i] += g[i];
                            }
                        }
                        break;
                    case ActKind::kSigmoid:
                        if (x->requires_grad) {
                            T* gx = x->grad.data() + p * plane;
                            for (int64_t i = 0; i < plane; ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
                        }
                        break;
                    case ActKind::kPrelu: {
                        const T a = slope->data[ci];
                        T* gx = x->requires_grad ? x->grad.data() + p * plane : nullptr;
                        T slope_acc = 0;
                        for (int64_t i = 0; i < plane; ++i) {
                            if (src[i] >= T(0)) {
                                if (gx) gx[i] += g[i];
                            } else {
                                if (gx) gx[i] += a * g[i];
                                slope_acc += g[i] * src[i];
                            }
                        }
                        if (slope->requires_grad) slope->grad[ci] += slope_acc;
                        break;
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> relu(Tape<T>& tape, const TensorPtr<T>& x) {
    return activation(tape, x, ActKind::kRelu);
}
template <typename T>
TensorPtr<T> sigmoid(Tape<T>& tape, const TensorPtr<T>& x) {
    return activation(tape, x, ActKind::kSigmoid);
}
template <typename T>
TensorPtr<T> prelu(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& slope) {
    return activation(tape, x, ActKind::kPrelu, slope);
}

/// a (+|-|*) b where every dimension of b either matches a or is 1
/// (broadcast). The result has a's shape.
template <typename T>
TensorPtr<T> elementwise(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b, EwKind kind) {
    const Shape as = a->shape;
    const Shape bs = b->shape;
    const bool ok = (bs.n == as.n || bs.n == 1) && (bs.c == as.c || bs.c == 1) &&
                    (bs.h == as.h || bs.h == 1) && (bs.w == as.w || bs.w == 1);
    if (!ok) {
        throw ShapeError("elementwise: " + bs.str() + " does not broadcast over " + as.str());
    }
    const int64_t bsn = bs.n == 1 ? 0 : bs.c * bs.h * bs.w;
    const int64_t bsc = bs.c == 1 ? 0 : bs.h * bs.w;
    const int64_t bsh = bs.h == 1 ? 0 : bs.w;
    const int64_t bsw = bs.w == 1 ? 0 : 1;

    auto out = zeros<T>(as);
    parallel_for(as.n, [&](int64_t n) {
        for (int64_t c = 0; c < as.c; ++c) {
            for (int64_t y = 0; y < as.h; ++y) {
                const int64_t ai = ((n * as.c + c) * as.h + y) * as.w;
                const int64_t bi = n * bsn + c * bsc + y * bsh;
                for (int64_t x = 0; x < as.w; ++x) {
                    const T av = a->data[ai + x];
                    const T bv = b->data[bi + x * bsw];
                    T r;
                    switch (kind) {
                        case EwKind::kAdd: r = av + bv; break;
                        case EwKind::kSub: r = av - bv; break;
                        default: r = av * bv; break;
                    }
                    out->data[ai + x] = r;
                }
            }
        }
    });

    out->requires_grad = a->requires_grad || b->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("elementwise", [a, b, out, kind, bsn, bsc, bsh, bsw]() {
            if (!out->has_grad()) return;
            const Shape as = a->shape;
            if (a->requires_grad) a->ensure_grad();
            if (b->requires_grad) b->ensure_grad();
            // batch-parallel only when b is not broadcast along n, so the
            // b-gradient reduction stays in a fixed order
            auto per_batch = [&](int64_t n) {
                for (int64_t c = 0; c < as.c; ++c) {
                    for (int64_t y = 0; y < as.h; ++y) {
                        const int64_t ai = ((n * as.c + c) * as.h + y) * as.w;
                        const int64_t bi = n * bsn + c * bsc + y * bsh;
                        for (int64_t x = 0; x < as.w; ++x) {
                            const T g = out->grad[ai + x];
                            switch (kind) {
                                case EwKind::kAdd:
                                    if (a->requires_grad) a->grad[ai + x] += g;
                                    if (b->requires_grad) b->grad[bi + x * bsw] += g;
                                    break;
                                case EwKind::kSub:
                                    if (a->requires_grad) a->grad[ai + x] += g;
                                    if (b->requires_grad) b->grad[bi + x * bsw] -= g;
                                    break;
                                default:
                                    if (a->requires_grad) a->grad[ai + x] += g * b->data[bi + x * bsw];
                                    if (b->requires_grad) b->grad[bi + x * bsw] += g * a->data[ai + x];
                                    break;
                            }
                        }
                    }
                }
            };
            if (!b->requires_grad || bsn != 0) {
                parallel_for(as.n, per_batch);
            } else {
                for (int64_t n = 0; n < as.n; ++n) per_batch(n);
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> add(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    return elementwise(tape, a, b, EwKind::kAdd);
}
template <typename T>
TensorPtr<T> sub(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    return elementwise(tape, a, b, EwKind::kSub);
}
template <typename T>
TensorPtr<T> mul(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    return elementwise(tape, a, b, EwKind::kMul);
}

/// Concatenates along the channel axis; all inputs share n, h, w.
template <typename T>
TensorPtr<T> concat_channels(Tape<T>& tape, const std::vector<TensorPtr<T>>& xs) {
    if (xs.empty()) throw UsageError("concat_channels: no inputs");
    const Shape first = xs[0]->shape;
    int64_t total_c = 0;
    bool rg = false;
    for (const auto& x : xs) {
        const Shape s = x->shape;
        if (s.n != first.n || s.h != first.h || s.w != first.w) {
            throw ShapeError("concat_channels: " + s.str() + " does not match " + first.str());
        }
        total_c += s.c;
        rg = rg || x->requires_grad;
    }
    auto out = zeros<T>({first.n, total_c, first.h, first.w});
    const int64_t plane = first.h * first.w;
    parallel_for(first.n, [&](int64_t n) {
        int64_t co = 0;
        for (const auto& x : xs) {
            const int64_t xc = x->shape.c;
            std::copy_n(x->data.data() + n * xc * plane, xc * plane,
                        out->data.data() + (n * total_c + co) * plane);
            co += xc;
        }
    });

    out->requires_grad = rg;
    if (tape.recording() && rg) {
        tape.record("concat_channels", [xs, out, plane, total_c]() {
            if (!out->has_grad()) return;
            const int64_t n_count = out->shape.n;
            for (const auto& x : xs) {
                if (x->requires_grad) x->ensure_grad();
            }
            parallel_for(n_count, [&](int64_t n) {
                int64_t co = 0;
                for (const auto& x : xs) {
                    const int64_t xc = x->shape.c;
                    if (x->requires_grad) {
                        const T* g = out->grad.data() + (n * total_c + co) * plane;
                        T* gx = x->grad.data() + n * xc * plane;
                        for (int64_t i = 0; i < xc * plane; ++i) gx[i] += g[i];
                    }
                    co += xc;
                }
            });
        });
    }
    return out;
}

/// Copies channels [c0, c1) into a new tensor.
template <typename T>
TensorPtr<T> channel_slice(Tape<T>& tape, const TensorPtr<T>& x, int64_t c0, int64_t c1) {
    const Shape xs = x->shape;
    if (c0 < 0 || c1 > xs.c || c0 >= c1) {
        throw ShapeError("channel_slice: [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") out of range for " + xs.str());
    }
    const int64_t plane = xs.h * xs.w;
    const int64_t cc = c1 - c0;
    auto out = zeros<T>({xs.n, cc, xs.h, xs.w});
    for (int64_t n = 0; n < xs.n; ++n) {
        std::copy_n(x->data.data() + (n * xs.c + c0) * plane, cc * plane,
                    out->data.data() + n * cc * plane);
    }
    out->requires_grad = x->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("channel_slice", [x, out, c0, cc, plane]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            const Shape xs = x->shape;
            for (int64_t n = 0; n < xs.n; ++n) {
                const T* g = out->grad.data() + n * cc * plane;
                T* gx = x->grad.data() + (n * xs.c + c0) * plane;
                for (int64_t i = 0; i < cc * plane; ++i) gx[i] += g[i];
            }
        });
    }
    return out;
}

/// Reduces the channel axis to a single map: per-pixel max (gradient routed
/// to the lowest winning channel index) or mean.
template <typename T>
TensorPtr<T> channel_reduce(Tape<T>& tape, const TensorPtr<T>& x, ReduceKind kind) {
    const Shape xs = x->shape;
    if (xs.c < 1) throw ShapeError("channel_reduce: need at least one channel");
    auto out = zeros<T>({xs.n, 1, xs.h, xs.w});
    const int64_t plane = xs.h * xs.w;
    auto argmax = std::make_shared<std::vector<std::int32_t>>();
    if (kind == ReduceKind::kMax) argmax->assign(static_cast<std::size_t>(xs.n * plane), 0);

    parallel_for(xs.n, [&](int64_t n) {
        const T* src = x->data.data() + n * xs.c * plane;
        T* dst = out->data.data() + n * plane;
        for (int64_t i = 0; i < plane; ++i) {
            if (kind == ReduceKind::kMax) {
                T best = src[i];
                std::int32_t best_c = 0;
                for (int64_t c = 1; c < xs.c; ++c) {
                    const T v = src[c * plane + i];
                    if (v > best) {
                        best = v;
                        best_c = static_cast<std::int32_t>(c);
                    }
                }
                dst[i] = best;
                (*argmax)[n * plane + i] = best_c;
            } else {
                T acc = 0;
                for (int64_t c = 0; c < xs.c; ++c) acc += src[c * plane + i];
                dst[i] = acc / static_cast<T>(xs.c);
            }
        }
    });

    out->requires_grad = x->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("channel_reduce", [x, out, kind, argmax, plane]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            const Shape xs = x->shape;
            parallel_for(xs.n, [&](int64_t n) {
                const T* g = out->grad.data() + n * plane;
                T* gx = x->grad.data() + n * xs.c * plane;
                if (kind == ReduceKind::kMax) {
                    for (int64_t i = 0; i < plane; ++i) {
                        gx[(*argmax)[n * plane + i] * plane + i] += g[i];
                    }
                } else {
                    const T inv = T(1) / static_cast<T>(xs.c);
                    for (int64_t c = 0; c < xs.c; ++c) {
                        for (int64_t i = 0; i < plane; ++i) gx[c * plane + i] += g[i] * inv;
                    }
                }
            });
        });
    }
    return out;
}

/// Sub-pixel rearrangement (n, c, h, w) -> (n, c/r^2, h*r, w*r).
template <typename T>
TensorPtr<T> pixel_shuffle(Tape<T>& tape, const TensorPtr<T>& x, int64_t r) {
    const Shape xs = x->shape;
    if (r < 1 || xs.c % (r * r) != 0) {
        throw ShapeError("pixel_shuffle: channels " + std::to_string(xs.c) +
                         " not divisible by r^2 = " + std::to_string(r * r));
    }
    const int64_t oc = xs.c / (r * r);
    auto out = zeros<T>({xs.n, oc, xs.h * r, xs.w * r});
    parallel_for(xs.n, [&](int64_t n) {
        for (int64_t co = 0; co < oc; ++co) {
            for (int64_t dy = 0; dy < r; ++dy) {
                for (int64_t dx = 0; dx < r; ++dx) {
                    const int64_t ci = co * r * r + dy * r + dx;
                    for (int64_t y = 0; y < xs.h; ++y) {
                        const T* src = x->data.data() + ((n * xs.c + ci) * xs.h + y) * xs.w;
                        T* dst = out->data.data() +
                                 ((n * oc + co) * xs.h * r + y * r + dy) * xs.w * r + dx;
                        for (int64_t xw = 0; xw < xs.w; ++xw) dst[xw * r] = src[xw];
                    }
                }
            }
        }
    });
    out->requires_grad = x->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("pixel_shuffle", [x, out, r, oc]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            const Shape xs = x->shape;
            parallel_for(xs.n, [&](int64_t n) {
                for (int64_t co = 0; co < oc; ++co) {
                    for (int64_t dy = 0; dy < r; ++dy) {
                        for (int64_t dx = 0; dx < r; ++dx) {
                            const int64_t ci = co * r * r + dy * r + dx;
                            for (int64_t y = 0; y < xs.h; ++y) {
                                T* gx = x->grad.data() + ((n * xs.c + ci) * xs.h + y) * xs.w;
                                const T* g = out->grad.data() +
                                             ((n * oc + co) * xs.h * r + y * r + dy) * xs.w * r + dx;
                                for (int64_t xw = 0; xw < xs.w; ++xw) gx[xw] += g[xw * r];
                            }
                        }
                    }
                }
            });
        });
    }
    return out;
}

/// Exact inverse of pixel_shuffle: (n, c, h, w) -> (n, c*r^2, h/r, w/r).
template <typename T>
TensorPtr<T> pixel_unshuffle(Tape<T>& tape, const TensorPtr<T>& x, int64_t r) {
    const Shape xs = x->shape;
    if (r < 1 || xs.h % r != 0 || xs.w % r != 0) {
        throw ShapeError("pixel_unshuffle: spatial size " + xs.str() + " not divisible by r = " +
                         std::to_string(r));
    }
    const int64_t oc = xs.c * r * r;
    const int64_t oh = xs.h / r;
    const int64_t ow = xs.w / r;
    auto out = zeros<T>({xs.n, oc, oh, ow});
    parallel_for(xs.n, [&](int64_t n) {
        for (int64_t ci = 0; ci < xs.c; ++ci) {
            for (int64_t dy = 0; dy < r; ++dy) {
                for (int64_t dx = 0; dx < r; ++dx) {
                    const int64_t co = ci * r * r + dy * r + dx;
                    for (int64_t y = 0; y < oh; ++y) {
                        const T* src = x->data.data() +
                                       ((n * xs.c + ci) * xs.h + y * r + dy) * xs.w + dx;
                        T* dst = out->data.data() + ((n * oc + co) * oh + y) * ow;
                        for (int64_t xw = 0; xw < ow; ++xw) dst[xw] = src[xw * r];
                    }
                }
            }
        }
    });
    out->requires_grad = x->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("pixel_unshuffle", [x, out, r, oc, oh, ow]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            const Shape xs = x->shape;
            parallel_for(xs.n, [&](int64_t n) {
                for (int64_t ci = 0; ci < xs.c; ++ci) {
                    for (int64_t dy = 0; dy < r; ++dy) {
                        for (int64_t dx = 0; dx < r; ++dx) {
                            const int64_t co = ci * r * r + dy * r + dx;
                            for (int64_t y = 0; y < oh; ++y) {
                                T* gx = x->grad.data() +
                                        ((n * xs.c + ci) * xs.h + y * r + dy) * xs.w + dx;
                                const T* g = out->grad.data() + ((n * oc + co) * oh + y) * ow;
                                for (int64_t xw = 0; xw < ow; ++xw) gx[xw * r] += g[xw];
                            }
                        }
                    }
                }
            });
        });
    }
    return out;
}

/// Bilinear resampling on the align-corners-false grid.
template <typename T>
TensorPtr<T> resize_bilinear(Tape<T>& tape, const TensorPtr<T>& x, int64_t out_h, int64_t out_w) {
    const Shape xs = x->shape;
    if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: output dims must be >= 1");
    auto out = zeros<T>({xs.n, xs.c, out_h, out_w});

    // per-axis taps: low index + fractional weight, edges clamped
    struct Tap {
        int64_t lo, hi;
        T t;
    };
    auto make_taps = [](int64_t in, int64_t outn) {
        std::vector<Tap> taps(static_cast<std::size_t>(outn));
        const double scale = static_cast<double>(in) / static_cast<double>(outn);
        for (int64_t o = 0; o < outn; ++o) {
            double s = (static_cast<double>(o) + 0.5) * scale - 0.5;
            if (s < 0) s = 0;
            int64_t lo = static_cast<int64_t>(s);
            if (lo > in - 1) lo = in - 1;
            const int64_t hi = lo + 1 > in - 1 ? in - 1 : lo + 1;
            taps[o] = Tap{lo, hi, static_cast<T>(s - static_cast<double>(lo))};
        }
        return taps;
    };
    auto ytaps = std::make_shared<std::vector<Tap>>(make_taps(xs.h, out_h));
    auto xtaps = std::make_shared<std::vector<Tap>>(make_taps(xs.w, out_w));

    parallel_for(xs.n * xs.c, [&](int64_t p) {
        const T* src = x->data.data() + p * xs.h * xs.w;
        T* dst = out->data.data() + p * out_h * out_w;
        for (int64_t oy = 0; oy < out_h; ++oy) {
            const Tap& ty = (*ytaps)[oy];
            for (int64_t ox = 0; ox < out_w; ++ox) {
                const Tap& tx = (*xtaps)[ox];
                const T v00 = src[ty.lo * xs.w + tx.lo];
                const T v01 = src[ty.lo * xs.w + tx.hi];
                const T v10 = src[ty.hi * xs.w + tx.lo];
                const T v11 = src[ty.hi * xs.w + tx.hi];
                const T top = v00 + tx.t * (v01 - v00);
                const T bot = v10 + tx.t * (v11 - v10);
                dst[oy * out_w + ox] = top + ty.t * (bot - top);
            }
        }
    });

    out->requires_grad = x->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("resize_bilinear", [x, out, ytaps, xtaps, out_h, out_w]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            const Shape xs = x->shape;
            parallel_for(xs.n * xs.c, [&](int64_t p) {
                T* gx = x->grad.data() + p * xs.h * xs.w;
                const T* g = out->grad.data() + p * out_h * out_w;
                for (int64_t oy = 0; oy < out_h; ++oy) {
                    const Tap& ty = (*ytaps)[oy];
                    for (int64_t ox = 0; ox < out_w; ++ox) {
                        const Tap& tx = (*xtaps)[ox];
                        const T gv = g[oy * out_w + ox];
                        const T wy1 = ty.t, wy0 = T(1) - ty.t;
                        const T wx1 = tx.t, wx0 = T(1) - tx.t;
                        gx[ty.lo * xs.w + tx.lo] += gv * wy0 * wx0;
                        gx[ty.lo * xs.w + tx.hi] += gv * wy0 * wx1;
                        gx[ty.hi * xs.w + tx.lo] += gv * wy1 * wx0;
                        gx[ty.hi * xs.w + tx.hi] += gv * wy1 * wx1;
                    }
                }
            });
        });
    }
    return out;
}

/// Mean absolute difference over all elements, as a (1,1,1,1) tensor.
/// d|u|/du at u = 0 is taken as 0.
template <typename T>
TensorPtr<T> l1_loss(Tape<T>& tape, const TensorPtr<T>& pred, const TensorPtr<T>& target) {
    if (!(pred->shape == target->shape)) {
        throw ShapeError("l1_loss: shape mismatch " + pred->shape.str() + " vs " +
                         target->shape.str());
    }
    const int64_t count = pred->numel();
    if (count == 0) throw ShapeError("l1_loss: empty tensors");
    double acc = 0.0;
    for (int64_t i = 0; i < count; ++i) {
        acc += std::abs(static_cast<double>(pred->data[i]) - static_cast<double>(target->data[i]));
    }
    auto out = full<T>({1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));

    out->requires_grad = pred->requires_grad || target->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("l1_loss", [pred, target, out, count]() {
            if (!out->has_grad()) return;
            const T scale = out->grad[0] / static_cast<T>(count);
            if (pred->requires_grad) pred->ensure_grad();
            if (target->requires_grad) target->ensure_grad();
            for (int64_t i = 0; i < count; ++i) {
                const T d = pred->data[i] - target->data[i];
                const T s = d > T(0) ? scale : (d < T(0) ? -scale : T(0));
                if (pred->requires_grad) pred->grad[i] += s;
                if (target->requires_grad) target->grad[i] -= s;
            }
        });
    }
    return out;
}

/// Sum of all elements, as a (1,1,1,1) tensor.
template <typename T>
TensorPtr<T> reduce_sum(Tape<T>& tape, const TensorPtr<T>& x) {
    double acc = 0.0;
    for (const T v : x->data) acc += static_cast<double>(v);
    auto out = full<T>({1, 1, 1, 1}, static_cast<T>(acc));
    out->requires_grad = x->requires_grad;
    if (tape.recording() && out->requires_grad) {
        tape.record("reduce_sum", [x, out]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            const T g = out->grad[0];
            for (auto& gv : x->grad) gv += g;
        });
    }
    return out;
}

}  // namespace hcg
