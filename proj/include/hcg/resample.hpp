#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hcg/image.hpp"

namespace hcg {

/// Keys cubic convolution kernel with a = -0.5 (reproduces constants and
/// linear ramps exactly away from clamped edges).
inline double keys_cubic(double t) {
    const double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return a * (((t - 5.0) * t + 8.0) * t - 4.0);
    return 0.0;
}

namespace detail {

struct CubicTap {
    int idx[4];
    double w[4];
};

/// Per-output-coordinate taps on the align-corners-false grid, edge-clamped.
inline std::vector<CubicTap> cubic_taps(int in, int out) {
    std::vector<CubicTap> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int o = 0; o < out; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        CubicTap tap;
        for (int k = 0; k < 4; ++k) {
            const int raw = static_cast<int>(base) + k - 1;
            tap.idx[k] = std::clamp(raw, 0, in - 1);
            tap.w[k] = keys_cubic(src - (base + k - 1));
        }
        taps[static_cast<std::size_t>(o)] = tap;
    }
    return taps;
}

/// Separable bicubic over an interleaved buffer with `channels` samples per
/// pixel: horizontal pass, then vertical.
inline void bicubic_interleaved(const double* src, int in_w, int in_h, double* dst, int out_w,
                                int out_h, int channels) {
    const auto tx = cubic_taps(in_w, out_w);
    const auto ty = cubic_taps(in_h, out_h);
    std::vector<double> mid(static_cast<std::size_t>(out_w) * in_h * channels);
    for (int y = 0; y < in_h; ++y) {
        const double* row = src + static_cast<std::size_t>(y) * in_w * channels;
        double* mrow = mid.data() + static_cast<std::size_t>(y) * out_w * channels;
        for (int x = 0; x < out_w; ++x) {
            const CubicTap& t = tx[static_cast<std::size_t>(x)];
            for (int c = 0; c < channels; ++c) {
                mrow[x * channels + c] = t.w[0] * row[t.idx[0] * channels + c] +
                                         t.w[1] * row[t.idx[1] * channels + c] +
                                         t.w[2] * row[t.idx[2] * channels + c] +
                                         t.w[3] * row[t.idx[3] * channels + c];
            }
        }
    }
    for (int y = 0; y < out_h; ++y) {
        const CubicTap& t = ty[static_cast<std::size_t>(y)];
        const double* r0 = mid.data() + static_cast<std::size_t>(t.idx[0]) * out_w * channels;
        const double* r1 = mid.data() + static_cast<std::size_t>(t.idx[1]) * out_w * channels;
        const double* r2 = mid.data() + static_cast<std::size_t>(t.idx[2]) * out_w * channels;
        const double* r3 = mid.data() + static_cast<std::size_t>(t.idx[3]) * out_w * channels;
        double* drow = dst + static_cast<std::size_t>(y) * out_w * channels;
        for (int i = 0; i < out_w * channels; ++i) {
            drow[i] = t.w[0] * r0[i] + t.w[1] * r1[i] + t.w[2] * r2[i] + t.w[3] * r3[i];
        }
    }
}

}  // namespace detail

inline DepthImage bicubic_resize(const DepthImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ShapeError("bicubic_resize: output dims must be >= 1");
    DepthImage out(out_w, out_h, img.bit_depth);
    detail::bicubic_interleaved(img.values.data(), img.width, img.height, out.values.data(), out_w,
                                out_h, 1);
    return out;
}

inline ColorImage bicubic_resize(const ColorImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ShapeError("bicubic_resize: output dims must be >= 1");
    ColorImage out(out_w, out_h, img.bit_depth);
    detail::bicubic_interleaved(img.rgb.data(), img.width, img.height, out.rgb.data(), out_w, out_h,
                                3);
    return out;
}

}  // namespace hcg
