#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hcg/ops.hpp"
#include "hcg/param_store.hpp"
#include "hcg/rng.hpp"

namespace hcg {

/// Weight/bias pair for one convolution layer.
template <typename T>
struct ConvParams {
    TensorPtr<T> w;
    TensorPtr<T> b;
};

namespace detail {

inline int64_t log2_scale(int64_t scale, const char* where) {
    if (scale < 2 || (scale & (scale - 1)) != 0) {
        throw ConfigError(std::string(where) + ": scale " + std::to_string(scale) +
                          " is not a power of two >= 2");
    }
    int64_t stages = 0;
    for (int64_t s = scale; s > 1; s /= 2) ++stages;
    return stages;
}

}  // namespace detail

/// Gaussian init with std sqrt(2 / fan_in), zero bias.
template <typename T>
ConvParams<T> make_conv(ParamStore<T>& store, Rng& rng, const std::string& name, int64_t out_c,
                        int64_t in_c, int64_t kh, int64_t kw) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_c * kh * kw));
    ConvParams<T> p;
    p.w = store.add(name + ".weight", randn<T>({out_c, in_c, kh, kw}, rng, stddev));
    p.b = store.add(name + ".bias", zeros<T>({1, out_c, 1, 1}));
    return p;
}

/// Transposed-conv weights are (in_c, out_c, k, k); fan_in = in_c * k * k.
template <typename T>
ConvParams<T> make_deconv(ParamStore<T>& store, Rng& rng, const std::string& name, int64_t in_c,
                          int64_t out_c, int64_t k) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_c * k * k));
    ConvParams<T> p;
    p.w = store.add(name + ".weight", randn<T>({in_c, out_c, k, k}, rng, stddev));
    p.b = store.add(name + ".bias", zeros<T>({1, out_c, 1, 1}));
    return p;
}

template <typename T>
ConvParams<T> make_depthwise(ParamStore<T>& store, Rng& rng, const std::string& name, int64_t c,
                             int64_t k) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(k * k));
    ConvParams<T> p;
    p.w = store.add(name + ".weight", randn<T>({c, 1, k, k}, rng, stddev));
    p.b = store.add(name + ".bias", zeros<T>({1, c, 1, 1}));
    return p;
}

template <typename T>
TensorPtr<T> make_prelu_slope(ParamStore<T>& store, const std::string& name, int64_t c) {
    return store.add(name, full<T>({1, c, 1, 1}, T(0.25)));
}

// ---- backbone convolution block --------------------------------------------

/// Two 3x3 convolutions (relu after each) followed by a 1x1 projection;
/// spatial size is preserved.
template <typename T>
struct ConvBlockParams {
    ConvParams<T> conv1, conv2, proj;

    ConvBlockParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t in_c,
                    int64_t width) {
        conv1 = make_conv(store, rng, prefix + ".conv1", width, in_c, 3, 3);
        conv2 = make_conv(store, rng, prefix + ".conv2", width, width, 3, 3);
        proj = make_conv(store, rng, prefix + ".proj", width, width, 1, 1);
    }
};

template <typename T>
TensorPtr<T> conv_block_forward(Tape<T>& tape, const TensorPtr<T>& x,
                                const ConvBlockParams<T>& p) {
    auto h1 = relu(tape, conv2d(tape, x, p.conv1.w, p.conv1.b, {1, 1, 1}));
    auto h2 = relu(tape, conv2d(tape, h1, p.conv2.w, p.conv2.b, {1, 1, 1}));
    return conv2d(tape, h2, p.proj.w, p.proj.b, {1, 0, 1});
}

// ---- multi-scale content enhancement ---------------------------------------

/// Densely connected dilated 3x3 convolutions (rates 1..4), 1x1 fusion over
/// the input plus all four stage outputs, then a chain of kernel-4 stride-2
/// deconvolutions up to the target scale.
template <typename T>
struct MCEParams {
    struct Stage {
        ConvParams<T> conv;
        Conv2dSpec spec;
    };
    std::array<Stage, 4> stages;
    ConvParams<T> fuse;
    std::vector<ConvParams<T>> up;
    int64_t in_channels = 0;
    int64_t width = 0;
    int64_t scale = 0;

    MCEParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t in_c,
              int64_t width_, int64_t scale_)
        : in_channels(in_c), width(width_), scale(scale_) {
        const int64_t up_stages = detail::log2_scale(scale_, "mce");
        for (int64_t m = 0; m < 4; ++m) {
            const int64_t dil = m + 1;
            stages[static_cast<std::size_t>(m)].conv =
                make_conv(store, rng, prefix + ".dil" + std::to_string(dil), width_,
                          in_c + m * width_, 3, 3);
            stages[static_cast<std::size_t>(m)].spec = Conv2dSpec{1, dil, dil};
        }
        fuse = make_conv(store, rng, prefix + ".fuse", width_, in_c + 4 * width_, 1, 1);
        for (int64_t s = 0; s < up_stages; ++s) {
            up.push_back(make_deconv(store, rng, prefix + ".up" + std::to_string(s), width_,
                                     width_, 4));
        }
    }
};

template <typename T>
TensorPtr<T> mce_forward(Tape<T>& tape, const TensorPtr<T>& f_in, const MCEParams<T>& p) {
    detail::log2_scale(p.scale, "mce_forward");
    if (f_in->shape.c != p.in_channels) {
        throw ShapeError("mce_forward: input has " + std::to_string(f_in->shape.c) +
                         " channels, expected " + std::to_string(p.in_channels));
    }
    std::vector<TensorPtr<T>> dense{f_in};
    for (const auto& stage : p.stages) {
        auto cat = dense.size() == 1 ? dense[0] : concat_channels(tape, dense);
        dense.push_back(conv2d(tape, cat, stage.conv.w, stage.conv.b, stage.spec));
    }
    auto fused = conv2d(tape, concat_channels(tape, dense), p.fuse.w, p.fuse.b, {1, 0, 1});
    for (const auto& d : p.up) fused = conv_transpose2d(tape, fused, d.w, d.b, 2, 1);
    return fused;
}

// ---- adaptive attention projection ------------------------------------------

/// Down/up projection produces a rough reconstruction; the relu of the
/// residual is the attention map that reweights and residually refines the
/// input: out = relu(f - up(down(f))) * f + f.
template <typename T>
struct AAPParams {
    std::vector<ConvParams<T>> down, up;

    AAPParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t width,
              int64_t scale) {
        const int64_t stages = detail::log2_scale(scale, "aap");
        for (int64_t s = 0; s < stages; ++s) {
            down.push_back(make_conv(store, rng, prefix + ".down" + std::to_string(s), width,
                                     width, 4, 4));
            up.push_back(make_deconv(store, rng, prefix + ".up" + std::to_string(s), width, width,
                                     4));
        }
    }
};

template <typename T>
TensorPtr<T> aap_forward(Tape<T>& tape, const TensorPtr<T>& f_in, const AAPParams<T>& p,
                         TensorPtr<T>* act_out = nullptr) {
    auto rough = f_in;
    for (const auto& d : p.down) {
        if (rough->shape.h % 2 != 0 || rough->shape.w % 2 != 0) {
            throw ShapeError("aap_forward: spatial size " + rough->shape.str() +
                             " not divisible by the down-projection factor");
        }
        rough = conv2d(tape, rough, d.w, d.b, {2, 1, 1});
    }
    for (const auto& u : p.up) rough = conv_transpose2d(tape, rough, u.w, u.b, 2, 1);
    auto act = relu(tape, sub(tape, f_in, rough));
    if (act_out) *act_out = act;
    return add(tape, mul(tape, act, f_in), f_in);
}

// ---- attention-based feature projection -------------------------------------

/// MCE once, J chained AAP blocks, then 1x1 fusion over the concatenated AAP
/// outputs.
template <typename T>
struct AFPParams {
    MCEParams<T> mce;
    std::vector<AAPParams<T>> aaps;
    ConvParams<T> fuse;

    AFPParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t in_c,
              int64_t width, int64_t scale, int64_t aap_count)
        : mce(store, rng, prefix + ".mce", in_c, width, scale) {
        if (aap_count < 1) throw ConfigError("afp: aap_count must be >= 1");
        for (int64_t j = 0; j < aap_count; ++j) {
            aaps.emplace_back(store, rng, prefix + ".aap" + std::to_string(j + 1), width, scale);
        }
        fuse = make_conv(store, rng, prefix + ".fuse", width, aap_count * width, 1, 1);
    }
};

template <typename T>
TensorPtr<T> afp_forward(Tape<T>& tape, const TensorPtr<T>& f_in, const AFPParams<T>& p) {
    auto cur = mce_forward(tape, f_in, p.mce);
    std::vector<TensorPtr<T>> hr_outputs;
    for (const auto& aap : p.aaps) {
        cur = aap_forward(tape, cur, aap);
        hr_outputs.push_back(cur);
    }
    return conv2d(tape, concat_channels(tape, hr_outputs), p.fuse.w, p.fuse.b, {1, 0, 1});
}

// ---- low-level detail embedding ---------------------------------------------

/// RM = 1 - sigmoid(conv1x1(Wc(f_c) - Wd(f_d))); out = RM * f_c + f_d.
/// The color features are bilinearly resized to the depth grid first; both
/// mappings are depth-wise 3x3 followed by point-wise 1x1.
template <typename T>
struct LDEParams {
    ConvParams<T> wc_dw, wc_pw, wd_dw, wd_pw, mask;

    LDEParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t width) {
        wc_dw = make_depthwise(store, rng, prefix + ".wc_dw", width, 3);
        wc_pw = make_conv(store, rng, prefix + ".wc_pw", width, width, 1, 1);
        wd_dw = make_depthwise(store, rng, prefix + ".wd_dw", width, 3);
        wd_pw = make_conv(store, rng, prefix + ".wd_pw", width, width, 1, 1);
        mask = make_conv(store, rng, prefix + ".mask", width, width, 1, 1);
    }
};

template <typename T>
TensorPtr<T> lde_forward(Tape<T>& tape, const TensorPtr<T>& f_c, const TensorPtr<T>& f_d,
                         const LDEParams<T>& p, TensorPtr<T>* rm_out = nullptr) {
    if (f_c->shape.c != f_d->shape.c) {
        throw ShapeError("lde_forward: channel mismatch " + f_c->shape.str() + " vs " +
                         f_d->shape.str());
    }
    auto fc = f_c;
    if (fc->shape.h != f_d->shape.h || fc->shape.w != f_d->shape.w) {
        fc = resize_bilinear(tape, fc, f_d->shape.h, f_d->shape.w);
    }
    auto mapped_c = conv2d(tape, depthwise_conv2d(tape, fc, p.wc_dw.w, p.wc_dw.b, 1, 1),
                           p.wc_pw.w, p.wc_pw.b, {1, 0, 1});
    auto mapped_d = conv2d(tape, depthwise_conv2d(tape, f_d, p.wd_dw.w, p.wd_dw.b, 1, 1),
                           p.wd_pw.w, p.wd_pw.b, {1, 0, 1});
    auto gate = sigmoid(
        tape, conv2d(tape, sub(tape, mapped_c, mapped_d), p.mask.w, p.mask.b, {1, 0, 1}));
    auto rm = sub(tape, full<T>(gate->shape, T(1)), gate);
    if (rm_out) *rm_out = rm;
    return add(tape, mul(tape, rm, fc), f_d);
}

// ---- high-level abstract guidance --------------------------------------------

/// Spatial attention over the top color features (channel max/mean maps mixed
/// by a 7x7 conv) reweights F_c^5; a 3x3 -> prelu -> 1x1 path over the
/// concatenation yields the semantic mask: out = SM * f_afp + f_afp.
template <typename T>
struct HAGParams {
    ConvParams<T> mix;  // 7x7, 2 -> 1
    ConvParams<T> sm1;  // 3x3, 2C -> C
    TensorPtr<T> slope;
    ConvParams<T> sm2;  // 1x1, C -> C

    HAGParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t width) {
        mix = make_conv(store, rng, prefix + ".mix", 1, 2, 7, 7);
        sm1 = make_conv(store, rng, prefix + ".sm1", width, 2 * width, 3, 3);
        slope = make_prelu_slope(store, prefix + ".slope", width);
        sm2 = make_conv(store, rng, prefix + ".sm2", width, width, 1, 1);
    }
};

template <typename T>
TensorPtr<T> hag_forward(Tape<T>& tape, const TensorPtr<T>& f_afp, const TensorPtr<T>& f_c5,
                         const HAGParams<T>& p, TensorPtr<T>* act_sl_out = nullptr,
                         TensorPtr<T>* sm_out = nullptr) {
    if (f_afp->shape.h != f_c5->shape.h || f_afp->shape.w != f_c5->shape.w) {
        throw ShapeError("hag_forward: spatial mismatch " + f_afp->shape.str() + " vs " +
                         f_c5->shape.str());
    }
    auto mx = channel_reduce(tape, f_c5, ReduceKind::kMax);
    auto av = channel_reduce(tape, f_c5, ReduceKind::kMean);
    auto act_sl = sigmoid(tape, conv2d(tape, concat_channels(tape, {mx, av}), p.mix.w, p.mix.b,
                                       {1, 3, 1}));
    auto f_e = mul(tape, f_c5, act_sl);  // 1-channel map broadcast over channels
    auto hidden = prelu(tape, conv2d(tape, concat_channels(tape, {f_afp, f_e}), p.sm1.w, p.sm1.b,
                                     {1, 1, 1}),
                        p.slope);
    auto sm = conv2d(tape, hidden, p.sm2.w, p.sm2.b, {1, 0, 1});
    if (act_sl_out) *act_sl_out = act_sl;
    if (sm_out) *sm_out = sm;
    return add(tape, mul(tape, sm, f_afp), f_afp);
}

// ---- simplified projection (ablation baseline) --------------------------------

/// Replaces AFP when it is toggled off: two plain 3x3 convolutions and a
/// single deconvolution chain.
template <typename T>
struct SimpleProjParams {
    ConvParams<T> conv1, conv2;
    std::vector<ConvParams<T>> up;

    SimpleProjParams(ParamStore<T>& store, Rng& rng, const std::string& prefix, int64_t in_c,
                     int64_t width, int64_t scale) {
        conv1 = make_conv(store, rng, prefix + ".conv1", width, in_c, 3, 3);
        conv2 = make_conv(store, rng, prefix + ".conv2", width, width, 3, 3);
        const int64_t stages = detail::log2_scale(scale, "simple_proj");
        for (int64_t s = 0; s < stages; ++s) {
            up.push_back(make_deconv(store, rng, prefix + ".up" + std::to_string(s), width, width,
                                     4));
        }
    }
};

template <typename T>
TensorPtr<T> simple_proj_forward(Tape<T>& tape, const TensorPtr<T>& f_in,
                                 const SimpleProjParams<T>& p) {
    auto h = relu(tape, conv2d(tape, f_in, p.conv1.w, p.conv1.b, {1, 1, 1}));
    h = relu(tape, conv2d(tape, h, p.conv2.w, p.conv2.b, {1, 1, 1}));
    for (const auto& u : p.up) h = conv_transpose2d(tape, h, u.w, u.b, 2, 1);
    return h;
}

}  // namespace hcg
