#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "hcg/blocks.hpp"

namespace hcg {

struct NetworkConfig {
    int scale = 8;
    int channels = 64;
    int aap_count = 4;
    bool use_lde = true;
    bool use_hag = true;
    bool use_afp = true;

    static constexpr int kLevels = 5;
    static constexpr int kHeadChannels = 4;  // channels after pixel-shuffle in the head
    static constexpr int kLdeLevels = 2;     // LDE sits on the two lowest levels

    void validate() const {
        if (scale != 4 && scale != 8 && scale != 16) {
            throw ConfigError("scale must be one of 4, 8, 16 (got " + std::to_string(scale) + ")");
        }
        if (channels < 1) throw ConfigError("channels must be >= 1");
        if (aap_count < 1) throw ConfigError("aap_count must be >= 1");
    }

    /// AFP input channels at 1-based level i, per the routing rule.
    int64_t route_channels(int level) const {
        return static_cast<int64_t>(6 - level) * channels;
    }

    bool needs_color() const { return use_lde || use_hag; }
};

template <typename T>
struct HCGNetParams {
    NetworkConfig config;
    ParamStore<T> store;

    std::vector<ConvBlockParams<T>> depth_blocks;  // 5
    std::vector<ConvBlockParams<T>> color_blocks;  // 5 when color is used
    std::vector<LDEParams<T>> lde;                 // 2 when use_lde
    std::vector<AFPParams<T>> afp;                 // 5 when use_afp
    std::vector<SimpleProjParams<T>> proj;         // 5 when !use_afp
    std::vector<HAGParams<T>> hag;                 // 5 when use_hag
    ConvParams<T> head_pre;                        // 3x3, C -> s^2 * kHeadChannels
    ConvParams<T> head_post;                       // 3x3, kHeadChannels + C -> 1
};

/// Deterministic parameter construction: same seed, same bits.
template <typename T>
HCGNetParams<T> init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    HCGNetParams<T> p;
    p.config = cfg;
    const int64_t c = cfg.channels;

    for (int i = 1; i <= NetworkConfig::kLevels; ++i) {
        p.depth_blocks.emplace_back(p.store, rng, "depth_block" + std::to_string(i),
                                    i == 1 ? 1 : c, c);
    }
    if (cfg.needs_color()) {
        for (int i = 1; i <= NetworkConfig::kLevels; ++i) {
            p.color_blocks.emplace_back(p.store, rng, "color_block" + std::to_string(i),
                                        i == 1 ? 3 : c, c);
        }
    }
    if (cfg.use_lde) {
        for (int i = 1; i <= NetworkConfig::kLdeLevels; ++i) {
            p.lde.emplace_back(p.store, rng, "lde" + std::to_string(i), c);
        }
    }
    for (int i = 1; i <= NetworkConfig::kLevels; ++i) {
        const std::string name = (cfg.use_afp ? "afp" : "proj") + std::to_string(i);
        if (cfg.use_afp) {
            p.afp.emplace_back(p.store, rng, name, cfg.route_channels(i), c, cfg.scale,
                               cfg.aap_count);
        } else {
            p.proj.emplace_back(p.store, rng, name, cfg.route_channels(i), c, cfg.scale);
        }
    }
    if (cfg.use_hag) {
        for (int i = 1; i <= NetworkConfig::kLevels; ++i) {
            p.hag.emplace_back(p.store, rng, "hag" + std::to_string(i), c);
        }
    }
    const int64_t shuffle_c =
        static_cast<int64_t>(cfg.scale) * cfg.scale * NetworkConfig::kHeadChannels;
    p.head_pre = make_conv(p.store, rng, "head_pre", shuffle_c, c, 3, 3);
    p.head_post = make_conv(p.store, rng, "head_post", 1, NetworkConfig::kHeadChannels + c, 3, 3);
    return p;
}

/// Per-level intermediates of one forward pass, with sequence stamps that
/// record the completion order of transfers and routings.
template <typename T>
struct ForwardTrace {
    std::array<TensorPtr<T>, 5> f_d, f_c, f_lde, f_in, f_afp, f_hag, f_tr;
    std::array<int, 5> route_stamp{};
    std::array<int, 5> tr_stamp{};
    int counter = 0;
};

/// Runs both backbones; depth features stay at LR, color features at HR.
template <typename T>
void extract_features(Tape<T>& tape, const TensorPtr<T>& d_lr, const TensorPtr<T>& i_hr,
                      const HCGNetParams<T>& params, const NetworkConfig& cfg,
                      ForwardTrace<T>& trace) {
    if (d_lr->shape.c != 1) {
        throw ShapeError("depth input must have 1 channel, got " + d_lr->shape.str());
    }
    if (cfg.needs_color()) {
        if (i_hr->shape.c != 3) {
            throw ShapeError("color input must have 3 channels, got " + i_hr->shape.str());
        }
        if (i_hr->shape.n != d_lr->shape.n || i_hr->shape.h != d_lr->shape.h * cfg.scale ||
            i_hr->shape.w != d_lr->shape.w * cfg.scale) {
            throw ShapeError("color " + i_hr->shape.str() + " is not " +
                             std::to_string(cfg.scale) + "x the depth grid " + d_lr->shape.str());
        }
    }
    TensorPtr<T> d = d_lr;
    for (int i = 0; i < NetworkConfig::kLevels; ++i) {
        d = conv_block_forward(tape, d, params.depth_blocks[static_cast<std::size_t>(i)]);
        trace.f_d[static_cast<std::size_t>(i)] = d;
    }
    if (cfg.needs_color()) {
        TensorPtr<T> col = i_hr;
        for (int i = 0; i < NetworkConfig::kLevels; ++i) {
            col = conv_block_forward(tape, col, params.color_blocks[static_cast<std::size_t>(i)]);
            trace.f_c[static_cast<std::size_t>(i)] = col;
        }
    }
}

/// AFP input per level: level 5 takes the depth features alone; levels 3-4
/// concatenate the transfers from all completed levels; levels 1-2 swap the
/// depth features for the LDE output (when enabled).
template <typename T>
TensorPtr<T> route_inputs(Tape<T>& tape, int level, ForwardTrace<T>& trace,
                          const NetworkConfig& cfg) {
    const auto idx = static_cast<std::size_t>(level - 1);
    TensorPtr<T> base;
    if (level <= NetworkConfig::kLdeLevels && cfg.use_lde) {
        base = trace.f_lde[idx];
        if (!base) throw UsageError("route_inputs: LDE output missing at level " +
                                    std::to_string(level));
    } else {
        base = trace.f_d[idx];
        if (!base) throw UsageError("route_inputs: depth features missing at level " +
                                    std::to_string(level));
    }
    trace.route_stamp[idx] = ++trace.counter;
    if (level == NetworkConfig::kLevels) return base;
    std::vector<TensorPtr<T>> parts{base};
    for (int k = level + 1; k <= NetworkConfig::kLevels; ++k) {
        const auto& tr = trace.f_tr[static_cast<std::size_t>(k - 1)];
        if (!tr) {
            throw UsageError("route_inputs: transfer features for level " + std::to_string(k) +
                             " not computed yet");
        }
        parts.push_back(tr);
    }
    return concat_channels(tape, parts);
}

/// F_tr^k: reconstruction features brought back to the LR grid plus the
/// backbone depth features.
template <typename T>
TensorPtr<T> transfer_features(Tape<T>& tape, int level, ForwardTrace<T>& trace) {
    const auto idx = static_cast<std::size_t>(level - 1);
    const auto& hag = trace.f_hag[idx];
    const auto& f_d = trace.f_d[idx];
    if (!hag || !f_d) throw UsageError("transfer_features: level not reconstructed yet");
    auto down = resize_bilinear(tape, hag, f_d->shape.h, f_d->shape.w);
    auto tr = add(tape, down, f_d);
    trace.f_tr[idx] = tr;
    trace.tr_stamp[idx] = ++trace.counter;
    return tr;
}

/// Full reconstruction pass: levels 5 down to 1, then the pixel-shuffle head.
template <typename T>
TensorPtr<T> forward(Tape<T>& tape, const TensorPtr<T>& d_lr, const TensorPtr<T>& i_hr,
                     const HCGNetParams<T>& params, const NetworkConfig& cfg,
                     ForwardTrace<T>* trace_out = nullptr) {
    cfg.validate();
    ForwardTrace<T> local;
    ForwardTrace<T>& trace = trace_out ? *trace_out : local;

    extract_features(tape, d_lr, i_hr, params, cfg, trace);
    if (cfg.use_lde) {
        for (int i = 1; i <= NetworkConfig::kLdeLevels; ++i) {
            const auto idx = static_cast<std::size_t>(i - 1);
            trace.f_lde[idx] = lde_forward(tape, trace.f_c[idx], trace.f_d[idx],
                                           params.lde[idx]);
        }
    }
    const auto& f_c5 = trace.f_c[4];
    for (int level = NetworkConfig::kLevels; level >= 1; --level) {
        const auto idx = static_cast<std::size_t>(level - 1);
        auto f_in = route_inputs(tape, level, trace, cfg);
        trace.f_in[idx] = f_in;
        auto f_afp = cfg.use_afp ? afp_forward(tape, f_in, params.afp[idx])
                                 : simple_proj_forward(tape, f_in, params.proj[idx]);
        trace.f_afp[idx] = f_afp;
        trace.f_hag[idx] =
            cfg.use_hag ? hag_forward(tape, f_afp, f_c5, params.hag[idx]) : f_afp;
        if (level > 1) transfer_features(tape, level, trace);
    }

    auto pre = conv2d(tape, trace.f_d[0], params.head_pre.w, params.head_pre.b, {1, 1, 1});
    auto shuffled = pixel_shuffle(tape, pre, cfg.scale);
    auto cat = concat_channels(tape, {shuffled, trace.f_hag[0]});
    return conv2d(tape, cat, params.head_post.w, params.head_post.b, {1, 1, 1});
}

template <typename T>
TensorPtr<T> forward(Tape<T>& tape, const TensorPtr<T>& d_lr, const TensorPtr<T>& i_hr,
                     const HCGNetParams<T>& params) {
    return forward(tape, d_lr, i_hr, params, params.config);
}

/// L1 training objective.
template <typename T>
TensorPtr<T> loss(Tape<T>& tape, const TensorPtr<T>& d_sr, const TensorPtr<T>& d_hr) {
    return l1_loss(tape, d_sr, d_hr);
}

/// Human-readable parameter inventory with the total count.
template <typename T>
std::string describe(const HCGNetParams<T>& params) {
    std::ostringstream out;
    out << "scale=" << params.config.scale << " channels=" << params.config.channels
        << " aap_count=" << params.config.aap_count << " lde=" << params.config.use_lde
        << " hag=" << params.config.use_hag << " afp=" << params.config.use_afp << "\n";
    for (const auto& [name, t] : params.store) {
        out << "  " << name << " " << t->shape.str() << " = " << t->numel() << "\n";
    }
    out << "total parameters: " << params.store.total_params() << "\n";
    return out.str();
}

}  // namespace hcg
