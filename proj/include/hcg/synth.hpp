#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hcg/image.hpp"
#include "hcg/rng.hpp"

namespace hcg {

/// Deterministic synthetic RGB-D scene recipe. Depth is piecewise constant
/// (rectangles and ellipses over a background plane, nearer objects drawn
/// last); color renders the same layout with per-object albedo plus
/// sinusoidal texture and a smooth illumination gradient, so color carries
/// both the true object boundaries and distractor texture boundaries.
struct SynthSpec {
    std::uint64_t seed = 0;
    int width = 256;
    int height = 256;
    int min_objects = 3;
    int max_objects = 8;
    double depth_min = 500.0;   // centimeters
    double depth_max = 2000.0;
    double texture_amplitude = 0.05;
    double illumination_amplitude = 0.25;
};

namespace detail {

struct SynthObject {
    bool ellipse;
    double cx, cy, rx, ry;
    double depth;
    double albedo[3];
};

/// Albedos pairwise separated by >= 0.25 in some channel, so every depth
/// boundary produces a color step that texture cannot cancel.
inline void pick_albedo(Rng& rng, std::vector<SynthObject>& objects, double* out,
                        const double* background) {
    for (int attempt = 0; attempt < 256; ++attempt) {
        double cand[3] = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
        auto far = [&](const double* other) {
            return std::max({std::abs(cand[0] - other[0]), std::abs(cand[1] - other[1]),
                             std::abs(cand[2] - other[2])}) >= 0.25;
        };
        bool ok = far(background);
        for (const auto& o : objects) ok = ok && far(o.albedo);
        if (ok) {
            std::copy(cand, cand + 3, out);
            return;
        }
    }
    // deterministic fallback on a coarse grid (rejection nearly always wins)
    const int k = static_cast<int>(objects.size()) + 1;
    out[0] = 0.1 + 0.26 * (k % 4);
    out[1] = 0.1 + 0.26 * ((k / 4) % 4);
    out[2] = 0.1 + 0.26 * ((k / 16) % 4);
}

}  // namespace detail

inline std::pair<DepthImage, ColorImage> synth_scene(const SynthSpec& spec) {
    Rng rng(spec.seed);
    DepthImage depth(spec.width, spec.height, 16);
    ColorImage color(spec.width, spec.height, 8);

    const double bg_depth = rng.uniform(spec.depth_min, spec.depth_max);
    double bg_albedo[3] = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};

    std::vector<detail::SynthObject> objects;
    const int count = static_cast<int>(rng.uniform_int(spec.min_objects, spec.max_objects));
    for (int i = 0; i < count; ++i) {
        detail::SynthObject obj;
        obj.ellipse = rng.bernoulli(0.5);
        obj.cx = rng.uniform(0.1, 0.9) * spec.width;
        obj.cy = rng.uniform(0.1, 0.9) * spec.height;
        obj.rx = rng.uniform(0.06, 0.22) * spec.width;
        obj.ry = rng.uniform(0.06, 0.22) * spec.height;
        obj.depth = rng.uniform(spec.depth_min, spec.depth_max);
        detail::pick_albedo(rng, objects, obj.albedo, bg_albedo);
        objects.push_back(obj);
    }
    // painter's order: farther first, so nearer objects occlude
    std::sort(objects.begin(), objects.end(),
              [](const auto& a, const auto& b) { return a.depth > b.depth; });

    // per-object texture frequencies/phases plus a global illumination slope
    struct Texture {
        double fx, fy, px, py;
    };
    std::vector<Texture> tex(objects.size() + 1);
    for (auto& t : tex) {
        t.fx = rng.uniform(2.0 * 3.14159265358979323846 / 20.0, 2.0 * 3.14159265358979323846 / 10.0);
        t.fy = rng.uniform(2.0 * 3.14159265358979323846 / 20.0, 2.0 * 3.14159265358979323846 / 10.0);
        t.px = rng.uniform(0.0, 6.28318530717958647692);
        t.py = rng.uniform(0.0, 6.28318530717958647692);
    }
    const double ill_angle = rng.uniform(0.0, 6.28318530717958647692);
    const double gx = std::cos(ill_angle), gy = std::sin(ill_angle);
    const double diag = std::sqrt(static_cast<double>(spec.width) * spec.width +
                                  static_cast<double>(spec.height) * spec.height);

    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            int owner = -1;  // background
            double d = bg_depth;
            for (std::size_t i = 0; i < objects.size(); ++i) {
                const auto& o = objects[i];
                const double dx = (x - o.cx) / o.rx, dy = (y - o.cy) / o.ry;
                const bool inside = o.ellipse ? (dx * dx + dy * dy <= 1.0)
                                              : (std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0);
                if (inside) {
                    owner = static_cast<int>(i);
                    d = o.depth;
                }
            }
            depth.at(y, x) = d;

            const double* albedo = owner < 0 ? bg_albedo : objects[owner].albedo;
            const Texture& t = tex[static_cast<std::size_t>(owner + 1)];
            const double wiggle = spec.texture_amplitude * std::sin(t.fx * x + t.px) *
                                  std::sin(t.fy * y + t.py);
            const double illum =
                1.0 - spec.illumination_amplitude * ((gx * x + gy * y) / diag + 0.5);
            for (int c = 0; c < 3; ++c) {
                color.at(y, x, c) = std::clamp((albedo[c] + wiggle) * illum, 0.0, 1.0);
            }
        }
    }
    return {std::move(depth), std::move(color)};
}

}  // namespace hcg
