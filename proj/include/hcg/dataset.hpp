#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "hcg/image.hpp"
#include "hcg/resample.hpp"
#include "hcg/rng.hpp"
#include "hcg/tensor.hpp"

namespace hcg {

/// One training/evaluation unit: aligned HR depth and color patches plus the
/// bicubic-downsampled LR depth.
struct SamplePair {
    DepthImage hr_depth;
    ColorImage hr_color;
    DepthImage lr_depth;
    std::string scene_id;
    bool flipped_h = false;
    bool flipped_v = false;
};

struct ManifestEntry {
    std::string depth_path;
    std::string color_path;
};

struct ScenePair {
    DepthImage depth;
    ColorImage color;
    std::string id;
};

constexpr int kLrPatchSide = 16;

/// One `<depth_path>\t<color_path>` line per pair, LF-terminated.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw ParseError("manifest " + path + ":" + std::to_string(line_no) +
                             ": expected <depth>\\t<color>");
        }
        entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return entries;
}

inline void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path);
    for (const auto& e : entries) out << e.depth_path << '\t' << e.color_path << '\n';
}

inline DepthImage flip_image(const DepthImage& img, bool horizontal, bool vertical) {
    DepthImage out(img.width, img.height, img.bit_depth);
    for (int y = 0; y < img.height; ++y) {
        const int sy = vertical ? img.height - 1 - y : y;
        for (int x = 0; x < img.width; ++x) {
            out.at(y, x) = img.at(sy, horizontal ? img.width - 1 - x : x);
        }
    }
    return out;
}

inline ColorImage flip_image(const ColorImage& img, bool horizontal, bool vertical) {
    ColorImage out(img.width, img.height, img.bit_depth);
    for (int y = 0; y < img.height; ++y) {
        const int sy = vertical ? img.height - 1 - y : y;
        for (int x = 0; x < img.width; ++x) {
            const int sx = horizontal ? img.width - 1 - x : x;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

inline DepthImage crop_image(const DepthImage& img, int x0, int y0, int side) {
    if (x0 < 0 || y0 < 0 || x0 + side > img.width || y0 + side > img.height) {
        throw ShapeError("crop outside image bounds");
    }
    DepthImage out(side, side, img.bit_depth);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) out.at(y, x) = img.at(y0 + y, x0 + x);
    }
    return out;
}

inline ColorImage crop_image(const ColorImage& img, int x0, int y0, int side) {
    if (x0 < 0 || y0 < 0 || x0 + side > img.width || y0 + side > img.height) {
        throw ShapeError("crop outside image bounds");
    }
    ColorImage out(side, side, img.bit_depth);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
        }
    }
    return out;
}

/// Bicubic 16x16 LR from a square 16*scale HR depth patch.
inline DepthImage make_lr(const DepthImage& hr, int scale) {
    const int side = kLrPatchSide * scale;
    if (hr.width != side || hr.height != side) {
        throw ShapeError("make_lr: expected " + std::to_string(side) + "x" + std::to_string(side) +
                         " patch, got " + std::to_string(hr.width) + "x" +
                         std::to_string(hr.height));
    }
    return bicubic_resize(hr, kLrPatchSide, kLrPatchSide);
}

/// Random aligned square crop of side 16*scale plus independent horizontal
/// and vertical flips (p = 0.5 each), applied identically to depth and color.
inline SamplePair crop_and_augment(const DepthImage& hr_depth, const ColorImage& hr_color,
                                   int scale, Rng& rng, const std::string& scene_id = "") {
    const int side = kLrPatchSide * scale;
    if (hr_depth.width < side || hr_depth.height < side) {
        throw ShapeError("crop_and_augment: source " + std::to_string(hr_depth.width) + "x" +
                         std::to_string(hr_depth.height) + " smaller than patch side " +
                         std::to_string(side));
    }
    if (hr_depth.width != hr_color.width || hr_depth.height != hr_color.height) {
        throw ShapeError("crop_and_augment: depth/color size mismatch");
    }
    const int x0 = static_cast<int>(rng.uniform_int(0, hr_depth.width - side));
    const int y0 = static_cast<int>(rng.uniform_int(0, hr_depth.height - side));
    const bool fh = rng.bernoulli(0.5);
    const bool fv = rng.bernoulli(0.5);

    SamplePair pair;
    pair.scene_id = scene_id;
    pair.flipped_h = fh;
    pair.flipped_v = fv;
    pair.hr_depth = flip_image(crop_image(hr_depth, x0, y0, side), fh, fv);
    pair.hr_color = flip_image(crop_image(hr_color, x0, y0, side), fh, fv);
    pair.lr_depth = make_lr(pair.hr_depth, scale);
    return pair;
}

/// Deterministic centered patch (no flips); used for validation.
inline SamplePair center_patch(const DepthImage& hr_depth, const ColorImage& hr_color, int scale,
                               const std::string& scene_id = "") {
    const int side = kLrPatchSide * scale;
    if (hr_depth.width < side || hr_depth.height < side) {
        throw ShapeError("center_patch: source smaller than patch side");
    }
    const int x0 = (hr_depth.width - side) / 2;
    const int y0 = (hr_depth.height - side) / 2;
    SamplePair pair;
    pair.scene_id = scene_id;
    pair.hr_depth = crop_image(hr_depth, x0, y0, side);
    pair.hr_color = crop_image(hr_color, x0, y0, side);
    pair.lr_depth = make_lr(pair.hr_depth, scale);
    return pair;
}

// ---- tensor bridging -------------------------------------------------------

/// Stacks depth images into a (n,1,h,w) tensor, normalized by depth_max.
template <typename T>
TensorPtr<T> depth_batch_to_tensor(const std::vector<const DepthImage*>& imgs, double depth_max) {
    const int h = imgs[0]->height, w = imgs[0]->width;
    auto t = zeros<T>({static_cast<std::int64_t>(imgs.size()), 1, h, w});
    std::size_t k = 0;
    for (const DepthImage* img : imgs) {
        if (img->height != h || img->width != w) throw ShapeError("batch images differ in size");
        for (const double v : img->values) t->data[k++] = static_cast<T>(v / depth_max);
    }
    return t;
}

/// Stacks color images into a (n,3,h,w) tensor (planar channels).
template <typename T>
TensorPtr<T> color_batch_to_tensor(const std::vector<const ColorImage*>& imgs) {
    const int h = imgs[0]->height, w = imgs[0]->width;
    auto t = zeros<T>({static_cast<std::int64_t>(imgs.size()), 3, h, w});
    std::int64_t n = 0;
    for (const ColorImage* img : imgs) {
        if (img->height != h || img->width != w) throw ShapeError("batch images differ in size");
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    t->at(n, c, y, x) = static_cast<T>(img->at(y, x, c));
                }
            }
        }
        ++n;
    }
    return t;
}

template <typename T>
TensorPtr<T> depth_to_tensor(const DepthImage& img, double depth_max) {
    return depth_batch_to_tensor<T>({&img}, depth_max);
}

template <typename T>
TensorPtr<T> color_to_tensor(const ColorImage& img) {
    return color_batch_to_tensor<T>({&img});
}

/// Denormalizes one batch item of a (n,1,h,w) tensor back to depth units.
template <typename T>
DepthImage tensor_to_depth(const Tensor<T>& t, std::int64_t n, double depth_max,
                           int bit_depth = 16) {
    DepthImage img(static_cast<int>(t.shape.w), static_cast<int>(t.shape.h), bit_depth);
    const std::int64_t plane = t.shape.h * t.shape.w;
    for (std::int64_t i = 0; i < plane; ++i) {
        img.values[static_cast<std::size_t>(i)] =
            static_cast<double>(t.data[static_cast<std::size_t>(n * plane + i)]) * depth_max;
    }
    return img;
}

}  // namespace hcg
