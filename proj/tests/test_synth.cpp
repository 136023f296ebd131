#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "hcg/dataset.hpp"
#include "hcg/synth.hpp"

using namespace hcg;

namespace {

bool depth_edge_at(const DepthImage& d, int y, int x) {
    const double v = d.at(y, x);
    if (x + 1 < d.width && d.at(y, x + 1) != v) return true;
    if (x > 0 && d.at(y, x - 1) != v) return true;
    if (y + 1 < d.height && d.at(y + 1, x) != v) return true;
    if (y > 0 && d.at(y - 1, x) != v) return true;
    return false;
}

double color_gradient_at(const ColorImage& c, int y, int x) {
    double g = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const double v = c.at(y, x, ch);
        if (x + 1 < c.width) g = std::max(g, std::abs(c.at(y, x + 1, ch) - v));
        if (x > 0) g = std::max(g, std::abs(c.at(y, x - 1, ch) - v));
        if (y + 1 < c.height) g = std::max(g, std::abs(c.at(y + 1, x, ch) - v));
        if (y > 0) g = std::max(g, std::abs(c.at(y - 1, x, ch) - v));
    }
    return g;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
    SynthSpec spec;
    spec.seed = 42;
    spec.width = spec.height = 64;
    auto [d1, c1] = synth_scene(spec);
    auto [d2, c2] = synth_scene(spec);
    EXPECT_EQ(d1.values, d2.values);
    EXPECT_EQ(c1.rgb, c2.rgb);
    spec.seed = 43;
    auto [d3, c3] = synth_scene(spec);
    EXPECT_NE(d1.values, d3.values);
}

TEST(Synth, DepthIsPiecewiseConstant) {
    SynthSpec spec;
    spec.seed = 7;
    spec.width = spec.height = 96;
    spec.max_objects = 6;
    auto [depth, color] = synth_scene(spec);
    std::set<double> distinct(depth.values.begin(), depth.values.end());
    EXPECT_LE(distinct.size(), 7u);  // objects + background
    for (const double v : depth.values) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
    }
    for (const double v : color.rgb) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Synth, DepthEdgesAreColorEdgesButNotConversely) {
    for (const std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        SynthSpec spec;
        spec.seed = seed;
        spec.width = spec.height = 128;
        auto [depth, color] = synth_scene(spec);
        int depth_edges = 0;
        int color_only = 0;
        for (int y = 0; y < depth.height; ++y) {
            for (int x = 0; x < depth.width; ++x) {
                const bool de = depth_edge_at(depth, y, x);
                const bool ce = color_gradient_at(color, y, x) > 0.02;
                if (de) {
                    ++depth_edges;
                    EXPECT_TRUE(ce) << "seed " << seed << " at (" << y << "," << x << ")";
                }
                if (ce && !de) ++color_only;
            }
        }
        EXPECT_GT(depth_edges, 0) << "seed " << seed;
        EXPECT_GT(color_only, 0) << "seed " << seed;  // distractor texture exists
    }
}

TEST(MakeLr, ConstantPatch) {
    DepthImage hr(64, 64, 16, 500.0);
    auto lr = make_lr(hr, 4);
    EXPECT_EQ(lr.width, 16);
    EXPECT_EQ(lr.height, 16);
    for (const double v : lr.values) EXPECT_NEAR(v, 500.0, 1e-6);
}

TEST(MakeLr, SizeContractAndEquivalence) {
    Rng rng(9);
    DepthImage hr(128, 128, 16);
    for (auto& v : hr.values) v = rng.uniform(400.0, 2000.0);
    auto lr = make_lr(hr, 8);
    EXPECT_EQ(lr.width, 16);
    auto direct = bicubic_resize(hr, 16, 16);
    EXPECT_EQ(lr.values, direct.values);
    EXPECT_THROW(make_lr(hr, 4), ShapeError);  // 128 != 16*4
}

TEST(Augment, FlipIsInvolution) {
    SynthSpec spec;
    spec.seed = 11;
    spec.width = spec.height = 64;
    auto [depth, color] = synth_scene(spec);
    for (const bool fh : {false, true}) {
        for (const bool fv : {false, true}) {
            auto d2 = flip_image(flip_image(depth, fh, fv), fh, fv);
            auto c2 = flip_image(flip_image(color, fh, fv), fh, fv);
            EXPECT_EQ(d2.values, depth.values);
            EXPECT_EQ(c2.rgb, color.rgb);
        }
    }
}

TEST(Augment, DepthAndColorStayAligned) {
    // watermark one pixel in both images; the crop must keep them together
    SynthSpec spec;
    spec.seed = 12;
    spec.width = spec.height = 96;
    auto [depth, color] = synth_scene(spec);
    depth.at(40, 17) = 12345.0;
    for (int c = 0; c < 3; ++c) color.at(40, 17, c) = 1.0;

    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto pair = crop_and_augment(depth, color, 4, rng, "scene");
        for (int y = 0; y < pair.hr_depth.height; ++y) {
            for (int x = 0; x < pair.hr_depth.width; ++x) {
                if (pair.hr_depth.at(y, x) == 12345.0) {
                    EXPECT_EQ(pair.hr_color.at(y, x, 0), 1.0);
                    EXPECT_EQ(pair.hr_color.at(y, x, 1), 1.0);
                    EXPECT_EQ(pair.hr_color.at(y, x, 2), 1.0);
                }
            }
        }
    }
}

TEST(Augment, PatchSideMatchesScale) {
    SynthSpec spec;
    spec.seed = 13;
    spec.width = spec.height = 256;
    auto [depth, color] = synth_scene(spec);
    Rng rng(6);
    auto p16 = crop_and_augment(depth, color, 16, rng);
    EXPECT_EQ(p16.hr_depth.width, 256);
    EXPECT_EQ(p16.lr_depth.width, 16);
    auto p4 = crop_and_augment(depth, color, 4, rng);
    EXPECT_EQ(p4.hr_depth.width, 64);

    DepthImage small(32, 32, 16, 1.0);
    ColorImage small_c(32, 32, 8);
    EXPECT_THROW(crop_and_augment(small, small_c, 4, rng), ShapeError);
}

TEST(Augment, DegradationCommutesWithFlips) {
    SynthSpec spec;
    spec.seed = 14;
    spec.width = spec.height = 64;
    auto [depth, color] = synth_scene(spec);
    for (const bool fh : {false, true}) {
        for (const bool fv : {false, true}) {
            auto a = make_lr(flip_image(depth, fh, fv), 4);
            auto b = flip_image(make_lr(depth, 4), fh, fv);
            for (std::size_t i = 0; i < a.values.size(); ++i) {
                EXPECT_NEAR(a.values[i], b.values[i], 1e-6);
            }
        }
    }
}

TEST(Manifest, RoundTripAndValidation) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = (dir / "hcg_manifest.txt").string();
    std::vector<ManifestEntry> entries{{"a/depth.pgm", "a/color.ppm"},
                                       {"b/depth.pgm", "b/color.ppm"}};
    save_manifest(entries, path);
    auto back = load_manifest(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].depth_path, "a/depth.pgm");
    EXPECT_EQ(back[1].color_path, "b/color.ppm");

    std::ofstream bad(path);
    bad << "no-tab-here\n";
    bad.close();
    EXPECT_THROW(load_manifest(path), ParseError);
    std::remove(path.c_str());
}
