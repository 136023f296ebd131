#include <gtest/gtest.h>

#include <cmath>

#include "hcg/resample.hpp"
#include "hcg/rng.hpp"

using namespace hcg;

namespace {

// Independent oracle: direct 2-D kernel summation per output pixel, no
// separable passes, weights evaluated straight from the kernel definition.
DepthImage oracle_bicubic(const DepthImage& in, int out_w, int out_h) {
    DepthImage out(out_w, out_h, in.bit_depth);
    const double sx = static_cast<double>(in.width) / out_w;
    const double sy = static_cast<double>(in.height) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
        const double src_y = (oy + 0.5) * sy - 0.5;
        const int base_y = static_cast<int>(std::floor(src_y));
        for (int ox = 0; ox < out_w; ++ox) {
            const double src_x = (ox + 0.5) * sx - 0.5;
            const int base_x = static_cast<int>(std::floor(src_x));
            double acc = 0.0;
            for (int j = -1; j <= 2; ++j) {
                const int iy = std::clamp(base_y + j, 0, in.height - 1);
                const double wy = keys_cubic(src_y - (base_y + j));
                for (int i = -1; i <= 2; ++i) {
                    const int ix = std::clamp(base_x + i, 0, in.width - 1);
                    acc += wy * keys_cubic(src_x - (base_x + i)) * in.at(iy, ix);
                }
            }
            out.at(oy, ox) = acc;
        }
    }
    return out;
}

double max_abs_diff(const DepthImage& a, const DepthImage& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    }
    return worst;
}

DepthImage random_depth(int w, int h, Rng& rng, double lo = 0.0, double hi = 1000.0) {
    DepthImage img(w, h, 16);
    for (auto& v : img.values) v = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST(Bicubic, KernelProperties) {
    EXPECT_DOUBLE_EQ(keys_cubic(0.0), 1.0);
    EXPECT_DOUBLE_EQ(keys_cubic(1.0), 0.0);
    EXPECT_DOUBLE_EQ(keys_cubic(2.0), 0.0);
    EXPECT_DOUBLE_EQ(keys_cubic(-0.5), keys_cubic(0.5));
    // partition of unity at an arbitrary phase
    const double t = 0.37;
    const double sum = keys_cubic(t + 1.0) + keys_cubic(t) + keys_cubic(t - 1.0) + keys_cubic(t - 2.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Bicubic, ConstantImageAnySize) {
    for (const double value : {3.0, 500.0}) {
        DepthImage img(13, 9, 16, value);
        for (auto [ow, oh] : {std::pair<int, int>{4, 4}, {26, 18}, {1, 1}, {16, 3}}) {
            auto out = bicubic_resize(img, ow, oh);
            for (const double v : out.values) EXPECT_NEAR(v, value, 1e-6);
        }
    }
}

TEST(Bicubic, LinearRampInteriorExact) {
    // v(x) = x downsampled 2x: interior outputs must land on the ramp
    DepthImage img(16, 4, 16);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 16; ++x) img.at(y, x) = static_cast<double>(x);
    }
    auto out = bicubic_resize(img, 8, 4);
    for (int ox = 1; ox < 7; ++ox) {  // taps away from clamped edges
        const double expected = (ox + 0.5) * 2.0 - 0.5;
        for (int y = 0; y < 4; ++y) EXPECT_NEAR(out.at(y, ox), expected, 1e-9);
    }
}

TEST(Bicubic, EightToTwoMatchesOracle) {
    Rng rng(21);
    auto img = random_depth(8, 8, rng);
    auto got = bicubic_resize(img, 2, 2);
    auto expect = oracle_bicubic(img, 2, 2);
    EXPECT_LT(max_abs_diff(got, expect), 1e-5);
}

TEST(Bicubic, RandomSizesMatchOracle) {
    Rng rng(22);
    for (int trial = 0; trial < 25; ++trial) {
        const int w = static_cast<int>(rng.uniform_int(2, 24));
        const int h = static_cast<int>(rng.uniform_int(2, 24));
        const int ow = static_cast<int>(rng.uniform_int(1, 24));
        const int oh = static_cast<int>(rng.uniform_int(1, 24));
        auto img = random_depth(w, h, rng);
        EXPECT_LT(max_abs_diff(bicubic_resize(img, ow, oh), oracle_bicubic(img, ow, oh)), 1e-5)
            << w << "x" << h << " -> " << ow << "x" << oh;
    }
}

TEST(Bicubic, ColorChannelsResampleIndependently) {
    Rng rng(23);
    ColorImage img(10, 8, 8);
    for (auto& v : img.rgb) v = rng.uniform();
    auto out = bicubic_resize(img, 5, 4);
    for (int c = 0; c < 3; ++c) {
        DepthImage plane(10, 8, 16), expect_plane(5, 4, 16);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 10; ++x) plane.at(y, x) = img.at(y, x, c);
        }
        expect_plane = oracle_bicubic(plane, 5, 4);
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 5; ++x) EXPECT_NEAR(out.at(y, x, c), expect_plane.at(y, x), 1e-9);
        }
    }
}

TEST(Bicubic, RejectsEmptyTarget) {
    DepthImage img(4, 4, 16, 1.0);
    EXPECT_THROW(bicubic_resize(img, 0, 2), ShapeError);
}
