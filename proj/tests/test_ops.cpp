#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hcg/ops.hpp"
#include "hcg/rng.hpp"

using namespace hcg;

namespace {

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        acc += static_cast<double>(a.data[i]) * static_cast<double>(b.data[i]);
    }
    return acc;
}

}  // namespace

TEST(Conv2d, ZeroInputGivesZeroOutput) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 1, 5, 5});
    Rng rng(1);
    auto w = randn<float>({3, 1, 3, 3}, rng);
    auto y = conv2d(tape, x, w, nullptr, {1, 1, 1});
    EXPECT_EQ(y->shape, (Shape{1, 3, 5, 5}));
    for (float v : y->data) EXPECT_EQ(v, 0.0f);
}

TEST(Conv2d, AllOnesThreeByThree) {
    Tape<float> tape(false);
    auto x = full<float>({1, 1, 3, 3}, 1.0f);
    auto w = full<float>({1, 1, 3, 3}, 1.0f);
    auto y = conv2d(tape, x, w);
    ASSERT_EQ(y->shape, (Shape{1, 1, 1, 1}));
    EXPECT_FLOAT_EQ(y->data[0], 9.0f);
}

TEST(Conv2d, DilatedSamePadding) {
    Rng rng(7);
    for (int64_t d = 1; d <= 4; ++d) {
        Tape<float> tape(false);
        auto x = randn<float>({2, 3, 11, 9}, rng);
        auto w = randn<float>({4, 3, 3, 3}, rng);
        auto y = conv2d(tape, x, w, nullptr, {1, d, d});
        EXPECT_EQ(y->shape, (Shape{2, 4, 11, 9})) << "dilation " << d;
    }
}

TEST(Conv2d, BiasBroadcastsPerChannel) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 2, 2, 2});
    auto w = zeros<float>({3, 2, 1, 1});
    auto b = from_values<float>({1, 3, 1, 1}, {1.0f, 2.0f, 3.0f});
    auto y = conv2d(tape, x, w, b);
    for (int64_t c = 0; c < 3; ++c) {
        for (int64_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(y->at(0, c, i / 2, i % 2), float(c + 1));
    }
}

TEST(Conv2d, ShapeErrors) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 2, 4, 4});
    auto w_bad = zeros<float>({1, 3, 3, 3});
    EXPECT_THROW(conv2d(tape, x, w_bad), ShapeError);
    auto w = zeros<float>({1, 2, 3, 3});
    // 4x4 input, kernel 3 dilated by 2 spans 5 pixels: no valid output
    EXPECT_THROW(conv2d(tape, x, w, nullptr, {1, 0, 2}), ShapeError);
}

TEST(ConvTranspose2d, ZeroWeightsGiveUpsampledZeros) {
    Tape<float> tape(false);
    Rng rng(3);
    auto x = randn<float>({1, 2, 5, 5}, rng);
    auto w = zeros<float>({2, 3, 4, 4});
    auto y = conv_transpose2d(tape, x, w, nullptr, 2, 1);
    EXPECT_EQ(y->shape, (Shape{1, 3, 10, 10}));
    for (float v : y->data) EXPECT_EQ(v, 0.0f);
}

TEST(ConvTranspose2d, Kernel4Stride2DoublesSize) {
    Tape<float> tape(false);
    Rng rng(4);
    auto x = randn<float>({1, 1, 8, 8}, rng);
    auto w = randn<float>({1, 1, 4, 4}, rng);
    auto y = conv_transpose2d(tape, x, w, nullptr, 2, 1);
    EXPECT_EQ(y->shape, (Shape{1, 1, 16, 16}));
}

TEST(ConvTranspose2d, AdjointIdentityWithSharedWeights) {
    // <conv(x), y> == <x, convT(y)> for the same weight tensor
    struct Case {
        int64_t ic, oc, k, stride, pad, h, w;
    };
    const Case cases[] = {
        {1, 1, 3, 1, 1, 6, 6}, {3, 2, 4, 2, 1, 8, 10}, {2, 5, 3, 1, 0, 7, 5}, {4, 3, 4, 2, 1, 12, 6},
    };
    Rng rng(11);
    for (const auto& c : cases) {
        Tape<double> tape(false);
        auto x = randn<double>({2, c.ic, c.h, c.w}, rng);
        auto w = randn<double>({c.oc, c.ic, c.k, c.k}, rng);
        auto cx = conv2d(tape, x, w, nullptr, {c.stride, c.pad, 1});
        auto y = randn<double>({2, c.oc, cx->shape.h, cx->shape.w}, rng);
        auto cty = conv_transpose2d(tape, y, w, nullptr, c.stride, c.pad);
        ASSERT_EQ(cty->shape, x->shape);
        const double lhs = dot(*cx, *y);
        const double rhs = dot(*x, *cty);
        EXPECT_NEAR(lhs, rhs, 1e-5 * std::max({std::abs(lhs), std::abs(rhs), 1.0}));
    }
}

TEST(Activation, SigmoidAtZero) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 1, 1, 1});
    EXPECT_FLOAT_EQ(sigmoid(tape, x)->data[0], 0.5f);
}

TEST(Activation, ReluClampsNegative) {
    Tape<float> tape(false);
    auto x = full<float>({1, 1, 1, 1}, -3.2f);
    EXPECT_FLOAT_EQ(relu(tape, x)->data[0], 0.0f);
}

TEST(Activation, PreluScalesNegativeByChannelSlope) {
    Tape<float> tape(false);
    auto x = from_values<float>({1, 2, 1, 1}, {-2.0f, -2.0f});
    auto slope = from_values<float>({1, 2, 1, 1}, {0.25f, 0.5f});
    auto y = prelu(tape, x, slope);
    EXPECT_FLOAT_EQ(y->data[0], -0.5f);
    EXPECT_FLOAT_EQ(y->data[1], -1.0f);
}

TEST(Activation, PreluRequiresSlope) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 1, 1, 1});
    EXPECT_THROW(activation(tape, x, ActKind::kPrelu), ConfigError);
    auto bad_slope = zeros<float>({1, 2, 1, 1});
    EXPECT_THROW(activation(tape, x, ActKind::kPrelu, bad_slope), ShapeError);
}

TEST(Activation, RangeContracts) {
    Tape<float> tape(false);
    Rng rng(5);
    auto x = randn<float>({2, 3, 4, 4}, rng, 3.0);
    auto s = sigmoid(tape, x);
    auto r = relu(tape, x);
    for (float v : s->data) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
    }
    for (float v : r->data) EXPECT_GE(v, 0.0f);
}

TEST(Elementwise, MulByZerosGivesZeros) {
    Tape<float> tape(false);
    Rng rng(6);
    auto a = randn<float>({1, 2, 3, 3}, rng);
    auto z = zeros<float>({1, 2, 3, 3});
    auto y = mul(tape, a, z);
    for (float v : y->data) EXPECT_EQ(v, 0.0f);
}

TEST(Elementwise, AddZerosIsIdentity) {
    Tape<float> tape(false);
    Rng rng(6);
    auto a = randn<float>({1, 2, 3, 3}, rng);
    auto z = zeros<float>({1, 2, 3, 3});
    auto y = add(tape, a, z);
    EXPECT_EQ(y->data, a->data);
}

TEST(Elementwise, ScalarBroadcastMul) {
    Tape<float> tape(false);
    auto a = full<float>({1, 3, 2, 2}, 1.0f);
    auto b = full<float>({1, 1, 1, 1}, 2.0f);
    auto y = mul(tape, a, b);
    EXPECT_EQ(y->shape, (Shape{1, 3, 2, 2}));
    for (float v : y->data) EXPECT_FLOAT_EQ(v, 2.0f);
}

TEST(Elementwise, ChannelMapBroadcast) {
    Tape<float> tape(false);
    auto a = full<float>({2, 3, 2, 2}, 3.0f);
    auto b = from_values<float>({2, 1, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    auto y = mul(tape, a, b);
    for (int64_t c = 0; c < 3; ++c) {
        EXPECT_FLOAT_EQ(y->at(0, c, 0, 1), 6.0f);
        EXPECT_FLOAT_EQ(y->at(1, c, 1, 1), 24.0f);
    }
}

TEST(Elementwise, NonBroadcastableRejected) {
    Tape<float> tape(false);
    auto a = zeros<float>({1, 3, 2, 2});
    auto b = zeros<float>({1, 2, 2, 2});
    EXPECT_THROW(add(tape, a, b), ShapeError);
}

TEST(Concat, ChannelCountsAdd) {
    Tape<float> tape(false);
    auto a = zeros<float>({1, 64, 4, 4});
    auto b = zeros<float>({1, 64, 4, 4});
    auto y = concat_channels(tape, {a, b});
    EXPECT_EQ(y->shape, (Shape{1, 128, 4, 4}));
}

TEST(Concat, SingleInputIsIdentity) {
    Tape<float> tape(false);
    Rng rng(8);
    auto a = randn<float>({2, 3, 4, 4}, rng);
    auto y = concat_channels(tape, {a});
    EXPECT_EQ(y->shape, a->shape);
    EXPECT_EQ(y->data, a->data);
}

TEST(Concat, SliceRecoversInputs) {
    Tape<float> tape(false);
    Rng rng(9);
    auto a = randn<float>({2, 3, 4, 4}, rng);
    auto b = randn<float>({2, 5, 4, 4}, rng);
    auto y = concat_channels(tape, {a, b});
    auto sa = channel_slice(tape, y, 0, 3);
    auto sb = channel_slice(tape, y, 3, 8);
    EXPECT_EQ(sa->data, a->data);
    EXPECT_EQ(sb->data, b->data);
}

TEST(Concat, SpatialMismatchRejected) {
    Tape<float> tape(false);
    auto a = zeros<float>({1, 2, 4, 4});
    auto b = zeros<float>({1, 2, 4, 5});
    EXPECT_THROW(concat_channels(tape, {a, b}), ShapeError);
}

TEST(ChannelReduce, ConstantChannels) {
    Tape<float> tape(false);
    auto x = full<float>({1, 4, 3, 3}, 2.5f);
    auto mx = channel_reduce(tape, x, ReduceKind::kMax);
    auto mn = channel_reduce(tape, x, ReduceKind::kMean);
    EXPECT_EQ(mx->shape, (Shape{1, 1, 3, 3}));
    for (float v : mx->data) EXPECT_FLOAT_EQ(v, 2.5f);
    for (float v : mn->data) EXPECT_FLOAT_EQ(v, 2.5f);
}

TEST(ChannelReduce, MaxAndMeanByHand) {
    Tape<float> tape(false);
    auto x = from_values<float>({1, 3, 1, 1}, {1.0f, 5.0f, 3.0f});
    EXPECT_FLOAT_EQ(channel_reduce(tape, x, ReduceKind::kMax)->data[0], 5.0f);
    EXPECT_FLOAT_EQ(channel_reduce(tape, x, ReduceKind::kMean)->data[0], 3.0f);
}

TEST(ChannelReduce, SingleChannelIsIdentity) {
    Tape<float> tape(false);
    Rng rng(10);
    auto x = randn<float>({2, 1, 3, 3}, rng);
    EXPECT_EQ(channel_reduce(tape, x, ReduceKind::kMax)->data, x->data);
    EXPECT_EQ(channel_reduce(tape, x, ReduceKind::kMean)->data, x->data);
}

TEST(PixelShuffle, ShapeFormula) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 4, 2, 2});
    EXPECT_EQ(pixel_shuffle(tape, x, 2)->shape, (Shape{1, 1, 4, 4}));
    EXPECT_THROW(pixel_shuffle(tape, zeros<float>({1, 3, 2, 2}), 2), ShapeError);
    EXPECT_THROW(pixel_unshuffle(tape, zeros<float>({1, 1, 3, 3}), 2), ShapeError);
}

TEST(PixelShuffle, UnshuffleInvertsBitExactly) {
    Tape<float> tape(false);
    Rng rng(12);
    auto x = randn<float>({2, 8, 3, 5}, rng);
    auto y = pixel_unshuffle(tape, pixel_shuffle(tape, x, 2), 2);
    EXPECT_EQ(y->shape, x->shape);
    EXPECT_EQ(y->data, x->data);
}

TEST(PixelShuffle, PreservesValueMultiset) {
    Tape<float> tape(false);
    Rng rng(13);
    auto x = randn<float>({1, 9, 2, 4}, rng);
    auto y = pixel_shuffle(tape, x, 3);
    auto xs = x->data;
    auto ys = y->data;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    EXPECT_EQ(xs, ys);
}

TEST(ResizeBilinear, ConstantMapsToConstant) {
    Tape<float> tape(false);
    auto x = full<float>({1, 2, 5, 7}, 3.0f);
    for (auto [oh, ow] : {std::pair<int64_t, int64_t>{3, 3}, {10, 14}, {1, 1}, {13, 2}}) {
        auto y = resize_bilinear(tape, x, oh, ow);
        for (float v : y->data) EXPECT_FLOAT_EQ(v, 3.0f);
    }
}

TEST(ResizeBilinear, IdentityTargetSize) {
    Tape<float> tape(false);
    Rng rng(14);
    auto x = randn<float>({1, 3, 6, 4}, rng);
    auto y = resize_bilinear(tape, x, 6, 4);
    EXPECT_EQ(y->data, x->data);
}

TEST(ResizeBilinear, TwoByTwoToCenter) {
    Tape<float> tape(false);
    auto x = from_values<float>({1, 1, 2, 2}, {0.0f, 1.0f, 2.0f, 3.0f});
    auto y = resize_bilinear(tape, x, 1, 1);
    EXPECT_FLOAT_EQ(y->data[0], 1.5f);
}

TEST(L1Loss, PerfectPredictionIsZero) {
    Tape<float> tape(false);
    Rng rng(15);
    auto x = randn<float>({1, 1, 4, 4}, rng);
    auto y = from_values<float>(x->shape, x->data);
    EXPECT_FLOAT_EQ(l1_loss(tape, x, y)->data[0], 0.0f);
}

TEST(L1Loss, ByHand) {
    Tape<float> tape(false);
    auto p = from_values<float>({1, 1, 1, 2}, {1.0f, 3.0f});
    auto t = from_values<float>({1, 1, 1, 2}, {2.0f, 1.0f});
    EXPECT_FLOAT_EQ(l1_loss(tape, p, t)->data[0], 1.5f);
}

TEST(L1Loss, Homogeneity) {
    Tape<float> tape(false);
    Rng rng(16);
    auto p = randn<float>({1, 2, 3, 3}, rng);
    auto t = randn<float>({1, 2, 3, 3}, rng);
    const float base = l1_loss(tape, p, t)->data[0];
    for (float alpha : {2.0f, -3.0f}) {
        auto ps = from_values<float>(p->shape, p->data);
        auto ts = from_values<float>(t->shape, t->data);
        for (auto& v : ps->data) v *= alpha;
        for (auto& v : ts->data) v *= alpha;
        EXPECT_NEAR(l1_loss(tape, ps, ts)->data[0], std::abs(alpha) * base, 1e-5);
    }
}

TEST(L1Loss, ShapeMismatchRejected) {
    Tape<float> tape(false);
    EXPECT_THROW(l1_loss(tape, zeros<float>({1, 1, 2, 2}), zeros<float>({1, 1, 2, 3})), ShapeError);
}
