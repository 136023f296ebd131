#include <gtest/gtest.h>

#include "hcg/tensor.hpp"

using namespace hcg;

TEST(Tensor, ShapeArithmetic) {
    Shape s{2, 3, 4, 5};
    EXPECT_EQ(s.numel(), 120);
    EXPECT_EQ(s.str(), "(2,3,4,5)");
    EXPECT_EQ(s, (Shape{2, 3, 4, 5}));
    EXPECT_NE(s, (Shape{2, 3, 5, 4}));
}

TEST(Tensor, DataLengthMatchesShape) {
    auto t = zeros<float>({2, 3, 4, 5});
    EXPECT_EQ(static_cast<std::int64_t>(t->data.size()), t->numel());
    EXPECT_FALSE(t->requires_grad);
    EXPECT_FALSE(t->has_grad());
}

TEST(Tensor, NegativeDimRejected) {
    EXPECT_THROW(zeros<float>({1, -1, 2, 2}), ShapeError);
}

TEST(Tensor, FromValuesChecksCount) {
    EXPECT_NO_THROW(from_values<float>({1, 1, 2, 2}, {1, 2, 3, 4}));
    EXPECT_THROW(from_values<float>({1, 1, 2, 2}, {1, 2, 3}), ShapeError);
}

TEST(Tensor, GradBufferMatchesShape) {
    auto t = zeros<float>({1, 2, 2, 2}, true);
    EXPECT_TRUE(t->requires_grad);
    t->ensure_grad();
    EXPECT_EQ(t->grad.size(), t->data.size());
    t->grad[3] = 5.0f;
    t->zero_grad();
    EXPECT_EQ(t->grad[3], 0.0f);
    t->drop_grad();
    EXPECT_FALSE(t->has_grad());
}

TEST(Tensor, RowMajorIndexing) {
    auto t = zeros<float>({2, 3, 4, 5});
    t->at(1, 2, 3, 4) = 7.0f;
    EXPECT_EQ(t->data.back(), 7.0f);
    t->at(0, 0, 0, 1) = 3.0f;
    EXPECT_EQ(t->data[1], 3.0f);
}

TEST(Tensor, RandnDeterministicPerSeed) {
    Rng a(42), b(42), c(43);
    auto ta = randn<float>({1, 2, 3, 3}, a);
    auto tb = randn<float>({1, 2, 3, 3}, b);
    auto tc = randn<float>({1, 2, 3, 3}, c);
    EXPECT_EQ(ta->data, tb->data);
    EXPECT_NE(ta->data, tc->data);
    EXPECT_TRUE(ta->all_finite());
}
