#include <gtest/gtest.h>

#include "hcg/gradcheck_suite.hpp"
#include "hcg/ops.hpp"
#include "hcg/threading.hpp"

using namespace hcg;

TEST(Backward, RejectsNonScalarLoss) {
    Tape<float> tape;
    auto x = zeros<float>({1, 1, 2, 2}, true);
    auto y = relu(tape, x);
    EXPECT_THROW(tape.backward(y), UsageError);
}

TEST(Backward, RejectsNonRecordingTape) {
    Tape<float> tape(false);
    auto x = zeros<float>({1, 1, 1, 1}, true);
    EXPECT_THROW(tape.backward(x), UsageError);
}

TEST(Backward, L1AgainstSelfGivesZeroGrads) {
    Tape<float> tape;
    Rng rng(1);
    auto x = randn<float>({1, 2, 3, 3}, rng, 1.0, true);
    auto loss = l1_loss(tape, x, x);
    tape.backward(loss);
    ASSERT_TRUE(x->has_grad());
    for (float g : x->grad) EXPECT_EQ(g, 0.0f);
}

TEST(Backward, SigmoidDerivativeAtZero) {
    Tape<float> tape;
    auto x = zeros<float>({1, 1, 1, 1}, true);
    auto loss = reduce_sum(tape, sigmoid(tape, x));
    tape.backward(loss);
    EXPECT_FLOAT_EQ(x->grad[0], 0.25f);
}

TEST(Backward, GradAccumulatesAcrossUses) {
    // y = x*x + x => dy/dx = 2x + 1
    Tape<float> tape;
    auto x = full<float>({1, 1, 1, 1}, 3.0f, true);
    auto loss = reduce_sum(tape, add(tape, mul(tape, x, x), x));
    tape.backward(loss);
    EXPECT_FLOAT_EQ(x->grad[0], 7.0f);
}

TEST(Backward, ChannelMaxTieRoutesToLowestIndex) {
    Tape<float> tape;
    auto x = from_values<float>({1, 3, 1, 1}, {5.0f, 5.0f, 1.0f}, true);
    auto loss = reduce_sum(tape, channel_reduce(tape, x, ReduceKind::kMax));
    tape.backward(loss);
    EXPECT_FLOAT_EQ(x->grad[0], 1.0f);
    EXPECT_FLOAT_EQ(x->grad[1], 0.0f);
    EXPECT_FLOAT_EQ(x->grad[2], 0.0f);
}

TEST(Backward, BroadcastGradEqualsSumReduction) {
    Tape<float> tape;
    Rng rng(2);
    auto a = randn<float>({2, 3, 4, 4}, rng);
    auto b = randn<float>({1, 3, 1, 1}, rng, 1.0, true);
    auto r = randn<float>(a->shape, rng);
    auto loss = reduce_sum(tape, mul(tape, mul(tape, a, b), r));
    tape.backward(loss);
    // d loss / d b_c = sum over (n,h,w) of a*r in channel c
    for (int64_t c = 0; c < 3; ++c) {
        double expected = 0.0;
        for (int64_t n = 0; n < 2; ++n) {
            for (int64_t y = 0; y < 4; ++y) {
                for (int64_t x = 0; x < 4; ++x) {
                    expected += static_cast<double>(a->at(n, c, y, x)) * r->at(n, c, y, x);
                }
            }
        }
        EXPECT_NEAR(b->grad[c], expected, 1e-4);
    }
}

TEST(GradCheck, LinearFunctionIsExactInDouble) {
    Rng rng(3);
    auto x = randn<double>({1, 2, 4, 4}, rng);
    auto r = randn<double>(x->shape, rng);
    auto fn = [&](Tape<double>& t) { return reduce_sum(t, mul(t, x, r)); };
    EXPECT_LT(grad_check<double>(fn, {x}, 1e-4, rng), 1e-6);
}

TEST(GradCheck, EveryOpSinglePrecision) {
    // eps 1e-2: large enough that float roundoff in the loss stays well
    // below the finite-difference signal, small enough for O(eps^2) truncation
    for (auto& c : op_gradcheck_cases<float>()) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const double err = c.run(seed, 1e-2);
            EXPECT_LT(err, 1e-3) << c.name << " seed " << seed;
        }
    }
}

TEST(GradCheck, EveryOpDoublePrecision) {
    for (auto& c : op_gradcheck_cases<double>()) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const double err = c.run(seed, 1e-5);
            EXPECT_LT(err, 1e-5) << c.name << " seed " << seed;
        }
    }
}

TEST(GradCheck, EpsSweepIsConsistent) {
    // 1e-4 threshold: loose enough that O(eps^2) truncation of the coarser
    // step cannot flip the verdict, so both step sizes must agree
    for (auto& c : op_gradcheck_cases<double>()) {
        const bool pass_coarse = c.run(9, 1e-3) < 1e-4;
        const bool pass_fine = c.run(9, 1e-4) < 1e-4;
        EXPECT_EQ(pass_coarse, pass_fine) << c.name;
        EXPECT_TRUE(pass_coarse) << c.name;
    }
}

TEST(Determinism, ForwardBackwardBitIdenticalAcrossRunsAndThreads) {
    auto run = [](int threads) {
        set_threads(threads);
        Rng rng(77);
        Tape<float> tape;
        auto x = randn<float>({4, 3, 8, 8}, rng);
        auto w = randn<float>({5, 3, 3, 3}, rng, 0.5, true);
        auto b = randn<float>({1, 5, 1, 1}, rng, 0.5, true);
        auto target = randn<float>({4, 5, 4, 4}, rng);
        auto y = conv2d(tape, x, w, b, {2, 1, 1});
        auto loss = l1_loss(tape, sigmoid(tape, y), target);
        tape.backward(loss);
        std::vector<float> result = y->data;
        result.insert(result.end(), w->grad.begin(), w->grad.end());
        result.insert(result.end(), b->grad.begin(), b->grad.end());
        result.push_back(loss->data[0]);
        return result;
    };
    const auto a = run(1);
    const auto b = run(1);
    const auto c = run(2);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    set_threads(2);
}
