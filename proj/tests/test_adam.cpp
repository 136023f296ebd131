#include <gtest/gtest.h>

#include "hcg/adam.hpp"
#include "hcg/ops.hpp"

using namespace hcg;

TEST(Adam, DefaultHyperparameters) {
    AdamOpts opts;
    EXPECT_DOUBLE_EQ(opts.beta1, 0.9);
    EXPECT_DOUBLE_EQ(opts.beta2, 0.99);
    EXPECT_DOUBLE_EQ(opts.eps, 1e-8);
    EXPECT_DOUBLE_EQ(opts.lr, 1e-4);
}

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
    ParamStore<float> params;
    auto p = params.add("p", full<float>({1, 1, 1, 1}, 2.5f));
    AdamState<float> state(params);
    p->ensure_grad();
    adam_step(params, state);
    EXPECT_FLOAT_EQ(p->data[0], 2.5f);
    EXPECT_EQ(state.step_count(), 1);
}

TEST(Adam, FirstStepWithUnitGradient) {
    // bias correction makes m_hat = v_hat = 1, so the step is ~lr
    ParamStore<double> params;
    auto p = params.add("p", full<double>({1, 1, 1, 1}, 1.0));
    AdamState<double> state(params);
    p->ensure_grad();
    p->grad[0] = 1.0;
    adam_step(params, state);
    EXPECT_NEAR(1.0 - p->data[0], 1e-4, 1e-8);
}

TEST(Adam, MissingGradientRejected) {
    ParamStore<float> params;
    params.add("a", zeros<float>({1, 1, 1, 1}));
    params.add("b", zeros<float>({1, 1, 1, 1}));
    AdamState<float> state(params);
    params.get("a")->ensure_grad();
    EXPECT_THROW(adam_step(params, state), UsageError);
}

TEST(Adam, GradsClearedAfterStep) {
    ParamStore<float> params;
    auto p = params.add("p", zeros<float>({1, 1, 2, 2}));
    AdamState<float> state(params);
    p->ensure_grad();
    p->grad[0] = 1.0f;
    adam_step(params, state);
    EXPECT_FALSE(p->has_grad());
}

TEST(Adam, StepCounterAndMomentsStayValid) {
    ParamStore<float> params;
    auto p = params.add("p", full<float>({1, 1, 2, 2}, 1.0f));
    AdamState<float> state(params, {.lr = 1e-2});
    Rng rng(4);
    for (int i = 1; i <= 10; ++i) {
        p->ensure_grad();
        for (auto& g : p->grad) g = static_cast<float>(rng.normal());
        adam_step(params, state);
        EXPECT_EQ(state.step_count(), i);
    }
    for (float v : p->data) EXPECT_TRUE(std::isfinite(v));
}

TEST(Adam, ConvergesOnQuadratic) {
    // minimize (p - 3)^2 via its gradient
    ParamStore<double> params;
    auto p = params.add("p", zeros<double>({1, 1, 1, 1}));
    AdamState<double> state(params, {.lr = 0.05});
    for (int i = 0; i < 2000; ++i) {
        p->ensure_grad();
        p->grad[0] = 2.0 * (p->data[0] - 3.0);
        adam_step(params, state);
    }
    EXPECT_NEAR(p->data[0], 3.0, 1e-3);
}

TEST(ParamStore, InsertionOrderAndLookup) {
    ParamStore<float> params;
    params.add("w1", zeros<float>({1, 1, 3, 3}));
    params.add("w0", zeros<float>({2, 1, 1, 1}));
    EXPECT_THROW(params.add("w1", zeros<float>({1, 1, 1, 1})), UsageError);
    EXPECT_THROW(params.get("nope"), UsageError);
    EXPECT_EQ(params.total_params(), 11);
    std::vector<std::string> names;
    for (const auto& [name, t] : params) names.push_back(name);
    EXPECT_EQ(names, (std::vector<std::string>{"w1", "w0"}));
    EXPECT_TRUE(params.get("w0")->requires_grad);
}
