#include <gtest/gtest.h>

#include <cmath>

#include "fgwk/errors.hpp"
#include "fgwk/ops.hpp"
#include "fgwk/optim.hpp"
#include "fgwk/rng.hpp"

using namespace fgwk;
using namespace fgwk::optim;

namespace {

LionConfig lion(double lr, double weight_decay = 0.0) { return {lr, 0.9, 0.99, weight_decay}; }

} // namespace

TEST(LionStep, HandExample) {
    std::vector<float> w{0, 0}, g{2, -3}, mu{0, 0};
    lion_step(w, g, mu, lion(0.01));
    EXPECT_NEAR(w[0], -0.01, 1e-7);
    EXPECT_NEAR(w[1], 0.01, 1e-7);
    EXPECT_NEAR(mu[0], 0.02, 1e-7);
    EXPECT_NEAR(mu[1], -0.03, 1e-7);
}

TEST(LionStep, ZeroGradientOnlyDecays) {
    std::vector<float> w{1.5f, -2.0f, 0.25f}, g(3, 0.0f), mu(3, 0.0f);
    const auto before = w;
    lion_step(w, g, mu, lion(0.1, 0.2));
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(w[i], before[i] * (1.0 - 0.1 * 0.2), 1e-7);
        EXPECT_EQ(mu[i], 0.0f);
    }
    lion_step(w, g, mu, lion(0.1));
    EXPECT_NEAR(w[0], before[0] * 0.98, 1e-7);
}

TEST(LionStep, UpdateMagnitudeIsExactlyLrOrZero) {
    Rng rng(1);
    const float lr = 0.0125f;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<float> w(8), g(8), mu(8), update(8);
        for (std::size_t i = 0; i < 8; ++i) {
            w[i] = static_cast<float>(rng.normal());
            g[i] = i == 7 ? 0.0f : static_cast<float>(rng.normal());
            mu[i] = i == 7 ? 0.0f : static_cast<float>(rng.normal());
        }
        lion_update(w, g, mu, lion(lr), update);
        for (std::size_t i = 0; i < 8; ++i) {
            EXPECT_TRUE(std::abs(update[i]) == lr || (i == 7 && update[i] == 0.0f));
        }
    }
}

TEST(LionStep, PositiveGradientScalingLeavesUpdateUnchanged) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<float> w(6), g(6), mu(6, 0.0f), a(6), b(6);
        for (std::size_t i = 0; i < 6; ++i) {
            w[i] = static_cast<float>(rng.normal());
            g[i] = static_cast<float>(rng.normal());
        }
        auto scaled = g;
        const float factor = static_cast<float>(rng.uniform(1e-3, 1e3));
        for (auto& v : scaled) {
            v *= factor;
        }
        lion_update(w, g, mu, lion(0.01), a);
        lion_update(w, scaled, mu, lion(0.01), b);
        EXPECT_EQ(a, b);
    }
}

TEST(LionStep, SignOfZeroIsZero) {
    std::vector<float> w{1.0f}, g{0.0f}, mu{0.0f};
    lion_step(w, g, mu, lion(0.5));
    EXPECT_EQ(w[0], 1.0f);
}

TEST(LionStep, ShapeMismatch) {
    std::vector<float> w(3), g(2), mu(3);
    EXPECT_THROW(lion_step(w, g, mu, lion(0.1)), ContractError);
    std::vector<float> g3(3), mu2(2);
    EXPECT_THROW(lion_step(w, g3, mu2, lion(0.1)), ContractError);
}

TEST(LionStep, QuadraticDescent) {
    // f(w) = |w|^2 from [3, -2]: f falls every step until a coordinate
    // enters the lr band. Afterwards the slow momentum overshoots zero.
    const double lr = 0.05;
    std::vector<float> w{3.0f, -2.0f}, mu{0.0f, 0.0f};
    auto f = [&] { return static_cast<double>(w[0]) * w[0] + static_cast<double>(w[1]) * w[1]; };
    int entered = -1;
    for (int step = 0; step < 100 && entered < 0; ++step) {
        const double before = f();
        std::vector<float> g{2 * w[0], 2 * w[1]};
        lion_step(w, g, mu, lion(lr));
        EXPECT_LT(f(), before) << "step " << step;
        if (std::abs(w[0]) < lr || std::abs(w[1]) < lr) {
            entered = step;
        }
    }
    // -2 + 40 * 0.05 = 0
    EXPECT_EQ(entered, 39);
    EXPECT_NEAR(w[0], 1.0, 1e-5);
}

TEST(LionConfig, Validation) {
    EXPECT_NO_THROW(LionConfig{}.validate());
    EXPECT_EQ(LionConfig{}.lr, 1e-4);
    EXPECT_EQ(LionConfig::full_scale().lr, 5e-6);
    EXPECT_THROW((LionConfig{0.0}.validate()), ConfigError);
    EXPECT_THROW((LionConfig{1e-3, 1.0}.validate()), ConfigError);
    EXPECT_THROW((LionConfig{1e-3, 0.9, -0.1}.validate()), ConfigError);
    EXPECT_EQ(parse_optimizer_kind("lion"), OptimizerKind::Lion);
    EXPECT_EQ(parse_optimizer_kind("sgd"), OptimizerKind::Sgd);
    EXPECT_THROW(parse_optimizer_kind("adam"), ConfigError);
}

TEST(SgdStep, Examples) {
    std::vector<float> w{1.0f}, g{2.0f};
    sgd_step(w, g, {}, SgdConfig{0.5});
    EXPECT_EQ(w[0], 0.0f);

    std::vector<float> still{0.3f, -0.7f}, zero(2, 0.0f);
    sgd_step(still, zero, {}, SgdConfig{0.5});
    EXPECT_EQ(still, (std::vector<float>{0.3f, -0.7f}));
    EXPECT_EQ(SgdConfig::full_scale().lr, 5e-4);
}

TEST(SgdStep, TwoHalfStepsEqualOneFullStep) {
    std::vector<float> a{0.5f, -1.25f, 2.0f}, b = a, g{0.75f, -0.5f, 0.25f};
    sgd_step(a, g, {}, SgdConfig{0.5});
    sgd_step(b, g, {}, SgdConfig{0.25});
    sgd_step(b, g, {}, SgdConfig{0.25});
    EXPECT_EQ(a, b);
}

TEST(SgdStep, MomentumAccumulatesVelocity) {
    std::vector<float> w{0.0f}, g{1.0f}, v{0.0f};
    SgdConfig cfg{0.1, 0.5};
    sgd_step(w, g, v, cfg);
    EXPECT_FLOAT_EQ(w[0], -0.1f);
    sgd_step(w, g, v, cfg);
    EXPECT_FLOAT_EQ(v[0], 1.5f);
    EXPECT_FLOAT_EQ(w[0], -0.25f);
    std::vector<float> short_v;
    EXPECT_THROW(sgd_step(w, g, short_v, cfg), ContractError);
}

TEST(Optimizer, LionKeepsOneBufferPerParameter) {
    ParameterList params{{"a", Tensor::zeros({3, 2}, true)}, {"b", Tensor::zeros({5}, true)}};
    Lion opt(params, LionConfig{});
    EXPECT_EQ(opt.buffers_per_parameter(), 1u);
    EXPECT_EQ(opt.state_size(), params.size());
    EXPECT_EQ(opt.momentum(0).size(), 6u);
    EXPECT_EQ(opt.momentum(1).size(), 5u);
    Sgd plain(params, SgdConfig{});
    EXPECT_EQ(plain.state_size(), 0u);
}

TEST(Optimizer, RejectsNonTrainableTensors) {
    ParameterList frozen{{"x", Tensor::zeros({2})}};
    EXPECT_THROW(Lion(frozen, LionConfig{}), ContractError);
}

TEST(Optimizer, ZeroGradsClearsAndIsIdempotent) {
    auto w = Tensor::from({2}, {1.0f, 2.0f}, true);
    ParameterList params{{"w", w}};
    auto opt = make_optimizer({OptimizerKind::Sgd, 0.1}, params);
    ops::sum(ops::mul(w, w)).backward();
    EXPECT_EQ(w.grad(), (std::vector<float>{2.0f, 4.0f}));
    opt->zero_grads();
    EXPECT_EQ(w.grad(), (std::vector<float>{0.0f, 0.0f}));
    opt->zero_grads();
    EXPECT_EQ(w.grad(), (std::vector<float>{0.0f, 0.0f}));
}

TEST(Optimizer, TrajectoryIsDeterministic) {
    auto run = [](OptimizerKind kind) {
        auto w = Tensor::from({3}, {0.5f, -1.0f, 2.0f}, true);
        auto target = Tensor::from({3}, {1.0f, 1.0f, -1.0f});
        auto opt = make_optimizer({kind, 0.05, 0.01}, {{"w", w}});
        std::vector<float> trace;
        for (int i = 0; i < 20; ++i) {
            opt->zero_grads();
            auto diff = ops::add(w, ops::scale(target, -1.0f));
            ops::sum(ops::mul(diff, diff)).backward();
            opt->step();
            trace.insert(trace.end(), w.data().begin(), w.data().end());
        }
        EXPECT_EQ(opt->steps(), 20u);
        return trace;
    };
    for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Lion}) {
        auto a = run(kind), b = run(kind);
        EXPECT_EQ(a, b);
    }
}

TEST(Optimizer, LionStepUsesTensorGradients) {
    auto w = Tensor::from({2}, {0.0f, 0.0f}, true);
    Lion opt({{"w", w}}, lion(0.01));
    ops::sum(ops::mul(w, Tensor::from({2}, {2.0f, -3.0f}))).backward();
    opt.step();
    EXPECT_NEAR(w.data()[0], -0.01, 1e-7);
    EXPECT_NEAR(w.data()[1], 0.01, 1e-7);
    EXPECT_NEAR(opt.momentum(0)[0], 0.02, 1e-7);
}

TEST(Optimizer, SgdClipsTheGlobalGradientNorm) {
    // grads (3, 0) and (4): global norm 5, capped to 1.
    auto a = Tensor::from({2}, {0.0f, 0.0f}, true);
    auto b = Tensor::from({1}, {0.0f}, true);
    Sgd opt({{"a", a}, {"b", b}}, SgdConfig{0.5, 0.0, 0.0, 1.0});
    ops::add(ops::sum(ops::mul(a, Tensor::from({2}, {3.0f, 0.0f}))),
             ops::sum(ops::mul(b, Tensor::from({1}, {4.0f}))))
        .backward();
    opt.step();
    EXPECT_NEAR(a.data()[0], -0.3, 1e-6);
    EXPECT_EQ(a.data()[1], 0.0f);
    EXPECT_NEAR(b.data()[0], -0.4, 1e-6);
    // Stored gradients are left untouched.
    EXPECT_EQ(a.grad(), (std::vector<float>{3.0f, 0.0f}));

    // Below the cap the step is plain SGD.
    auto c = Tensor::from({1}, {0.0f}, true);
    Sgd loose({{"c", c}}, SgdConfig{0.5, 0.0, 0.0, 10.0});
    ops::sum(ops::mul(c, Tensor::from({1}, {4.0f}))).backward();
    loose.step();
    EXPECT_NEAR(c.data()[0], -2.0, 1e-6);
    EXPECT_THROW(Sgd({{"c", c}}, SgdConfig{0.5, 0.0, 0.0, -1.0}), ConfigError);
}
