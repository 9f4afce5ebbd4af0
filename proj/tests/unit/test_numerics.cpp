// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "galora/autodiff.hpp"
#include "galora/grad_check.hpp"
#include "galora/ops.hpp"
#include "galora/optim.hpp"
#include "galora/tensor.hpp"
#include "test_support.hpp"

namespace galora::num {
namespace {

using testing::random_tensor;

Tensor row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({1, n}, std::move(v));
}

TEST(Ops, ReluClampsNegatives) {
    Tape t(false);
    EXPECT_EQ(relu(t.constant(row({-1.0, 0.0, 2.0}))).value(), row({0.0, 0.0, 2.0}));
}

TEST(Ops, MeanRowsOfOneRowIsThatRow) {
    Tape t(false);
    const Tensor x = row({1.5, -2.0, 3.25});
    EXPECT_EQ(mean_rows(t.constant(x)).value(), x);
}

TEST(Ops, SingleTokenAttentionReturnsValueRow) {
    Tape t(false);
    const std::uint8_t mask[] = {1};
    const Tensor v = row({0.3, -0.7, 4.0});
    const Var out = attention(t.constant(row({1.0, 2.0, 3.0})), t.constant(row({-1.0, 0.5, 2.0})), t.constant(v), mask);
    EXPECT_EQ(out.value(), v);
}

TEST(Ops, MatmulMatchesLoopOracle) {
    const Tensor a = random_tensor(7, 5, 1.0, 1), b = random_tensor(5, 9, 1.0, 2);
    Tape t(false);
    const Tensor c = matmul(t.constant(a), t.constant(b)).value();
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 9; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < 5; ++p) acc += a(i, p) * b(p, j);
            EXPECT_NEAR(c(i, j), acc, 1e-13);
        }
    }
}

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
    Tape t(false);
    try {
        matmul(t.constant(Tensor(2, 3)), t.constant(Tensor(4, 5)));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
        EXPECT_NE(msg.find('2'), std::string::npos) << msg;
        EXPECT_NE(msg.find('5'), std::string::npos) << msg;
    }
}

TEST(Ops, SoftmaxRowsSumToOne) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Tensor s = softmax_rows(random_tensor(6, 11, 5.0, seed));
        for (std::size_t i = 0; i < s.rows(); ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < s.cols(); ++j) total += s(i, j);
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Ops, CrossEntropyUniformIsLogC) {
    const std::size_t labels[] = {2};
    EXPECT_NEAR(cross_entropy_value(Tensor(1, 4, 0.7), labels), std::log(4.0), 1e-15);
}

TEST(Ops, CrossEntropyConfidentCase) {
    // -log(e^10 / (e^10 + e^-10)) = log1p(e^-20)
    const std::size_t labels[] = {0};
    EXPECT_DOUBLE_EQ(cross_entropy_value(row({10.0, -10.0}), labels), std::log1p(std::exp(-20.0)));
    EXPECT_NEAR(cross_entropy_value(row({10.0, -10.0}), labels), 2.06e-9, 1e-11);
}

TEST(Ops, CrossEntropyIsNonNegative) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<std::size_t> labels(5, seed % 3);
        EXPECT_GE(cross_entropy_value(random_tensor(5, 3, 30.0, seed), labels), 0.0);
    }
}

TEST(Ops, NonFiniteInputRejected) {
    Tape t(false);
    EXPECT_THROW(relu(t.constant(row({1.0, std::nan("")}))), NonFiniteError);
}

TEST(Autodiff, ConstantLossHasZeroGradient) {
    auto w = make_param("w", random_tensor(3, 3, 1.0, 1));
    Tape t;
    const Var loss = add(scale(sum(t.param(w)), 0.0), t.constant(Tensor(1, 1, 2.0)));
    t.backward(loss);
    for (double g : w->grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, LinearLossGradientIsInput) {
    // loss = sum(x W^T) -> dL/dW[j, c] = x[c] for every output j.
    auto w = make_param("w", random_tensor(4, 3, 1.0, 1));
    const Tensor x = row({0.5, -1.0, 2.0});
    Tape t;
    t.backward(sum(linear(t.constant(x), t.param(w))));
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(w->grad(j, c), x(0, c));
    }
}

TEST(Autodiff, FrozenParameterGetsNoGradient) {
    auto w = make_param("w", random_tensor(2, 2, 1.0, 1), true);
    Tape t;
    const Var loss = sum(t.param(w));
    EXPECT_FALSE(loss.requires_grad());
}

// Every differentiable op, composed in small losses and checked against central differences.
TEST(GradCheck, AllOpsMatchFiniteDifferences) {
    auto a = make_param("a", random_tensor(4, 6, 0.7, 1));
    auto w = make_param("w", random_tensor(5, 6, 0.5, 2));
    auto b = make_param("b", random_tensor(1, 5, 0.5, 3));
    auto gamma = make_param("gamma", random_tensor(1, 5, 0.5, 4));
    auto beta = make_param("beta", random_tensor(1, 5, 0.5, 5));
    auto qkv_w = make_param("qkv_w", random_tensor(12, 5, 0.5, 6));
    auto s = make_param("s", random_tensor(1, 1, 0.5, 7));
    const std::uint8_t mask[] = {1, 1, 0, 1};
    const std::size_t labels[] = {0, 3, 1, 2};
    const std::vector<std::size_t> offsets{0, 1, 3, 4, 4}, indices{1, 0, 2, 1};
    const CsrView adj{offsets, indices};
    GradCheckOptions opts;
    opts.samples_per_tensor = 1000;

    const auto report = grad_check({a, w, b, gamma, beta, qkv_w, s}, [&](Tape& t) {
        const Var h = layernorm(linear(t.param(a), t.param(w), t.param(b)), t.param(gamma), t.param(beta));
        const Var att = multi_head_attention(linear(gelu(h), t.param(qkv_w)), 2, mask);
        const Var mix = add(concat_cols(slice_cols(att, 0, 2), neighbor_mean(slice_cols(h, 2, 2), adj)),
                            scale_by(broadcast_rows(mean_rows(att, std::vector<std::size_t>{0, 3}), 4),
                                     sigmoid(t.param(s))));
        const Var pooled = masked_mean_rows(softmax(mix), mask);
        const Var logits = add_row(stack_rows(std::vector<Var>{slice_rows(mix, 0, 2), gather_rows(mix, std::vector<std::size_t>{3, 2})}),
                                   one_minus(pooled));
        return add(cross_entropy(slice_cols(logits, 0, 4), labels), scale(sum(matmul(h, t.param(w))), 0.1));
    }, opts);
    EXPECT_TRUE(report.passed());
    EXPECT_LT(report.max_rel_error, 1e-4);
    EXPECT_EQ(report.params.size(), 7u);
}

// Square with a backward that is off by a factor of two.
Var bad_square(Var x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v *= v;
    return x.tape->push("bad_square", std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 2.0 * 2.0 * xv[i] * g[i];
    });
}

TEST(GradCheck, CorruptedGradientIsFlagged) {
    auto p = make_param("p", random_tensor(3, 3, 1.0, 9));
    const auto report = grad_check({p}, [&](Tape& t) { return sum(bad_square(t.param(p))); });
    EXPECT_FALSE(report.passed());
    ASSERT_NE(report.find("p"), nullptr);
    EXPECT_NEAR(report.find("p")->max_rel_error, 0.5, 1e-6);  // |2g - g| / max(|2g|, |g|)
}

TEST(AdamW, DecayOnlyStepShrinksByExactFactor) {
    auto p = make_param("p", random_tensor(4, 4, 1.0, 1));
    const Tensor before = p->value;
    p->grad = Tensor(4, 4, 0.0);
    AdamWMoments m{Tensor(4, 4), Tensor(4, 4)};
    adamw_step(*p, m, {}, 1);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(p->value[i], before[i] * (1.0 - 3e-4 * 1e-2));
}

TEST(AdamW, FirstStepWithUnitGradientMovesByLr) {
    auto p = make_param("p", Tensor(1, 1, 0.0));
    p->grad = Tensor(1, 1, 1.0);
    AdamWMoments m{Tensor(1, 1), Tensor(1, 1)};
    adamw_step(*p, m, {}, 1);
    // m_hat = v_hat = 1, so the step is -lr / (1 + eps).
    EXPECT_NEAR(p->value[0], -3e-4, 1e-11);
}

TEST(AdamW, FrozenParameterUnchangedAfterManySteps) {
    auto live = make_param("live", random_tensor(2, 2, 1.0, 1));
    auto frozen = make_param("frozen", random_tensor(2, 2, 1.0, 2), true);
    const Tensor before = frozen->value;
    AdamW opt({live, frozen}, {});
    for (int i = 0; i < 50; ++i) {
        opt.zero_grad();
        Tape t;
        t.backward(sum(matmul(t.param(live), t.param(frozen))));
        opt.step();
    }
    EXPECT_EQ(frozen->value, before);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
    auto p = make_param("culprit", Tensor(1, 1, 0.0));
    p->grad = Tensor(1, 1, std::numeric_limits<double>::infinity());
    AdamWMoments m{Tensor(1, 1), Tensor(1, 1)};
    try {
        adamw_step(*p, m, {}, 1);
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_NE(std::string(e.what()).find("culprit"), std::string::npos);
    }
}

TEST(Dropout, ZeroRateIsIdentityAndSeedsAreReproducible) {
    const Tensor x = random_tensor(8, 8, 1.0, 3);
    Tape t(false);
    EXPECT_EQ(dropout(t.constant(x), 0.0, 1).value(), x);
    EXPECT_EQ(dropout(t.constant(x), 0.5, 7).value(), dropout(t.constant(x), 0.5, 7).value());
    EXPECT_NE(dropout(t.constant(x), 0.5, 7).value(), dropout(t.constant(x), 0.5, 8).value());
}

TEST(Gtsr, RoundTripIsFloat32Exact) {
    Tensor x = random_tensor(3, 5, 1.0, 4);
    for (auto& v : x.values()) v = static_cast<double>(static_cast<float>(v));
    std::stringstream buf;
    write_gtsr(buf, x);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 4), "GTSR");
    EXPECT_EQ(bytes.size(), 4u + 4u + 2 * 8u + 15 * 4u);
    EXPECT_EQ(read_gtsr(buf), x);
}

TEST(Gtsr, BadMagicRejected) {
    std::stringstream buf("NOPE\x02");
    EXPECT_ANY_THROW(read_gtsr(buf));
}

}  // namespace
}  // namespace galora::num
