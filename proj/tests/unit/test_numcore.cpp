#include <gtest/gtest.h>

#include <cmath>

#include "uaic/graph.hpp"
#include "uaic/nn.hpp"
#include "uaic/optim.hpp"
#include "uaic/rng.hpp"

using namespace uaic;
using namespace uaic::nc;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -3.0, double hi = 3.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

// Builds a parameter set holding `shapes` with random values in [-3, 3].
ParameterSet random_params(const std::vector<Shape>& shapes, std::uint64_t seed) {
    Rng rng(seed);
    ParameterSet ps;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        ps.add("p" + std::to_string(i), random_tensor(shapes[i], rng));
    }
    return ps;
}

// Reduces any node to a scalar through a fixed random projection so that
// every output coordinate influences the checked loss.
Var project(Graph& g, Var x, std::uint64_t seed) {
    Rng rng(seed);
    const auto& v = g.value(x);
    Var w = g.input(random_tensor(v.shape(), rng, -1.0, 1.0));
    return ops::sum(g, ops::mul(g, x, w));
}

} // namespace

TEST(Tensor, RejectsMismatchedData) {
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    EXPECT_THROW(Tensor({0, 2}), ShapeError);
}

TEST(Forward, MatmulIdentity) {
    Graph g;
    auto a = g.input(Tensor::matrix({{1, 2}, {3, 4}}));
    auto i = g.input(Tensor::identity(2));
    EXPECT_EQ(g.value(ops::matmul(g, a, i)), Tensor::matrix({{1, 2}, {3, 4}}));
}

TEST(Forward, MatmulShapeMismatchNamesOpAndShapes) {
    Graph g;
    auto a = g.input(Tensor({2, 3}));
    auto b = g.input(Tensor({2, 3}));
    try {
        ops::matmul(g, a, b);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("matmul"), std::string::npos);
        EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
    }
}

TEST(Forward, SoftmaxSymmetricRow) {
    Graph g;
    auto s = ops::softmax_rows(g, g.input(Tensor::matrix({{0, 0}})));
    EXPECT_DOUBLE_EQ(g.value(s)[0], 0.5);
    EXPECT_DOUBLE_EQ(g.value(s)[1], 0.5);
}

TEST(Forward, SoftmaxRowsSumToOne) {
    Rng rng(3);
    Graph g;
    auto s = ops::softmax_rows(g, g.input(random_tensor({5, 9}, rng, -20, 20)));
    const auto& v = g.value(s);
    for (std::size_t r = 0; r < 5; ++r) {
        double total = 0;
        for (std::size_t c = 0; c < 9; ++c) {
            total += v.at(r, c);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Forward, CrossEntropyUniformElevenClasses) {
    Graph g;
    auto logits = g.input(Tensor({1, 11}, 0.0));
    auto loss = ops::cross_entropy(g, logits, {4});
    EXPECT_NEAR(g.value(loss).item(), std::log(11.0), 1e-12);
    EXPECT_NEAR(g.value(loss).item(), 2.3979, 1e-4);
}

TEST(Forward, LayerNormStatistics) {
    Rng rng(5);
    Graph g;
    auto x = g.input(random_tensor({4, 16}, rng));
    auto gamma = g.input(Tensor({16}, 1.0));
    auto beta = g.input(Tensor({16}, 0.0));
    const auto& y = g.value(ops::layer_norm(g, x, gamma, beta, 0.0));
    for (std::size_t r = 0; r < 4; ++r) {
        double mean = 0, var = 0;
        for (std::size_t c = 0; c < 16; ++c) {
            mean += y.at(r, c);
        }
        mean /= 16;
        for (std::size_t c = 0; c < 16; ++c) {
            var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
        }
        var /= 16;
        EXPECT_LT(std::abs(mean), 1e-10);
        EXPECT_NEAR(var, 1.0, 1e-8);
    }
}

TEST(Forward, EmbeddingOutOfRange) {
    Graph g;
    auto table = g.input(Tensor({3, 2}, 1.0));
    EXPECT_THROW(ops::embedding(g, table, {0, 3}), std::out_of_range);
}

TEST(Forward, ClampAndConcat) {
    Graph g;
    auto x = g.input(Tensor::matrix({{-2, 0.5, 4}}));
    EXPECT_EQ(g.value(ops::clamp(g, x, -1, 1)), Tensor::matrix({{-1, 0.5, 1}}));
    auto y = g.input(Tensor::matrix({{7}}));
    EXPECT_EQ(g.value(ops::concat_cols(g, {x, y})), Tensor::matrix({{-2, 0.5, 4, 7}}));
}

TEST(Forward, Deterministic) {
    auto run = [] {
        Rng rng(9);
        Graph g;
        auto a = g.input(random_tensor({6, 7}, rng));
        auto b = g.input(random_tensor({7, 5}, rng));
        return g.value(ops::log_softmax_rows(g, ops::matmul(g, a, b)));
    };
    EXPECT_EQ(run(), run());
}

TEST(Backward, ProductRule) {
    Graph g;
    auto x1 = g.input(Tensor::scalar(2.0), true);
    auto x2 = g.input(Tensor::scalar(3.0), true);
    g.backward(ops::mul(g, x1, x2), nullptr);
    EXPECT_DOUBLE_EQ(g.grad(x1).item(), 3.0);
    EXPECT_DOUBLE_EQ(g.grad(x2).item(), 2.0);
}

TEST(Backward, SumOfSquares) {
    Graph g;
    auto x = g.input(Tensor({2}, std::vector<double>{1, 2}), true);
    g.backward(ops::sum(g, ops::mul(g, x, x)), nullptr);
    EXPECT_DOUBLE_EQ(g.grad(x)[0], 2.0);
    EXPECT_DOUBLE_EQ(g.grad(x)[1], 4.0);
}

TEST(Backward, NonScalarLossRejected) {
    Graph g;
    auto x = g.input(Tensor({2}, 1.0), true);
    EXPECT_THROW(g.backward(x, nullptr), ShapeError);
}

// Central-difference checks for every primitive at random points in [-3, 3].
struct PrimitiveCase {
    const char* name;
    std::vector<Shape> shapes;
    std::function<Var(Graph&, const std::vector<Var>&)> build;
};

class PrimitiveGrad : public ::testing::TestWithParam<PrimitiveCase> {};

TEST_P(PrimitiveGrad, MatchesFiniteDifferences) {
    const auto& c = GetParam();
    auto ps = random_params(c.shapes, 17);
    auto report = grad_check(ps, [&](Graph& g) {
        std::vector<Var> vars;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            vars.push_back(g.param(i));
        }
        Var out = c.build(g, vars);
        return g.value(out).size() == 1 ? out : project(g, out, 99);
    });
    EXPECT_LT(report.max_rel_error(), 1e-4) << c.name;
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, PrimitiveGrad,
    ::testing::Values(
        PrimitiveCase{"matmul", {{3, 4}, {4, 2}}, [](Graph& g, auto v) { return ops::matmul(g, v[0], v[1]); }},
        PrimitiveCase{"matmul_nt", {{3, 4}, {5, 4}}, [](Graph& g, auto v) { return ops::matmul_nt(g, v[0], v[1]); }},
        PrimitiveCase{"add", {{2, 3}, {2, 3}}, [](Graph& g, auto v) { return ops::add(g, v[0], v[1]); }},
        PrimitiveCase{"add_bias", {{3, 4}, {4}}, [](Graph& g, auto v) { return ops::add_bias(g, v[0], v[1]); }},
        PrimitiveCase{"mul", {{2, 3}, {2, 3}}, [](Graph& g, auto v) { return ops::mul(g, v[0], v[1]); }},
        PrimitiveCase{"scale", {{2, 3}}, [](Graph& g, auto v) { return ops::scale(g, v[0], -1.7); }},
        PrimitiveCase{"softmax", {{3, 5}}, [](Graph& g, auto v) { return ops::softmax_rows(g, v[0]); }},
        PrimitiveCase{"log_softmax", {{3, 5}}, [](Graph& g, auto v) { return ops::log_softmax_rows(g, v[0]); }},
        PrimitiveCase{"layer_norm",
                      {{3, 6}, {6}, {6}},
                      [](Graph& g, auto v) { return ops::layer_norm(g, v[0], v[1], v[2]); }},
        PrimitiveCase{"gelu", {{3, 4}}, [](Graph& g, auto v) { return ops::gelu(g, v[0]); }},
        PrimitiveCase{"sigmoid", {{3, 4}}, [](Graph& g, auto v) { return ops::sigmoid(g, v[0]); }},
        PrimitiveCase{"embedding", {{5, 3}}, [](Graph& g, auto v) { return ops::embedding(g, v[0], {4, 0, 4, 2}); }},
        PrimitiveCase{"concat_cols",
                      {{2, 3}, {2, 2}},
                      [](Graph& g, auto v) { return ops::concat_cols(g, {v[0], v[1]}); }},
        PrimitiveCase{"concat_rows",
                      {{2, 3}, {1, 3}},
                      [](Graph& g, auto v) { return ops::concat_rows(g, {v[0], v[1]}); }},
        PrimitiveCase{"slice_rows", {{5, 3}}, [](Graph& g, auto v) { return ops::slice_rows(g, v[0], 1, 3); }},
        PrimitiveCase{"slice_cols", {{3, 5}}, [](Graph& g, auto v) { return ops::slice_cols(g, v[0], 2, 2); }},
        PrimitiveCase{"mean_rows", {{4, 3}}, [](Graph& g, auto v) { return ops::mean_rows(g, v[0]); }},
        PrimitiveCase{"max_rows", {{4, 3}}, [](Graph& g, auto v) { return ops::max_rows(g, v[0]); }},
        PrimitiveCase{"sum", {{4, 3}}, [](Graph& g, auto v) { return ops::sum(g, v[0]); }},
        PrimitiveCase{"cross_entropy",
                      {{3, 6}},
                      [](Graph& g, auto v) { return ops::cross_entropy(g, v[0], {1, 5, 0}, {1.0, 0.5, 2.0}); }},
        PrimitiveCase{"squared_error",
                      {{2, 4}},
                      [](Graph& g, auto v) { return ops::squared_error(g, v[0], Tensor({2, 4}, 0.25)); }},
        PrimitiveCase{"clamp", {{3, 4}}, [](Graph& g, auto v) { return ops::clamp(g, v[0], -1.0, 1.5); }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(GradCheck, QuadraticIsExactToRoundoff) {
    ParameterSet ps;
    ps.add("x", Tensor({3}, std::vector<double>{0.5, -1.25, 2.0}));
    auto report = grad_check(ps, [](Graph& g) {
        Var x = g.param(0);
        return ops::sum(g, ops::mul(g, x, x));
    });
    EXPECT_LT(report.max_rel_error(), 1e-8);
}

TEST(GradCheck, SoftmaxCrossEntropyChain) {
    auto ps = random_params({{4, 7}, {7, 5}}, 23);
    auto report = grad_check(ps, [](Graph& g) {
        Var h = ops::matmul(g, g.param(0), g.param(1));
        return ops::cross_entropy(g, h, {0, 4, 2, 2});
    });
    EXPECT_LT(report.max_rel_error(), 1e-5);
}

TEST(GradCheck, TransformerBlockToyConfig) {
    Rng rng(4);
    ParameterSet ps;
    auto block = nn::TransformerBlock::create(ps, "blk", 8, 2, 16, rng);
    const Tensor x = random_tensor({5, 8}, rng, -1, 1);
    Tensor mask = nn::full_mask(5);
    mask.at(0, 3) = -1e30;
    auto report = grad_check(ps, [&](Graph& g) {
        Var m = g.input(mask);
        return project(g, block(g, g.input(x), m, 0.0), 7);
    });
    EXPECT_LT(report.max_rel_error(), 1e-4);
}

TEST(GradCheck, RelativeErrorFloor) {
    EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-9 / 1e-8);
    EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}

TEST(Dropout, IdentityUnlessTraining) {
    Graph g;
    auto x = g.input(Tensor({4, 4}, 1.0));
    EXPECT_EQ(g.value(ops::dropout(g, x, 0.5)), Tensor({4, 4}, 1.0));
    Graph t;
    t.set_training(true, 5);
    auto y = ops::dropout(t, t.input(Tensor({20, 20}, 1.0)), 0.5);
    std::size_t zeros = 0;
    for (double v : t.value(y).data()) {
        EXPECT_TRUE(v == 0.0 || v == 2.0);
        zeros += v == 0.0;
    }
    EXPECT_GT(zeros, 100u);
    EXPECT_LT(zeros, 300u);
}

TEST(Adam, FirstStepIsSignTimesLr) {
    for (double grad : {0.37, -12.0, 1e-3}) {
        ParameterSet ps;
        ps.add("w", Tensor::scalar(1.0));
        AdamConfig cfg;
        cfg.lr = 0.01;
        Adam adam(ps, cfg);
        Gradients gr(ps);
        gr[0][0] = grad;
        adam.step(gr);
        const double expected = 1.0 - 0.01 * (grad > 0 ? 1.0 : -1.0);
        EXPECT_NEAR(ps[0].value.item(), expected, 1e-7) << grad;
    }
}

TEST(Adam, ZeroGradientLeavesParameters) {
    ParameterSet ps;
    ps.add("w", Tensor({3}, std::vector<double>{1, 2, 3}));
    Adam adam(ps, AdamConfig{});
    Gradients gr(ps);
    adam.step(gr);
    adam.step(gr);
    EXPECT_EQ(ps[0].value, Tensor({3}, std::vector<double>{1, 2, 3}));
    EXPECT_EQ(adam.steps(), 2u);
}

TEST(Adam, NaNGradientRefused) {
    ParameterSet ps;
    ps.add("w", Tensor::scalar(1.0));
    Adam adam(ps, AdamConfig{});
    Gradients gr(ps);
    gr[0][0] = std::nan("");
    EXPECT_THROW(adam.step(gr), NumericError);
    EXPECT_EQ(ps[0].value.item(), 1.0);
    EXPECT_EQ(adam.steps(), 0u);
}

TEST(Adam, WarmupThenStepDecay) {
    AdamConfig cfg;
    cfg.lr = 1.0;
    cfg.warmup_steps = 4;
    cfg.decay_factor = 0.9;
    cfg.decay_interval = 10;
    EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 1), 0.25);
    EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 3), 0.75);
    EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 4), 1.0);
    EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 13), 1.0);
    EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 14), 0.9);
    EXPECT_NEAR(scheduled_lr(cfg, 34), 0.729, 1e-15);
}
