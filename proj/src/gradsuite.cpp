#include "uaic/gradsuite.hpp"

#include <functional>

#include "uaic/insertion_model.hpp"
#include "uaic/nn.hpp"
#include "uaic/rng.hpp"
#include "uaic/uncertainty.hpp"

namespace uaic::nc {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

Var project(Graph& g, Var x, std::uint64_t seed) {
    Rng rng(seed);
    Var w = g.input(random_tensor(g.value(x).shape(), rng, -1.0, 1.0));
    return ops::sum(g, ops::mul(g, x, w));
}

struct Primitive {
    const char* name;
    std::vector<Shape> shapes;
    std::function<Var(Graph&, const std::vector<Var>&)> build;
};

std::vector<Primitive> primitives() {
    using V = const std::vector<Var>&;
    return {
        {"matmul", {{3, 4}, {4, 2}}, [](Graph& g, V v) { return ops::matmul(g, v[0], v[1]); }},
        {"matmul_nt", {{3, 4}, {5, 4}}, [](Graph& g, V v) { return ops::matmul_nt(g, v[0], v[1]); }},
        {"add", {{2, 3}, {2, 3}}, [](Graph& g, V v) { return ops::add(g, v[0], v[1]); }},
        {"add_bias", {{3, 4}, {4}}, [](Graph& g, V v) { return ops::add_bias(g, v[0], v[1]); }},
        {"mul", {{2, 3}, {2, 3}}, [](Graph& g, V v) { return ops::mul(g, v[0], v[1]); }},
        {"scale", {{2, 3}}, [](Graph& g, V v) { return ops::scale(g, v[0], -1.7); }},
        {"softmax", {{3, 5}}, [](Graph& g, V v) { return ops::softmax_rows(g, v[0]); }},
        {"log_softmax", {{3, 5}}, [](Graph& g, V v) { return ops::log_softmax_rows(g, v[0]); }},
        {"layer_norm", {{3, 6}, {6}, {6}}, [](Graph& g, V v) { return ops::layer_norm(g, v[0], v[1], v[2]); }},
        {"gelu", {{3, 4}}, [](Graph& g, V v) { return ops::gelu(g, v[0]); }},
        {"sigmoid", {{3, 4}}, [](Graph& g, V v) { return ops::sigmoid(g, v[0]); }},
        {"embedding", {{5, 3}}, [](Graph& g, V v) { return ops::embedding(g, v[0], {4, 0, 4, 2}); }},
        {"concat_cols", {{2, 3}, {2, 2}}, [](Graph& g, V v) { return ops::concat_cols(g, {v[0], v[1]}); }},
        {"concat_rows", {{2, 3}, {1, 3}}, [](Graph& g, V v) { return ops::concat_rows(g, {v[0], v[1]}); }},
        {"slice_rows", {{5, 3}}, [](Graph& g, V v) { return ops::slice_rows(g, v[0], 1, 3); }},
        {"slice_cols", {{3, 5}}, [](Graph& g, V v) { return ops::slice_cols(g, v[0], 2, 2); }},
        {"mean_rows", {{4, 3}}, [](Graph& g, V v) { return ops::mean_rows(g, v[0]); }},
        {"max_rows", {{4, 3}}, [](Graph& g, V v) { return ops::max_rows(g, v[0]); }},
        {"sum", {{4, 3}}, [](Graph& g, V v) { return ops::sum(g, v[0]); }},
        {"cross_entropy", {{3, 6}},
         [](Graph& g, V v) { return ops::cross_entropy(g, v[0], {1, 5, 0}, {1.0, 0.5, 2.0}); }},
        {"squared_error", {{2, 4}},
         [](Graph& g, V v) { return ops::squared_error(g, v[0], Tensor({2, 4}, 0.25)); }},
        {"clamp", {{3, 4}}, [](Graph& g, V v) { return ops::clamp(g, v[0], -1.0, 1.5); }},
    };
}

GradSuiteResult summarize(const std::string& name, const GradCheckReport& r) {
    GradSuiteResult out{name, 0, r.max_rel_error()};
    for (const auto& e : r.entries) {
        out.checked += e.checked;
    }
    return out;
}

corpus::Vocabulary toy_vocab() {
    std::vector<std::string> t = {"[PAD]", "[BOS]", "[EOS]", "[NONE]"};
    for (int i = 0; i < 10; ++i) {
        t.push_back("w" + std::to_string(i));
    }
    return corpus::Vocabulary(t);
}

} // namespace

std::vector<GradSuiteResult> run_gradient_suite(std::uint64_t seed) {
    std::vector<GradSuiteResult> out;
    for (const auto& p : primitives()) {
        Rng rng(seed);
        ParameterSet ps;
        for (std::size_t i = 0; i < p.shapes.size(); ++i) {
            ps.add("p" + std::to_string(i), random_tensor(p.shapes[i], rng, -3.0, 3.0));
        }
        const auto report = grad_check(ps, [&](Graph& g) {
            std::vector<Var> vars;
            for (std::size_t i = 0; i < ps.size(); ++i) {
                vars.push_back(g.param(i));
            }
            Var y = p.build(g, vars);
            return g.value(y).size() == 1 ? y : project(g, y, seed + 82);
        });
        out.push_back(summarize(p.name, report));
    }

    {
        Rng rng(seed + 1);
        ParameterSet ps;
        const auto block = nn::TransformerBlock::create(ps, "blk", 8, 2, 16, rng);
        const Tensor x = random_tensor({5, 8}, rng, -1, 1);
        Tensor mask = nn::full_mask(5);
        mask.at(0, 3) = -1e30;
        out.push_back(summarize("transformer_block", grad_check(ps, [&](Graph& g) {
                                    return project(g, block(g, g.input(x), g.input(mask), 0.0), seed + 3);
                                })));
    }

    Rng frng(seed + 2);
    const Tensor features = random_tensor({3, 6}, frng, -1, 1);
    {
        std::vector<corpus::TokenId> ids;
        for (corpus::TokenId i = 4; i < 14; ++i) {
            ids.push_back(i);
        }
        const corpus::BoWVocabulary bow(ids, {});
        ue::UEModel m(ue::UEConfig{6, 8, 2, 16}, bow.size(), seed);
        const auto psi = bow.presence({4, 8, 11});
        out.push_back(summarize("ue_loss", grad_check(m.params(), [&](Graph& g) {
                                    return ue::ue_loss(g, m.forward(g, features), psi);
                                })));
    }
    const model::ModelConfig tiny{6, 8, 2, 16, 1, 10, 0.0};
    const auto vocab = toy_vocab();
    {
        model::InsertionModel m(tiny, vocab, seed);
        const staging::StagePair pair{"s", {1, 4, 6, 2}, {8, corpus::kNoneId, 5}};
        out.push_back(summarize("insertion_loss", grad_check(m.params(), [&](Graph& g) {
                                    return model::insertion_loss(g, m, pair, features, 0.7);
                                }, 1e-5, 24, seed)));
    }
    for (auto mode : {model::BaselineMode::AR, model::BaselineMode::NAIC}) {
        model::BaselineModel m(mode, tiny, vocab, seed);
        out.push_back(summarize(model::mode_name(mode) + "_loss", grad_check(m.params(), [&](Graph& g) {
                                    return model::baseline_loss(g, m, {4, 9, 6}, features);
                                }, 1e-5, 24, seed)));
    }
    return out;
}

} // namespace uaic::nc
