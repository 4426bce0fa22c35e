#include <gtest/gtest.h>

#include <cmath>

#include "uaic/errors.hpp"
#include "uaic/evalbench.hpp"

using namespace uaic;
using namespace uaic::eval;

namespace {

decode::DecodeTrace fixed_trace(std::size_t evals, std::size_t length) {
    decode::DecodeTrace tr;
    tr.evaluations = evals;
    tr.caption.assign(length, 4);
    tr.stages.assign(evals > 0 ? evals - 1 : 0, decode::StageRecord{});
    tr.wall_ns = 1000 * evals;
    return tr;
}

std::vector<corpus::SceneInstance> scenes(std::size_t n, std::size_t len) {
    std::vector<corpus::SceneInstance> out;
    for (std::size_t i = 0; i < n; ++i) {
        corpus::SceneInstance s;
        s.id = "s" + std::to_string(i);
        s.caption.assign(len, "t4");
        out.push_back(s);
    }
    return out;
}

BenchInput mock_input(std::size_t ar_evals, std::size_t uaic_evals, std::size_t len) {
    BenchInput in;
    in.scenes = scenes(6, len);
    in.encode = [](const corpus::SceneInstance&) { return Tensor({1, 2}, 0.0); };
    in.detokenize = [](const std::vector<TokenId>& ids) {
        Sentence s;
        for (auto t : ids) {
            s.push_back("t" + std::to_string(t));
        }
        return s;
    };
    in.modes = {{"ar", [=](const Tensor&) { return fixed_trace(ar_evals, len); }},
                {"naic", [=](const Tensor&) { return fixed_trace(1, len); }},
                {"uaic-greedy", [=](const Tensor&) { return fixed_trace(uaic_evals, len); }}};
    return in;
}

} // namespace

TEST(Bleu, IdentityIsOne) {
    const std::vector<Sentence> c = {{"a", "red", "cube", "on", "a", "table"}, {"two", "blue", "balls", "here"}};
    for (int n = 1; n <= 4; ++n) {
        EXPECT_DOUBLE_EQ(corpus_bleu(c, c, n), 1.0);
    }
}

TEST(Bleu, ClippedUnigramExample) {
    EXPECT_NEAR(corpus_bleu({{"a", "a", "a"}}, {{"a", "cube"}}, 1), 1.0 / 3.0, 1e-15);
}

TEST(Bleu, BrevityPenalty) {
    // c = 2, r = 4, unigram precision 1.
    EXPECT_NEAR(corpus_bleu({{"a", "b"}}, {{"a", "b", "c", "d"}}, 1), std::exp(1.0 - 2.0), 1e-15);
}

TEST(Bleu, EmptyCandidateAndSmoothing) {
    EXPECT_EQ(corpus_bleu({{}}, {{"a", "cube"}}, 4), 0.0);
    // No 4-gram in a 3-token candidate: 1e-9 replaces the zero precision.
    const double b = corpus_bleu({{"a", "red", "cube"}}, {{"a", "red", "cube"}}, 4);
    EXPECT_NEAR(b, std::pow(1e-9, 0.25), 1e-12);
    EXPECT_GT(b, 0.0);
}

TEST(Bleu, RejectsBadInput) {
    EXPECT_THROW(corpus_bleu({}, {}, 4), std::invalid_argument);
    EXPECT_THROW(corpus_bleu({{"a"}}, {{"a"}, {"b"}}, 4), std::invalid_argument);
    EXPECT_THROW(corpus_bleu({{"a"}}, {{"a"}}, 5), std::invalid_argument);
    EXPECT_THROW(corpus_bleu({{"a"}}, {{"a"}}, 0), std::invalid_argument);
}

TEST(Bleu, AllOrdersAgreeWithSingle) {
    const std::vector<Sentence> c = {{"a", "red", "cube", "left", "of", "a", "ball"}, {"x", "y", "z"}};
    const std::vector<Sentence> r = {{"a", "red", "cube", "right", "of", "a", "ball"}, {"x", "y", "w", "z"}};
    const auto all = corpus_bleu_all(c, r);
    for (int n = 1; n <= 4; ++n) {
        EXPECT_DOUBLE_EQ(all[static_cast<std::size_t>(n - 1)], corpus_bleu(c, r, n));
        EXPECT_GE(all[static_cast<std::size_t>(n - 1)], 0.0);
        EXPECT_LE(all[static_cast<std::size_t>(n - 1)], 1.0);
    }
}

TEST(Bench, StepSpeedupArithmetic) {
    const auto report = bench_decode(mock_input(17, 5, 16));
    const auto* ar = report.find("ar");
    const auto* naic = report.find("naic");
    const auto* uaic = report.find("uaic-greedy");
    ASSERT_TRUE(ar && naic && uaic);
    EXPECT_DOUBLE_EQ(*ar->eval_speedup, 1.0);
    EXPECT_DOUBLE_EQ(*uaic->eval_speedup, 3.4);
    EXPECT_DOUBLE_EQ(naic->mean_evals, 1.0);
    EXPECT_DOUBLE_EQ(*naic->eval_speedup, 17.0);
    EXPECT_EQ(report.rows.size(), 18u);
    EXPECT_EQ(report.repeats, 3u);
}

TEST(Bench, ParallelWorkersGiveSameCounts) {
    auto in = mock_input(9, 4, 8);
    const auto one = bench_decode(in);
    in.workers = 3;
    const auto three = bench_decode(in);
    ASSERT_EQ(one.rows.size(), three.rows.size());
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        EXPECT_EQ(one.rows[i].scene, three.rows[i].scene);
        EXPECT_EQ(one.rows[i].evals, three.rows[i].evals);
    }
}

TEST(Bench, RejectsMissingModelAndNondeterminism) {
    auto in = mock_input(9, 4, 8);
    in.modes.push_back({"broken", nullptr});
    EXPECT_THROW(bench_decode(in), std::invalid_argument);
    auto flaky = mock_input(9, 4, 8);
    auto counter = std::make_shared<std::size_t>(0);
    flaky.modes[2].decode = [counter](const Tensor&) { return fixed_trace(2 + (*counter)++ % 2, 8); };
    EXPECT_THROW(bench_decode(flaky), std::logic_error);
}

TEST(Bench, ReportJsonRoundTripAndCsv) {
    const auto report = bench_decode(mock_input(17, 5, 16));
    EXPECT_EQ(BenchReport::from_json(report.to_json()), report);
    const auto csv = report.to_csv();
    EXPECT_EQ(csv.rfind("scene,mode,evals,wall_ns,length\n", 0), 0u);
    EXPECT_NE(csv.find("s0,uaic-greedy,5,"), std::string::npos);
    EXPECT_NE(report.to_text().find("uaic-greedy"), std::string::npos);
}

TEST(Complexity, RowsRatiosAndRoundTrip) {
    const auto table = complexity_report(bench_decode(mock_input(17, 5, 16)));
    ASSERT_EQ(table.rows.size(), 4u);
    EXPECT_EQ(table.rows[0].model, "AIC");
    EXPECT_DOUBLE_EQ(*table.rows[0].measured_ratio, 1.0);
    EXPECT_EQ(table.rows[2].model, "IR-NAIC");
    EXPECT_FALSE(table.rows[2].measured_ratio.has_value());
    EXPECT_EQ(table.rows[3].model, "UAIC");
    EXPECT_DOUBLE_EQ(*table.rows[3].measured_ratio, 3.4);
    ASSERT_EQ(table.buckets.size(), 1u);
    EXPECT_EQ(table.buckets[0].length, 16u);
    EXPECT_DOUBLE_EQ(table.buckets[0].theoretical_ratio, 4.0);
    EXPECT_EQ(ComplexityTable::from_json(table.to_json()), table);
    EXPECT_NE(table.to_text().find("logN(D+Y)+E"), std::string::npos);
}

TEST(Complexity, LogSpeedupFormula) {
    EXPECT_DOUBLE_EQ(log_speedup(2), 2.0);
    EXPECT_DOUBLE_EQ(log_speedup(15), 15.0 / 4.0);
    EXPECT_DOUBLE_EQ(log_speedup(16), 4.0);
    EXPECT_DOUBLE_EQ(log_speedup(17), 17.0 / 5.0);
    EXPECT_THROW(log_speedup(1), std::invalid_argument);
}

TEST(Stats, MeanAndSampleStdev) {
    EXPECT_DOUBLE_EQ(mean({1, 2, 3}), 2.0);
    EXPECT_DOUBLE_EQ(sample_stdev({1, 2, 3}), 1.0);
    EXPECT_DOUBLE_EQ(sample_stdev({5}), 0.0);
    EXPECT_THROW(mean({}), std::invalid_argument);
}

TEST(Orders, ScoresPerOrder) {
    const std::vector<double> u = {0.2, 0.9, 0.5};
    EXPECT_EQ(pipeline::order_scores(pipeline::Order::Uncertainty, u, "s", 1), u);
    const auto anti = pipeline::order_scores(pipeline::Order::AntiUncertainty, u, "s", 1);
    EXPECT_DOUBLE_EQ(anti[0], 0.8);
    EXPECT_DOUBLE_EQ(anti[1], 1.0 - 0.9);
    const auto r1 = pipeline::order_scores(pipeline::Order::Random, u, "s", 1);
    EXPECT_EQ(r1, pipeline::order_scores(pipeline::Order::Random, u, "s", 1));
    EXPECT_NE(r1, pipeline::order_scores(pipeline::Order::Random, u, "s", 2));
    for (auto o : {"uncertainty", "anti-uncertainty", "random", "sequential"}) {
        EXPECT_EQ(pipeline::order_name(pipeline::parse_order(o)), o);
    }
    EXPECT_THROW(pipeline::parse_order("reverse"), std::invalid_argument);
}

TEST(RunConfigJson, RoundTripAndStrictness) {
    pipeline::RunConfig c;
    c.apply_seed(4);
    c.train.none_weight = 0.5;
    const auto back = pipeline::RunConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
    auto j = c.to_json();
    j["learning_rate"] = 1.0;
    EXPECT_THROW(pipeline::RunConfig::from_json(j), DataError);
    j = c.to_json();
    j["decode"]["beam"] = "wide";
    EXPECT_THROW(pipeline::RunConfig::from_json(j), DataError);
    j = c.to_json();
    j["model"]["feature_dim"] = 16;
    EXPECT_THROW(pipeline::RunConfig::from_json(j), DataError);
}

TEST(Ablation, RequiresThreeSeeds) {
    pipeline::RunConfig c;
    c.corpus.scenes = 20;
    c.corpus.heldout = 5;
    const auto data = pipeline::make_dataset(c);
    pipeline::ModelCache cache;
    OrderAblationConfig ab;
    ab.seeds = {1, 2};
    EXPECT_THROW(run_order_ablation(data, c, ab, cache), std::invalid_argument);
}

TEST(Ablation, TinyRunIsDeterministicAndFinite) {
    pipeline::RunConfig c;
    c.corpus.scenes = 40;
    c.corpus.heldout = 8;
    c.features.dim = 8;
    c.ue = {8, 8, 2, 16};
    c.ue_train.epochs = 1;
    c.model = model::ModelConfig{8, 8, 2, 16, 1, 24, 0.0};
    c.train.epochs = 1;
    c.train.warmup_steps = 2;
    const auto data = pipeline::make_dataset(c);
    OrderAblationConfig ab;
    ab.orders = {pipeline::Order::Random, pipeline::Order::Sequential};
    pipeline::ModelCache cache_a, cache_b;
    const auto t1 = run_order_ablation(data, c, ab, cache_a);
    const auto t2 = run_order_ablation(data, c, ab, cache_b);
    ASSERT_EQ(t1.rows.size(), 2u);
    for (std::size_t i = 0; i < t1.rows.size(); ++i) {
        EXPECT_EQ(t1.rows[i], t2.rows[i]);
        EXPECT_TRUE(std::isfinite(t1.rows[i].mean));
        EXPECT_EQ(t1.rows[i].bleu4.size(), 3u);
    }
    EXPECT_NE(t1.to_text().find("random"), std::string::npos);
}
