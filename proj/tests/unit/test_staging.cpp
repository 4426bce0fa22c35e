#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "uaic/errors.hpp"
#include "uaic/rng.hpp"
#include "uaic/staging.hpp"

using namespace uaic;
using namespace uaic::staging;
using corpus::kNoneId;

namespace {

using Phi = std::vector<std::uint8_t>;

// Token ids for the running example "a red cube on a table".
constexpr TokenId A = 10, RED = 11, CUBE = 12, ON = 13, TABLE = 14;
const std::vector<TokenId> kCaption = {A, RED, CUBE, ON, A, TABLE};
const std::vector<double> kU = {0.9, 0.3, 0.1, 0.8, 0.9, 0.2};

std::vector<TokenId> tokens_of(const Stage& s) {
    std::vector<TokenId> out;
    for (const auto& t : s.tokens) {
        out.push_back(t.token);
    }
    return out;
}

} // namespace

TEST(DpMask, ThreeTokenExample) {
    const std::vector<double> u = {0.9, 0.1, 0.8};
    auto m = dp_mask(u);
    EXPECT_EQ(m.phi, (Phi{1, 0, 1}));
    EXPECT_NEAR(m.value, 1.7, 1e-12);
    EXPECT_EQ(brute_force_mask(u).value, m.value);
}

TEST(DpMask, SingleTokenIsMasked) {
    const std::vector<double> u = {0.5};
    auto m = dp_mask(u);
    EXPECT_EQ(m.phi, (Phi{1}));
    EXPECT_DOUBLE_EQ(m.value, 0.5);
}

TEST(DpMask, TieMasksLaterWord) {
    const std::vector<double> u = {0.5, 0.5};
    EXPECT_EQ(dp_mask(u).phi, (Phi{0, 1}));
    EXPECT_EQ(brute_force_mask(u).phi, (Phi{0, 1}));
}

TEST(DpMask, SixTokenHandTrace) {
    auto m = dp_mask(kU);
    EXPECT_EQ(m.phi, (Phi{1, 0, 0, 1, 0, 1}));
    EXPECT_NEAR(m.value, 1.9, 1e-12);
    EXPECT_EQ(brute_force_mask(kU).phi, m.phi);
}

TEST(DpMask, EmptyRejected) {
    EXPECT_THROW(dp_mask(std::vector<double>{}), std::invalid_argument);
}

TEST(BruteForce, AllOnesValueTwo) {
    const std::vector<double> u = {1, 1, 1, 1};
    auto m = brute_force_mask(u);
    EXPECT_DOUBLE_EQ(m.value, 2.0);
    EXPECT_TRUE(m.non_adjacent());
    EXPECT_EQ(m.masked(), 2u);
}

TEST(BruteForce, SizeLimits) {
    EXPECT_EQ(brute_force_mask(std::vector<double>{0.0}).phi, (Phi{1}));
    EXPECT_THROW(brute_force_mask(std::vector<double>(23, 0.5)), std::invalid_argument);
}

TEST(DpMask, MatchesOracleOnRandomInputs) {
    Rng rng(2024);
    for (int c = 0; c < 300; ++c) {
        const std::size_t T = 1 + rng.below(14);
        std::vector<double> u(T);
        for (auto& v : u) {
            v = rng.uniform();
        }
        auto dp = dp_mask(u);
        auto bf = brute_force_mask(u);
        ASSERT_EQ(dp.value, bf.value);
        ASSERT_EQ(dp.phi.size(), T);
        ASSERT_TRUE(dp.non_adjacent());
        double sum = 0;
        for (std::size_t t = 0; t < T; ++t) {
            sum += dp.phi[t] * u[t];
        }
        ASSERT_NEAR(sum, dp.value, 1e-12);
    }
}

TEST(Decompose, RunningExample) {
    auto plan = decompose(kCaption, kU);
    ASSERT_EQ(plan.stage_count(), 3u);
    EXPECT_EQ(tokens_of(plan.stages[0]), (std::vector<TokenId>{CUBE}));
    EXPECT_EQ(tokens_of(plan.stages[1]), (std::vector<TokenId>{RED, CUBE, A}));
    EXPECT_EQ(tokens_of(plan.stages[2]), kCaption);
    EXPECT_EQ(plan.stages[1].tokens[2].position, 4u);
    EXPECT_TRUE(reconstructs(plan));
    EXPECT_EQ(replay(plan), kCaption);
}

TEST(Decompose, SingleToken) {
    auto plan = decompose({CUBE}, std::vector<double>{0.3});
    EXPECT_EQ(plan.stage_count(), 1u);
    EXPECT_TRUE(reconstructs(plan));
}

TEST(Decompose, StageCountBounds) {
    Rng rng(8);
    for (int c = 0; c < 200; ++c) {
        const std::size_t T = 1 + rng.below(40);
        std::vector<TokenId> cap(T);
        std::vector<double> u(T);
        for (std::size_t i = 0; i < T; ++i) {
            cap[i] = 4 + rng.below(20);
            u[i] = rng.uniform();
        }
        auto plan = decompose(cap, u);
        const auto K = plan.stage_count();
        EXPECT_LE(K, T);
        EXPECT_GE(K, static_cast<std::size_t>(std::ceil(std::log2(T + 1.0))));
        ASSERT_TRUE(reconstructs(plan));
        for (std::size_t k = 1; k < K; ++k) {
            EXPECT_LT(plan.stages[k - 1].tokens.size(), plan.stages[k].tokens.size());
        }
    }
}

TEST(Pairs, RunningExample) {
    auto pairs = build_training_pairs(decompose(kCaption, kU), "s0");
    ASSERT_EQ(pairs.size(), 4u);
    EXPECT_EQ(pairs[0].input, (std::vector<TokenId>{corpus::kBosId, corpus::kEosId}));
    EXPECT_EQ(pairs[0].targets, (std::vector<TokenId>{CUBE}));
    EXPECT_EQ(pairs[2].input, (std::vector<TokenId>{corpus::kBosId, RED, CUBE, A, corpus::kEosId}));
    EXPECT_EQ(pairs[2].targets, (std::vector<TokenId>{A, kNoneId, ON, TABLE}));
    EXPECT_EQ(pairs[3].slot_count(), 7u);
    for (auto t : pairs[3].targets) {
        EXPECT_EQ(t, kNoneId);
    }
    for (const auto& p : pairs) {
        EXPECT_EQ(p.slot_count() + 1, p.input.size());
    }
}

TEST(Pairs, DuplicateSlotRejected) {
    StagePlan plan;
    plan.caption = {RED, CUBE};
    Stage s;
    s.tokens = {{RED, 0}, {CUBE, 1}};
    s.inserted = {{0, RED, 0}, {0, CUBE, 1}};
    plan.stages.push_back(s);
    EXPECT_THROW(build_training_pairs(plan, "bad"), std::invalid_argument);
    EXPECT_THROW(replay(plan), std::invalid_argument);
    EXPECT_FALSE(reconstructs(plan));
}

TEST(Pairs, SequentialPlanOneTokenPerStage) {
    auto plan = sequential_plan(kCaption);
    EXPECT_EQ(plan.stage_count(), kCaption.size());
    EXPECT_TRUE(reconstructs(plan));
    auto pairs = build_training_pairs(plan, "seq");
    EXPECT_EQ(pairs.size(), kCaption.size() + 1);
    EXPECT_EQ(pairs[3].targets.back(), ON);
}

TEST(Pairs, FileRoundTripAndSchemaErrors) {
    std::vector<std::string> toks = {"[PAD]", "[BOS]", "[EOS]", "[NONE]"};
    for (int i = 4; i < 15; ++i) {
        toks.push_back("w" + std::to_string(i));
    }
    corpus::Vocabulary vocab(toks);
    auto pairs = build_training_pairs(decompose(kCaption, kU), "scene-1");
    const auto path = std::filesystem::temp_directory_path() / "uaic_pairs_test.jsonl";
    write_pairs(path, pairs, vocab);
    EXPECT_EQ(read_pairs(path, vocab), pairs);

    {
        std::ofstream out(path);
        out << pair_to_json(pairs[0], vocab).dump() << "\n";
        out << R"({"scene":"x","input":["[BOS]","w10"],"targets":["[NONE]"]})" << "\n";
    }
    try {
        read_pairs(path, vocab);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::filesystem::remove(path);
}
