#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uaic/corpus.hpp"

namespace uaic::staging {

using corpus::TokenId;

/// Binary masking pattern over a token sequence. phi[t] == 1 removes token t
/// in one backward step; no two adjacent tokens may be removed together.
struct MaskPattern {
    std::vector<std::uint8_t> phi;
    double value = 0.0; // sum of u[t] over masked positions

    std::size_t masked() const;
    bool non_adjacent() const;
};

/// Maximum-total-uncertainty non-adjacent mask, by the path-graph DP
/// recurrence. Ties prefer masking the later position. Throws on empty input.
MaskPattern dp_mask(std::span<const double> u);

/// Exhaustive oracle for dp_mask. Throws for T == 0 or T > 22. Among
/// equal-value patterns returns the one with a 1 at the rightmost position
/// where candidates differ.
MaskPattern brute_force_mask(std::span<const double> u);

struct StageToken {
    TokenId token = 0;
    std::size_t position = 0; // index in the final caption
    friend bool operator==(const StageToken&, const StageToken&) = default;
};

struct Insertion {
    std::size_t slot = 0; // gap index in the framed parent stage: 0 is after [BOS]
    TokenId token = 0;
    std::size_t position = 0;
    friend bool operator==(const Insertion&, const Insertion&) = default;
};

struct Stage {
    std::vector<StageToken> tokens;
    std::vector<Insertion> inserted; // relative to the previous stage (S_0 = empty)
};

/// Forward-ordered stages S_1 ⊂ ... ⊂ S_K; S_K is the caption.
struct StagePlan {
    std::vector<TokenId> caption;
    std::vector<Stage> stages;

    std::size_t stage_count() const { return stages.size(); }
};

/// Backward peeling with dp_mask until the sequence is empty.
StagePlan decompose(const std::vector<TokenId>& caption, std::span<const double> u);

/// One token per stage, left to right.
StagePlan sequential_plan(const std::vector<TokenId>& caption);

/// Replays the insertion records forward from the empty sequence and returns
/// the final token list. Throws if two insertions share a slot or a slot is
/// out of range.
std::vector<TokenId> replay(const StagePlan& plan);

/// Replay reproduces every stage and the caption exactly.
bool reconstructs(const StagePlan& plan);

/// (S_{k-1}, I; S_k) training pair with [BOS]/[EOS] framing.
struct StagePair {
    std::string scene;
    std::vector<TokenId> input;   // framed
    std::vector<TokenId> targets; // one per slot; corpus::kNoneId where nothing is inserted

    std::size_t slot_count() const { return targets.size(); }
    friend bool operator==(const StagePair&, const StagePair&) = default;
};

/// One pair per stage transition (starting from the framed empty sequence)
/// plus the terminal all-[NONE] pair. Throws std::invalid_argument when the
/// plan puts two insertions in one slot.
std::vector<StagePair> build_training_pairs(const StagePlan& plan, const std::string& scene_id);

std::vector<TokenId> frame(const std::vector<TokenId>& tokens);

nlohmann::json pair_to_json(const StagePair& pair, const corpus::Vocabulary& vocab);
StagePair pair_from_json(const nlohmann::json& j, const corpus::Vocabulary& vocab);
void write_pairs(const std::filesystem::path& path, const std::vector<StagePair>& pairs,
                 const corpus::Vocabulary& vocab);
std::vector<StagePair> read_pairs(const std::filesystem::path& path, const corpus::Vocabulary& vocab);

} // namespace uaic::staging
