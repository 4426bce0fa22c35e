#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "uaic/insertion_model.hpp"
#include "uaic/uncertainty.hpp"

namespace uaic::decode {

using corpus::TokenId;
using nc::Tensor;

struct StageRecord {
    std::size_t inserted = 0;
    std::size_t beam = 1;
    double u_k = 0.0;
};

/// Outcome of one decode. `evaluations` counts the model evaluations along
/// the lineage of the returned hypothesis; `forward_passes` counts every
/// evaluation performed, including discarded beam hypotheses.
struct DecodeTrace {
    std::vector<TokenId> caption;
    std::vector<StageRecord> stages; // one per stage with insertions
    std::size_t evaluations = 0;
    std::size_t forward_passes = 0;
    std::uint64_t wall_ns = 0;
    bool converged = false;
    double log_prob = 0.0;

    std::size_t insertion_stages() const { return stages.size(); }
};

/// Source of per-slot log-probabilities for the current framed sequence.
/// Row s of the result scores slot s over the insertion inventory (index 0
/// is [NONE], index i is vocabulary id i + 3).
class SlotScorer {
  public:
    virtual ~SlotScorer() = default;
    virtual Tensor slot_log_probs(const std::vector<TokenId>& framed) const = 0;
    /// Longest framed sequence the scorer accepts.
    virtual std::size_t max_len() const = 0;
};

class ModelSlotScorer final : public SlotScorer {
  public:
    ModelSlotScorer(const model::InsertionModel& m, const Tensor& features) : m_(m), features_(features) {}
    Tensor slot_log_probs(const std::vector<TokenId>& framed) const override {
        return m_.slot_log_probs(framed, features_);
    }
    std::size_t max_len() const override { return m_.config().max_len; }

  private:
    const model::InsertionModel& m_;
    const Tensor& features_;
};

/// Next-token log-probabilities over the AR inventory (index 0 is [EOS]).
class NextTokenScorer {
  public:
    virtual ~NextTokenScorer() = default;
    virtual Tensor next_log_probs(const std::vector<TokenId>& prefix) const = 0;
    virtual std::size_t max_len() const = 0;
};

class ModelNextTokenScorer final : public NextTokenScorer {
  public:
    ModelNextTokenScorer(const model::BaselineModel& m, const Tensor& features) : m_(m), features_(features) {}
    Tensor next_log_probs(const std::vector<TokenId>& prefix) const override {
        return m_.next_log_probs(prefix, features_);
    }
    std::size_t max_len() const override { return m_.config().max_len; }

  private:
    const model::BaselineModel& m_;
    const Tensor& features_;
};

/// Estimator uncertainty per vocabulary id for one image (1.0 outside V).
using TokenUncertainty = std::vector<double>;

TokenUncertainty token_uncertainties(const ue::UEModel& ue, const corpus::BoWVocabulary& bow,
                                     std::size_t vocab_size, const Tensor& features);

DecodeTrace greedy_parallel_decode(const SlotScorer& scorer, std::size_t max_stages);

/// B = 3 + trunc(4 * clamp((u_avg - u_k) / u_avg, -0.5, 0.5)). Throws for
/// u_avg <= 0.
int adaptive_beam_size(double u_k, double u_avg);

struct BeamConfig {
    bool adaptive = false;
    std::size_t width = 1; // fixed mode; 1..16
    double u_avg = 0.5;    // adaptive mode

    std::string label() const;
    /// "greedy", "fixed:B" or "adaptive".
    static BeamConfig parse(const std::string& text, double u_avg);
};

/// Stage-level beam search. Each hypothesis proposes its all-argmax
/// expansion plus every single-slot deviation to a rank-2..B_k candidate;
/// the best B_k candidates by cumulative log-probability survive. Expansions
/// that insert nothing retire the hypothesis; the answer is the retired
/// hypothesis with the best length-normalized score. `token_u` is required
/// in adaptive mode.
DecodeTrace beam_decode(const SlotScorer& scorer, const TokenUncertainty* token_u, const BeamConfig& cfg,
                        std::size_t max_stages);

/// Left-to-right decoding; beam == 1 is greedy.
DecodeTrace ar_decode(const NextTokenScorer& scorer, std::size_t beam, std::size_t max_len);

/// One-shot decoding from (L, |V_out|) log-probabilities; output is cut at
/// the first [EOS].
DecodeTrace naic_decode(const model::BaselineModel& m, const Tensor& features);

// ---------------------------------------------------------------------------
// Decode files

struct DecodeRecord {
    std::string scene;
    std::vector<std::string> caption;
    std::size_t stages = 0;
    std::size_t evals = 0;
    std::uint64_t wall_ns = 0;
    std::string beam;

    friend bool operator==(const DecodeRecord&, const DecodeRecord&) = default;
};

nlohmann::json record_to_json(const DecodeRecord& r);
DecodeRecord record_from_json(const nlohmann::json& j);
void write_records(const std::filesystem::path& path, const std::vector<DecodeRecord>& records);
std::vector<DecodeRecord> read_records(const std::filesystem::path& path);

} // namespace uaic::decode
