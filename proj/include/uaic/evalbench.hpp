#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uaic/bleu.hpp"
#include "uaic/decode.hpp"
#include "uaic/pipeline.hpp"

namespace uaic::eval {

using corpus::TokenId;
using nc::Tensor;

// ---------------------------------------------------------------------------
// Decoding benchmark

struct ModeRunner {
    std::string name; // "ar", "naic", "uaic-greedy", "uaic-adaptive", ...
    std::function<decode::DecodeTrace(const Tensor& features)> decode;
};

struct BenchInput {
    std::vector<corpus::SceneInstance> scenes;
    /// Region encoding, timed separately from decoding.
    std::function<Tensor(const corpus::SceneInstance&)> encode;
    std::function<Sentence(const std::vector<TokenId>&)> detokenize;
    std::vector<ModeRunner> modes;
    std::size_t repeats = 3;
    std::size_t workers = 1;
};

struct SentenceRow {
    std::string scene;
    std::string mode;
    std::size_t evals = 0;
    std::size_t stages = 0;
    std::size_t length = 0;
    std::uint64_t wall_ns = 0;     // median over repeats
    std::uint64_t wall_min_ns = 0; // minimum over repeats
    friend bool operator==(const SentenceRow&, const SentenceRow&) = default;
};

struct LengthBucket {
    std::size_t lo = 0;
    std::size_t hi = 0; // inclusive
    std::size_t sentences = 0;
    double mean_length = 0.0;
    double mean_evals = 0.0;
    double mean_stages = 0.0;
    friend bool operator==(const LengthBucket&, const LengthBucket&) = default;
};

struct ModeStats {
    std::string mode;
    std::size_t sentences = 0;
    double mean_length = 0.0;
    double mean_evals = 0.0;
    double mean_stages = 0.0;
    double mean_wall_ms_min = 0.0;
    double mean_wall_ms_median = 0.0;
    std::array<double, 4> bleu{};
    std::optional<double> eval_speedup; // mean AR evaluations / mean evaluations
    std::optional<double> wall_speedup; // same ratio on median wall-clock
    std::vector<LengthBucket> buckets;
    friend bool operator==(const ModeStats&, const ModeStats&) = default;
};

struct BenchReport {
    std::vector<ModeStats> modes;
    std::vector<SentenceRow> rows;
    double mean_encode_ms = 0.0;
    std::size_t repeats = 0;
    std::size_t workers = 1;

    const ModeStats* find(const std::string& mode) const;

    nlohmann::json to_json() const;
    static BenchReport from_json(const nlohmann::json& j);
    std::string to_text() const;
    /// scene,mode,evals,wall_ns,length
    std::string to_csv() const;
    friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// Decodes every scene with every mode `repeats` times. Evaluation counts
/// must agree across repeats (std::logic_error otherwise); wall-clock is
/// summarized as min and median. Speedups are relative to the mode named
/// "ar" when present. Scenes are spread over `workers` threads; each decode
/// still handles one sentence.
BenchReport bench_decode(const BenchInput& input);

/// Standard runners built from trained models. Null models are skipped.
struct BenchModels {
    const model::BaselineModel* ar = nullptr;
    const model::BaselineModel* naic = nullptr;
    const model::InsertionModel* insertion = nullptr;
    const ue::UEModel* ue = nullptr;
    const corpus::BoWVocabulary* bow = nullptr;
    double u_avg = 0.0;
    std::size_t max_stages = 16;
    std::size_t ar_max_len = 22;
};

std::vector<ModeRunner> standard_modes(const BenchModels& models);

// ---------------------------------------------------------------------------
// Complexity table

struct ComplexityRow {
    std::string model;   // AIC, NAIC, IR-NAIC, UAIC
    std::string formula; // in N, K, D, Y (top-score search) and E
    std::string theoretical;
    std::optional<double> mean_length;   // N
    std::optional<double> mean_evals;    // evaluations per sentence
    std::optional<double> dy_ms;         // D + Y per evaluation, measured jointly
    std::optional<double> e_ms;          // E
    std::optional<double> measured_ratio;
    friend bool operator==(const ComplexityRow&, const ComplexityRow&) = default;
};

struct ComplexityBucket {
    std::size_t length = 0; // N
    std::size_t sentences = 0;
    double ar_evals = 0.0;
    double uaic_evals = 0.0;
    double measured_ratio = 0.0;
    double theoretical_ratio = 0.0; // N / ceil(log2 N)
    friend bool operator==(const ComplexityBucket&, const ComplexityBucket&) = default;
};

struct ComplexityTable {
    std::vector<ComplexityRow> rows;
    std::vector<ComplexityBucket> buckets;

    std::string to_text() const;
    nlohmann::json to_json() const;
    static ComplexityTable from_json(const nlohmann::json& j);
    friend bool operator==(const ComplexityTable&, const ComplexityTable&) = default;
};

/// N / ceil(log2 N) for N >= 2.
double log_speedup(std::size_t n);

/// Rows for the modes present in the report ("ar", "naic" and the first
/// mode whose name starts with "uaic"); IR-NAIC is formula only. Buckets
/// group sentences by AR caption length N >= 2.
ComplexityTable complexity_report(const BenchReport& report);

// ---------------------------------------------------------------------------
// Order ablation

struct OrderAblationConfig {
    std::vector<pipeline::Order> orders = {pipeline::Order::Uncertainty, pipeline::Order::AntiUncertainty,
                                           pipeline::Order::Random, pipeline::Order::Sequential};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct OrderResult {
    std::string order;
    std::vector<double> bleu4; // one per seed
    std::vector<double> mean_stages;
    double mean = 0.0;
    double stdev = 0.0; // sample standard deviation
    friend bool operator==(const OrderResult&, const OrderResult&) = default;
};

struct OrderAblationTable {
    std::vector<std::uint64_t> seeds;
    std::vector<OrderResult> rows;

    const OrderResult* find(const std::string& order) const;
    nlohmann::json to_json() const;
    std::string to_text() const;
};

double mean(const std::vector<double>& v);
double sample_stdev(const std::vector<double>& v);

/// Greedy held-out BLEU-4 of an insertion model; also returns the mean
/// stage count through `mean_stages` when given.
double heldout_bleu4(const model::InsertionModel& m, const pipeline::Dataset& data, std::size_t max_stages,
                     double* mean_stages = nullptr);

/// Trains one insertion model per (order, seed) and scores it on the
/// held-out split. Throws std::invalid_argument for fewer than 3 seeds.
OrderAblationTable run_order_ablation(const pipeline::Dataset& data, const pipeline::RunConfig& cfg,
                                      const OrderAblationConfig& ablation, pipeline::ModelCache& cache);

} // namespace uaic::eval
