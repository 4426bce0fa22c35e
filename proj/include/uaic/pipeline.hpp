#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uaic/corpus.hpp"
#include "uaic/decode.hpp"
#include "uaic/insertion_model.hpp"
#include "uaic/staging.hpp"
#include "uaic/uncertainty.hpp"

namespace uaic::pipeline {

struct CorpusSettings {
    std::size_t scenes = 5000;
    std::size_t heldout = 500;
    std::uint64_t seed = 7;
    std::size_t min_count = 1;
};

struct DecodeSettings {
    std::string beam = "greedy";
    std::size_t max_stages = 16;
    std::size_t ar_max_len = 22;
};

/// Every hyperparameter of a run. Serializes to JSON; unknown keys are
/// rejected on load and missing keys keep their defaults.
struct RunConfig {
    nlohmann::json grammar = nullptr; // null selects the built-in grammar
    corpus::FeatureConfig features;
    CorpusSettings corpus;
    ue::UEConfig ue;
    ue::UETrainConfig ue_train;
    model::ModelConfig model;
    model::TrainConfig train;
    model::TrainConfig baseline_train{.epochs = 8};
    DecodeSettings decode;
    bool copy_embeddings = false;
    std::uint64_t seed = 1;

    corpus::Grammar grammar_spec() const;
    /// Sets the training seeds of every model from one run seed.
    void apply_seed(std::uint64_t s);

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

/// Generated corpus split into training and held-out scenes, with the
/// vocabularies and region features derived from the training part.
struct Dataset {
    corpus::Grammar grammar;
    corpus::FeatureConfig feature_config;
    std::vector<corpus::SceneInstance> train;
    std::vector<corpus::SceneInstance> heldout;
    corpus::Vocabulary vocab;
    corpus::BoWVocabulary bow;
    model::FeatureTable features;
};

/// The first `corpus.scenes` scenes train, the next `corpus.heldout` are held out.
Dataset make_dataset(const RunConfig& cfg);
/// Builds vocabularies and features for already generated scenes.
Dataset make_dataset(const RunConfig& cfg, std::vector<corpus::SceneInstance> train,
                     std::vector<corpus::SceneInstance> heldout);

model::FeatureTable feature_table(const corpus::FeatureCodebook& codebook,
                                  const std::vector<corpus::SceneInstance>& scenes);

/// Generation orders for stage construction.
enum class Order { Uncertainty, AntiUncertainty, Random, Sequential };

std::string order_name(Order order);
Order parse_order(const std::string& name);

/// Per-token scores fed to the staging DP for one caption under `order`.
/// Uncertainty uses the estimator; anti-uncertainty uses 1 - u; random
/// draws uniform noise from `seed` and the scene id.
std::vector<double> order_scores(Order order, const std::vector<double>& u, const std::string& scene_id,
                                 std::uint64_t seed);

/// Stage plans for every scene (sequential ignores the estimator).
std::vector<staging::StagePlan> build_plans(const Dataset& data, const ue::UEModel* ue, Order order,
                                            std::uint64_t seed);
std::vector<staging::StagePair> build_pairs(const std::vector<staging::StagePlan>& plans,
                                            const std::vector<corpus::SceneInstance>& scenes);

/// Trained models of one seed.
struct TrainedUE {
    ue::UEModel model;
    double u_avg = 0.0;
    nc::TrainLoopResult history;
};

TrainedUE train_ue(const Dataset& data, const RunConfig& cfg);
model::InsertionModel train_insertion(const Dataset& data, const RunConfig& cfg,
                                      const std::vector<staging::StagePair>& pairs,
                                      const model::BaselineModel* embedding_source = nullptr,
                                      nc::TrainLoopResult* history = nullptr);
model::BaselineModel train_baseline(const Dataset& data, const RunConfig& cfg, model::BaselineMode mode,
                                    nc::TrainLoopResult* history = nullptr);

model::CheckpointContext checkpoint_context(const Dataset& data, const RunConfig& cfg, double u_avg);

/// Grammar recorded in an insertion or baseline checkpoint.
corpus::Grammar grammar_from_checkpoint(const ckpt::ModelCheckpoint& c);

} // namespace uaic::pipeline

namespace uaic::pipeline {

/// Trains models on demand and, when a directory is given, keeps them as
/// checkpoints keyed by a hash of the dataset vocabulary and the run
/// configuration (which includes the seed). A cached model decodes exactly
/// like the freshly trained one because training ends at 32-bit precision.
class ModelCache {
  public:
    explicit ModelCache(std::optional<std::filesystem::path> dir = std::nullopt);

    TrainedUE ue(const Dataset& data, const RunConfig& cfg);
    model::InsertionModel insertion(const Dataset& data, const RunConfig& cfg, Order order, const TrainedUE& ue);
    model::BaselineModel baseline(const Dataset& data, const RunConfig& cfg, model::BaselineMode mode);

    /// Key used in file names; exposed for tests.
    static std::string key(const Dataset& data, const RunConfig& cfg);

  private:
    std::optional<std::filesystem::path> file(const std::string& stem, const Dataset& data,
                                              const RunConfig& cfg) const;
    std::optional<std::filesystem::path> dir_;
};

} // namespace uaic::pipeline
