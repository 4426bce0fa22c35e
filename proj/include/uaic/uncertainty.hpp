#pragma once

#include <cstdint>
#include <vector>

#include "uaic/checkpoint.hpp"
#include "uaic/corpus.hpp"
#include "uaic/nn.hpp"
#include "uaic/trainer.hpp"

namespace uaic::ue {

using corpus::TokenId;

struct UEConfig {
    std::size_t feature_dim = 32;
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t ffn_dim = 128;
};

/// Image-conditioned bag-of-words estimator. Regions are projected to the
/// model width, mixed by one self-attention block, pooled (mean ∥ max),
/// projected back to the model width and fed to an MLP whose output passes
/// through -sigmoid, giving one score in [-1, 0] per descriptive word.
class UEModel {
  public:
    UEModel(UEConfig cfg, std::size_t bow_size, std::uint64_t seed);

    /// pi as a [1, |V|] node. Throws ShapeError on feature-width mismatch.
    nc::Var forward(nc::Graph& g, const nc::Tensor& features) const;
    std::vector<double> predict(const nc::Tensor& features) const;

    const UEConfig& config() const { return cfg_; }
    std::size_t bow_size() const { return bow_size_; }
    nc::ParameterSet& params() { return params_; }
    const nc::ParameterSet& params() const { return params_; }

  private:
    UEConfig cfg_;
    std::size_t bow_size_;
    nc::ParameterSet params_;
    nn::Linear region_proj_;
    nn::TransformerBlock block_;
    nn::LayerNorm ln_out_;
    nn::Linear pool_proj_;
    nn::Linear mlp_hidden_;
    nn::Linear mlp_out_;
};

/// ||pi + psi(S)||^2 as a graph node.
nc::Var ue_loss(nc::Graph& g, nc::Var pi, const std::vector<double>& psi);
/// ||pi + psi(S)||^2, summed over V.
double ue_loss(const std::vector<double>& pi, const std::vector<TokenId>& caption,
               const corpus::BoWVocabulary& bow);

/// Per-token uncertainty: u = 1 + pi_w for w in V, 1.0 for tokens outside V.
struct UncertaintyProfile {
    std::vector<double> u;
};

UncertaintyProfile word_uncertainty(const std::vector<double>& pi, const std::vector<TokenId>& caption,
                                    const corpus::BoWVocabulary& bow);

/// u for a single token given the estimator output.
double token_uncertainty(const std::vector<double>& pi, TokenId token, const corpus::BoWVocabulary& bow);

struct UETrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double lr = 2e-3;
    std::size_t warmup_steps = 100;
    double decay_factor = 0.9;
    std::size_t decay_interval = 500;
    double dropout = 0.0;
    std::uint64_t seed = 11;
};

struct UETrainResult {
    UEModel model;
    double u_avg = 0.0;
    nc::TrainLoopResult history;
};

/// Trains on (features, psi(caption)) pairs, then computes u_avg over all
/// caption tokens of the corpus. Parameters are rounded to checkpoint
/// precision before u_avg is measured.
UETrainResult train_ue(const std::vector<corpus::SceneInstance>& scenes, const corpus::Vocabulary& vocab,
                       const corpus::BoWVocabulary& bow, const corpus::FeatureCodebook& codebook,
                       const UEConfig& cfg, const UETrainConfig& train);

/// Mean token uncertainty over every caption token of the corpus.
double average_uncertainty(const UEModel& model, const std::vector<corpus::SceneInstance>& scenes,
                           const corpus::Vocabulary& vocab, const corpus::BoWVocabulary& bow,
                           const corpus::FeatureCodebook& codebook);

/// Bundles the model with its vocabularies for persistence.
ckpt::ModelCheckpoint to_checkpoint(const UEModel& model, const corpus::Vocabulary& vocab,
                                    const corpus::BoWVocabulary& bow, const corpus::FeatureConfig& features,
                                    double u_avg, std::uint64_t seed);
UEModel model_from_checkpoint(const ckpt::ModelCheckpoint& ckpt);
corpus::BoWVocabulary bow_from_checkpoint(const ckpt::ModelCheckpoint& ckpt);
corpus::FeatureConfig features_from_checkpoint(const ckpt::ModelCheckpoint& ckpt);

} // namespace uaic::ue
