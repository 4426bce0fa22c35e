#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "uaic/checkpoint.hpp"
#include "uaic/corpus.hpp"
#include "uaic/nn.hpp"
#include "uaic/staging.hpp"
#include "uaic/trainer.hpp"

namespace uaic::model {

using corpus::TokenId;
using nc::Graph;
using nc::Tensor;
using nc::Var;

struct ModelConfig {
    std::size_t feature_dim = 32;
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t ffn_dim = 128;
    std::size_t layers = 2;
    std::size_t max_len = 24; // text positions, framing included
    double dropout = 0.2;

    static ModelConfig desk() { return {}; }
    static ModelConfig paper_scale() { return {32, 512, 8, 2048, 3, 24, 0.2}; }

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// Output inventories. Insertion: index 0 is [NONE], index i >= 1 is
// vocabulary id i + 3. AR/NAIC: index 0 is [EOS], same mapping otherwise.
// [PAD] and [BOS] are never predicted.
std::size_t output_size(const corpus::Vocabulary& vocab);
std::size_t insertion_index(TokenId token);
TokenId insertion_token(std::size_t index);
std::size_t ar_index(TokenId token);
TokenId ar_token(std::size_t index);

/// Embeddings, region projection, N bidirectional blocks and a final layer
/// norm over the stream [regions ; text]. Text positions carry token +
/// position + type embeddings; regions carry projection + type only, so the
/// encoder is invariant to region order.
class Backbone {
  public:
    Backbone() = default;
    Backbone(nc::ParameterSet& ps, const std::string& prefix, const ModelConfig& cfg, std::size_t vocab_size,
             Rng& rng);

    /// Returns hidden states for the text segment, shape (|text|, d). When
    /// `token_ids` is empty, `query_len` position-only queries are used as the
    /// text segment. `mask` is an additive (R+M)x(R+M) mask or nullopt.
    Var encode(Graph& g, const std::vector<TokenId>& token_ids, const Tensor& features,
               std::optional<Var> mask, std::size_t query_len = 0) const;

    std::size_t token_table() const { return tok_; }

  private:
    ModelConfig cfg_;
    std::size_t tok_ = 0, pos_ = 0, type_ = 0;
    nn::Linear region_;
    std::vector<nn::TransformerBlock> blocks_;
    nn::LayerNorm ln_;
};

class InsertionModel {
  public:
    InsertionModel(const ModelConfig& cfg, const corpus::Vocabulary& vocab, std::uint64_t seed);

    /// Text hidden states of a framed sequence. Throws std::invalid_argument
    /// when the sequence exceeds max_len or is not framed.
    Var encode_inputs(Graph& g, const std::vector<TokenId>& framed, const Tensor& features) const;
    /// Unnormalized slot scores from concat(h_i, h_{i+1}), shape (M-1, |V_out|).
    /// Throws for M < 2.
    Var slot_logits(Graph& g, Var hidden) const;
    /// Row-wise log-softmax of slot_logits.
    Var slot_distributions(Graph& g, Var hidden) const;
    /// Convenience: encode + slot_distributions, values only.
    Tensor slot_log_probs(const std::vector<TokenId>& framed, const Tensor& features) const;

    const ModelConfig& config() const { return cfg_; }
    const corpus::Vocabulary& vocab() const { return vocab_; }
    std::size_t output_size() const { return out_size_; }
    nc::ParameterSet& params() { return params_; }
    const nc::ParameterSet& params() const { return params_; }
    const Backbone& backbone() const { return backbone_; }

  private:
    ModelConfig cfg_;
    corpus::Vocabulary vocab_;
    std::size_t out_size_;
    nc::ParameterSet params_;
    Backbone backbone_;
    nn::Linear slot_proj_;
    nn::Linear slot_out_;
};

/// Sum over slots of -log p(target); [NONE] slots are weighted by lambda.
Var insertion_loss(Graph& g, const InsertionModel& m, const staging::StagePair& pair, const Tensor& features,
                   double none_weight = 1.0);

enum class BaselineMode { AR, NAIC };

std::string mode_name(BaselineMode mode);

class BaselineModel {
  public:
    BaselineModel(BaselineMode mode, const ModelConfig& cfg, const corpus::Vocabulary& vocab, std::uint64_t seed);

    /// AR: log-probabilities (|prefix|, |V_out|) for the token after each
    /// prefix position, where prefix starts with [BOS]. Text attends only
    /// leftward; regions attend only regions.
    Var ar_log_probs(Graph& g, const std::vector<TokenId>& prefix, const Tensor& features) const;
    /// NAIC: log-probabilities (L, |V_out|) from L = max_len - 2 position
    /// queries, conditioned on the regions only.
    Var naic_log_probs(Graph& g, const Tensor& features) const;
    Var ar_logits(Graph& g, const std::vector<TokenId>& prefix, const Tensor& features) const;
    Var naic_logits(Graph& g, const Tensor& features) const;

    Tensor next_log_probs(const std::vector<TokenId>& prefix, const Tensor& features) const;
    Tensor one_shot_log_probs(const Tensor& features) const;

    BaselineMode mode() const { return mode_; }
    std::size_t query_len() const { return cfg_.max_len - 2; }
    const ModelConfig& config() const { return cfg_; }
    const corpus::Vocabulary& vocab() const { return vocab_; }
    std::size_t output_size() const { return out_size_; }
    nc::ParameterSet& params() { return params_; }
    const nc::ParameterSet& params() const { return params_; }
    const Backbone& backbone() const { return backbone_; }

  private:
    BaselineMode mode_;
    ModelConfig cfg_;
    corpus::Vocabulary vocab_;
    std::size_t out_size_;
    nc::ParameterSet params_;
    Backbone backbone_;
    nn::Linear head_;
};

/// AR: sum over caption + [EOS] of -log p(w_t | w_<t, I). NAIC: sum over the
/// L queries of -log p(target_t | I), targets = caption padded with [EOS].
Var baseline_loss(Graph& g, const BaselineModel& m, const std::vector<TokenId>& caption, const Tensor& features);

/// Copies the token embedding table of a trained AR baseline into the
/// insertion model. Both must share the vocabulary and width.
void copy_text_embeddings(InsertionModel& dst, const BaselineModel& src);

// ---------------------------------------------------------------------------
// Training

using FeatureTable = std::unordered_map<std::string, Tensor>;

struct TrainConfig {
    std::size_t epochs = 15;
    std::size_t batch_size = 16;
    double lr = 2e-3;
    std::size_t warmup_steps = 200;
    double decay_factor = 0.9;
    std::size_t decay_interval = 2000;
    double clip_norm = 1.0;
    double none_weight = 1.0;
    std::uint64_t seed = 1;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainResult {
    nc::TrainLoopResult history;
};

/// Mini-batch training on stage pairs. Parameters end rounded to 32-bit
/// precision so the in-memory model equals its checkpoint.
TrainResult train_insertion(InsertionModel& m, const std::vector<staging::StagePair>& pairs,
                            const FeatureTable& features, const TrainConfig& cfg);
TrainResult train_baseline(BaselineModel& m, const std::vector<corpus::SceneInstance>& scenes,
                           const FeatureTable& features, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Persistence

/// Extra manifest entries stored alongside the architecture (feature and
/// grammar configuration needed to rebuild region features at decode time).
struct CheckpointContext {
    nlohmann::json features = nlohmann::json::object();
    nlohmann::json grammar = nlohmann::json::object();
    nlohmann::json run_config = nlohmann::json::object();
    double u_avg = 0.0;
    std::uint64_t seed = 0;
};

ckpt::ModelCheckpoint to_checkpoint(const InsertionModel& m, const CheckpointContext& ctx);
ckpt::ModelCheckpoint to_checkpoint(const BaselineModel& m, const CheckpointContext& ctx);
InsertionModel insertion_from_checkpoint(const ckpt::ModelCheckpoint& c);
BaselineModel baseline_from_checkpoint(const ckpt::ModelCheckpoint& c);

} // namespace uaic::model
