#include "uaic/insertion_model.hpp"

#include "uaic/errors.hpp"
#include "uaic/json_util.hpp"
#include "uaic/log.hpp"

namespace uaic::model {

namespace ops = nc::ops;
using nlohmann::json;
using jsonutil::read_field;
using jsonutil::reject_unknown;

namespace {

constexpr double kBlocked = -1e30;

} // namespace

json ModelConfig::to_json() const {
    return json{{"feature_dim", feature_dim}, {"dim", dim},         {"heads", heads},    {"ffn_dim", ffn_dim},
                {"layers", layers},           {"max_len", max_len}, {"dropout", dropout}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    reject_unknown(j, {"feature_dim", "dim", "heads", "ffn_dim", "layers", "max_len", "dropout"}, "model config");
    ModelConfig c;
    try {
        read_field(j, "feature_dim", c.feature_dim);
        read_field(j, "dim", c.dim);
        read_field(j, "heads", c.heads);
        read_field(j, "ffn_dim", c.ffn_dim);
        read_field(j, "layers", c.layers);
        read_field(j, "max_len", c.max_len);
        read_field(j, "dropout", c.dropout);
    } catch (const json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
    if (c.max_len < 3) {
        throw DataError("model config: max_len must be >= 3");
    }
    return c;
}

json TrainConfig::to_json() const {
    return json{{"epochs", epochs},
                {"batch_size", batch_size},
                {"lr", lr},
                {"warmup_steps", warmup_steps},
                {"decay_factor", decay_factor},
                {"decay_interval", decay_interval},
                {"clip_norm", clip_norm},
                {"none_weight", none_weight},
                {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    reject_unknown(j,
                   {"epochs", "batch_size", "lr", "warmup_steps", "decay_factor", "decay_interval", "clip_norm",
                    "none_weight", "seed"},
                   "train config");
    TrainConfig c;
    try {
        read_field(j, "epochs", c.epochs);
        read_field(j, "batch_size", c.batch_size);
        read_field(j, "lr", c.lr);
        read_field(j, "warmup_steps", c.warmup_steps);
        read_field(j, "decay_factor", c.decay_factor);
        read_field(j, "decay_interval", c.decay_interval);
        read_field(j, "clip_norm", c.clip_norm);
        read_field(j, "none_weight", c.none_weight);
        read_field(j, "seed", c.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("train config: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Output inventories

std::size_t output_size(const corpus::Vocabulary& vocab) { return vocab.size() - 3; }

std::size_t insertion_index(TokenId token) {
    if (token == corpus::kNoneId) {
        return 0;
    }
    if (corpus::Vocabulary::is_special(token)) {
        throw std::invalid_argument("token id " + std::to_string(token) + " is not an insertion output");
    }
    return token - 3;
}

TokenId insertion_token(std::size_t index) { return index == 0 ? corpus::kNoneId : index + 3; }

std::size_t ar_index(TokenId token) {
    if (token == corpus::kEosId) {
        return 0;
    }
    if (corpus::Vocabulary::is_special(token)) {
        throw std::invalid_argument("token id " + std::to_string(token) + " is not a baseline output");
    }
    return token - 3;
}

TokenId ar_token(std::size_t index) { return index == 0 ? corpus::kEosId : index + 3; }

// ---------------------------------------------------------------------------
// Backbone

Backbone::Backbone(nc::ParameterSet& ps, const std::string& prefix, const ModelConfig& cfg, std::size_t vocab_size,
                   Rng& rng)
    : cfg_(cfg) {
    tok_ = ps.add(prefix + ".tok_emb", nn::normal_matrix(vocab_size, cfg.dim, 0.02, rng));
    pos_ = ps.add(prefix + ".pos_emb", nn::normal_matrix(cfg.max_len, cfg.dim, 0.02, rng));
    type_ = ps.add(prefix + ".type_emb", nn::normal_matrix(2, cfg.dim, 0.02, rng));
    region_ = nn::Linear::create(ps, prefix + ".region_proj", cfg.feature_dim, cfg.dim, rng);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        blocks_.push_back(nn::TransformerBlock::create(ps, prefix + ".block" + std::to_string(l), cfg.dim, cfg.heads,
                                                       cfg.ffn_dim, rng));
    }
    ln_ = nn::LayerNorm::create(ps, prefix + ".ln_final", cfg.dim);
}

Var Backbone::encode(Graph& g, const std::vector<TokenId>& token_ids, const Tensor& features,
                     std::optional<Var> mask, std::size_t query_len) const {
    if (features.rank() != 2 || features.cols() != cfg_.feature_dim) {
        throw nc::ShapeError("encode: features " + nc::shape_str(features.shape()) + " but model expects width " +
                             std::to_string(cfg_.feature_dim));
    }
    const std::size_t R = features.rows();
    const std::size_t M = token_ids.empty() ? query_len : token_ids.size();
    if (M == 0) {
        throw std::invalid_argument("encode: empty text segment");
    }
    if (M > cfg_.max_len) {
        throw std::invalid_argument("encode: sequence of " + std::to_string(M) + " positions exceeds max_len " +
                                    std::to_string(cfg_.max_len));
    }
    Var regions = ops::add(g, region_(g, g.input(features)),
                           ops::embedding(g, g.param(type_), std::vector<std::size_t>(R, 0)));
    std::vector<std::size_t> positions(M);
    for (std::size_t i = 0; i < M; ++i) {
        positions[i] = i;
    }
    Var text = ops::add(g, ops::embedding(g, g.param(pos_), positions),
                        ops::embedding(g, g.param(type_), std::vector<std::size_t>(M, 1)));
    if (!token_ids.empty()) {
        text = ops::add(g, text, ops::embedding(g, g.param(tok_), token_ids));
    }
    Var x = ops::concat_rows(g, {regions, text});
    for (const auto& b : blocks_) {
        x = b(g, x, mask, cfg_.dropout);
    }
    return ops::slice_rows(g, ln_(g, x), R, M);
}

// ---------------------------------------------------------------------------
// Insertion model

InsertionModel::InsertionModel(const ModelConfig& cfg, const corpus::Vocabulary& vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(vocab), out_size_(model::output_size(vocab)) {
    if (vocab.size() <= corpus::kSpecialCount) {
        throw std::invalid_argument("insertion model: vocabulary has no corpus tokens");
    }
    Rng rng(seed);
    backbone_ = Backbone(params_, "ins", cfg_, vocab_.size(), rng);
    slot_proj_ = nn::Linear::create(params_, "ins.slot_proj", 2 * cfg_.dim, cfg_.dim, rng);
    slot_out_ = nn::Linear::create(params_, "ins.slot_out", cfg_.dim, out_size_, rng);
}

Var InsertionModel::encode_inputs(Graph& g, const std::vector<TokenId>& framed, const Tensor& features) const {
    if (framed.size() < 2 || framed.front() != corpus::kBosId || framed.back() != corpus::kEosId) {
        throw std::invalid_argument("encode_inputs: tokens must be framed by [BOS] ... [EOS]");
    }
    for (auto t : framed) {
        if (t >= vocab_.size()) {
            throw std::invalid_argument("encode_inputs: token id " + std::to_string(t) + " out of range");
        }
    }
    return backbone_.encode(g, framed, features, std::nullopt);
}

Var InsertionModel::slot_logits(Graph& g, Var hidden) const {
    const std::size_t M = g.value(hidden).rows();
    if (M < 2) {
        throw std::invalid_argument("slot_distributions: need at least 2 positions, got " + std::to_string(M));
    }
    Var pairs = ops::concat_cols(g, {ops::slice_rows(g, hidden, 0, M - 1), ops::slice_rows(g, hidden, 1, M - 1)});
    return slot_out_(g, ops::gelu(g, slot_proj_(g, pairs)));
}

Var InsertionModel::slot_distributions(Graph& g, Var hidden) const {
    return ops::log_softmax_rows(g, slot_logits(g, hidden));
}

Tensor InsertionModel::slot_log_probs(const std::vector<TokenId>& framed, const Tensor& features) const {
    Graph g(&params_);
    return g.value(slot_distributions(g, encode_inputs(g, framed, features)));
}

Var insertion_loss(Graph& g, const InsertionModel& m, const staging::StagePair& pair, const Tensor& features,
                   double none_weight) {
    if (pair.targets.size() + 1 != pair.input.size()) {
        throw std::invalid_argument("insertion_loss: " + std::to_string(pair.targets.size()) + " targets for " +
                                    std::to_string(pair.input.size()) + " framed tokens");
    }
    std::vector<std::size_t> targets;
    std::vector<double> weights;
    targets.reserve(pair.targets.size());
    for (auto t : pair.targets) {
        if (t >= m.vocab().size()) {
            throw std::invalid_argument("insertion_loss: target id " + std::to_string(t) + " out of range");
        }
        targets.push_back(insertion_index(t));
        weights.push_back(t == corpus::kNoneId ? none_weight : 1.0);
    }
    Var logits = m.slot_logits(g, m.encode_inputs(g, pair.input, features));
    return ops::cross_entropy(g, logits, targets, weights);
}

// ---------------------------------------------------------------------------
// Baselines

std::string mode_name(BaselineMode mode) { return mode == BaselineMode::AR ? "ar" : "naic"; }

BaselineModel::BaselineModel(BaselineMode mode, const ModelConfig& cfg, const corpus::Vocabulary& vocab,
                             std::uint64_t seed)
    : mode_(mode), cfg_(cfg), vocab_(vocab), out_size_(model::output_size(vocab)) {
    if (vocab.size() <= corpus::kSpecialCount) {
        throw std::invalid_argument("baseline model: vocabulary has no corpus tokens");
    }
    Rng rng(seed);
    const std::string prefix = mode_name(mode);
    backbone_ = Backbone(params_, prefix, cfg_, vocab_.size(), rng);
    head_ = nn::Linear::create(params_, prefix + ".head", cfg_.dim, out_size_, rng);
}

Var BaselineModel::ar_logits(Graph& g, const std::vector<TokenId>& prefix, const Tensor& features) const {
    if (mode_ != BaselineMode::AR) {
        throw std::logic_error("ar_logits called on a NAIC model");
    }
    if (prefix.empty() || prefix.front() != corpus::kBosId) {
        throw std::invalid_argument("ar_logits: prefix must start with [BOS]");
    }
    const std::size_t R = features.rows();
    const std::size_t M = prefix.size();
    Tensor mask({R + M, R + M}, 0.0);
    for (std::size_t i = 0; i < R + M; ++i) {
        for (std::size_t j = 0; j < R + M; ++j) {
            const bool allowed = j < R || (i >= R && j <= i);
            if (!allowed) {
                mask.at(i, j) = kBlocked;
            }
        }
    }
    Var h = backbone_.encode(g, prefix, features, g.input(std::move(mask)));
    return head_(g, h);
}

Var BaselineModel::ar_log_probs(Graph& g, const std::vector<TokenId>& prefix, const Tensor& features) const {
    return ops::log_softmax_rows(g, ar_logits(g, prefix, features));
}

Var BaselineModel::naic_logits(Graph& g, const Tensor& features) const {
    if (mode_ != BaselineMode::NAIC) {
        throw std::logic_error("naic_logits called on an AR model");
    }
    return head_(g, backbone_.encode(g, {}, features, std::nullopt, query_len()));
}

Var BaselineModel::naic_log_probs(Graph& g, const Tensor& features) const {
    return ops::log_softmax_rows(g, naic_logits(g, features));
}

Tensor BaselineModel::next_log_probs(const std::vector<TokenId>& prefix, const Tensor& features) const {
    Graph g(&params_);
    Var lp = ar_log_probs(g, prefix, features);
    const auto& all = g.value(lp);
    const std::size_t last = all.rows() - 1;
    Tensor row({out_size_});
    for (std::size_t c = 0; c < out_size_; ++c) {
        row[c] = all.at(last, c);
    }
    return row;
}

Tensor BaselineModel::one_shot_log_probs(const Tensor& features) const {
    Graph g(&params_);
    return g.value(naic_log_probs(g, features));
}

Var baseline_loss(Graph& g, const BaselineModel& m, const std::vector<TokenId>& caption, const Tensor& features) {
    std::vector<std::size_t> targets;
    for (auto t : caption) {
        if (t >= m.vocab().size()) {
            throw std::invalid_argument("baseline_loss: token id " + std::to_string(t) + " out of range");
        }
        targets.push_back(ar_index(t));
    }
    if (m.mode() == BaselineMode::AR) {
        std::vector<TokenId> prefix = {corpus::kBosId};
        prefix.insert(prefix.end(), caption.begin(), caption.end());
        targets.push_back(ar_index(corpus::kEosId));
        return ops::cross_entropy(g, m.ar_logits(g, prefix, features), targets);
    }
    if (caption.size() > m.query_len()) {
        throw std::invalid_argument("baseline_loss: caption longer than the NAIC query length");
    }
    targets.resize(m.query_len(), ar_index(corpus::kEosId));
    return ops::cross_entropy(g, m.naic_logits(g, features), targets);
}

void copy_text_embeddings(InsertionModel& dst, const BaselineModel& src) {
    if (!(dst.vocab() == src.vocab())) {
        throw DataError("embedding copy: vocabularies differ");
    }
    auto& to = dst.params()[dst.backbone().token_table()].value;
    const auto& from = src.params()[src.backbone().token_table()].value;
    if (to.shape() != from.shape()) {
        throw DataError("embedding copy: table shapes " + nc::shape_str(from.shape()) + " and " +
                        nc::shape_str(to.shape()) + " differ");
    }
    to = from;
}

// ---------------------------------------------------------------------------
// Training

namespace {

nc::TrainLoopConfig loop_config(const TrainConfig& cfg) {
    nc::TrainLoopConfig loop;
    loop.epochs = cfg.epochs;
    loop.batch_size = cfg.batch_size;
    loop.seed = cfg.seed;
    loop.adam.lr = cfg.lr;
    loop.adam.warmup_steps = cfg.warmup_steps;
    loop.adam.decay_factor = cfg.decay_factor;
    loop.adam.decay_interval = cfg.decay_interval;
    loop.adam.clip_norm = cfg.clip_norm;
    return loop;
}

const Tensor& lookup(const FeatureTable& features, const std::string& scene) {
    auto it = features.find(scene);
    if (it == features.end()) {
        throw DataError("no region features for scene '" + scene + "'");
    }
    return it->second;
}

} // namespace

TrainResult train_insertion(InsertionModel& m, const std::vector<staging::StagePair>& pairs,
                            const FeatureTable& features, const TrainConfig& cfg) {
    if (pairs.empty()) {
        throw std::invalid_argument("train_insertion: no stage pairs");
    }
    std::vector<const Tensor*> feats;
    feats.reserve(pairs.size());
    for (const auto& p : pairs) {
        feats.push_back(&lookup(features, p.scene));
    }
    auto loss = [&](Graph& g, std::size_t i) { return insertion_loss(g, m, pairs[i], *feats[i], cfg.none_weight); };
    TrainResult r{nc::train_loop(m.params(), pairs.size(), loss, loop_config(cfg), "train-insertion")};
    nc::round_to_f32(m.params());
    return r;
}

TrainResult train_baseline(BaselineModel& m, const std::vector<corpus::SceneInstance>& scenes,
                           const FeatureTable& features, const TrainConfig& cfg) {
    if (scenes.empty()) {
        throw std::invalid_argument("train_baseline: no scenes");
    }
    std::vector<std::vector<TokenId>> captions;
    std::vector<const Tensor*> feats;
    for (const auto& s : scenes) {
        captions.push_back(m.vocab().encode(s.caption));
        feats.push_back(&lookup(features, s.id));
    }
    auto loss = [&](Graph& g, std::size_t i) { return baseline_loss(g, m, captions[i], *feats[i]); };
    TrainResult r{nc::train_loop(m.params(), scenes.size(), loss, loop_config(cfg), "train-" + mode_name(m.mode()))};
    nc::round_to_f32(m.params());
    return r;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

ckpt::ModelCheckpoint base_checkpoint(ckpt::ModelKind kind, const ModelConfig& cfg, const corpus::Vocabulary& vocab,
                                      const nc::ParameterSet& params, const CheckpointContext& ctx) {
    ckpt::ModelCheckpoint c;
    c.kind = kind;
    c.dims = cfg.to_json();
    c.dims["features"] = ctx.features;
    c.dims["grammar"] = ctx.grammar;
    c.config = ctx.run_config;
    c.vocab = vocab;
    c.u_avg = ctx.u_avg;
    c.seed = ctx.seed;
    c.params = params;
    return c;
}

ModelConfig config_from(const ckpt::ModelCheckpoint& c) {
    json dims = c.dims;
    dims.erase("features");
    dims.erase("grammar");
    return ModelConfig::from_json(dims);
}

} // namespace

ckpt::ModelCheckpoint to_checkpoint(const InsertionModel& m, const CheckpointContext& ctx) {
    return base_checkpoint(ckpt::ModelKind::Insertion, m.config(), m.vocab(), m.params(), ctx);
}

ckpt::ModelCheckpoint to_checkpoint(const BaselineModel& m, const CheckpointContext& ctx) {
    return base_checkpoint(m.mode() == BaselineMode::AR ? ckpt::ModelKind::AR : ckpt::ModelKind::NAIC, m.config(),
                           m.vocab(), m.params(), ctx);
}

InsertionModel insertion_from_checkpoint(const ckpt::ModelCheckpoint& c) {
    if (c.kind != ckpt::ModelKind::Insertion) {
        throw DataError("expected an insertion checkpoint, found " + ckpt::kind_name(c.kind));
    }
    InsertionModel m(config_from(c), c.vocab, c.seed);
    ckpt::assign_parameters(m.params(), c.params);
    return m;
}

BaselineModel baseline_from_checkpoint(const ckpt::ModelCheckpoint& c) {
    if (c.kind != ckpt::ModelKind::AR && c.kind != ckpt::ModelKind::NAIC) {
        throw DataError("expected an ar or naic checkpoint, found " + ckpt::kind_name(c.kind));
    }
    BaselineModel m(c.kind == ckpt::ModelKind::AR ? BaselineMode::AR : BaselineMode::NAIC, config_from(c), c.vocab,
                    c.seed);
    ckpt::assign_parameters(m.params(), c.params);
    return m;
}

} // namespace uaic::model
