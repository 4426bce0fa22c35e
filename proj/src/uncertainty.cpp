#include "uaic/uncertainty.hpp"

#include <algorithm>

#include "uaic/errors.hpp"
#include "uaic/log.hpp"

namespace uaic::ue {

namespace ops = nc::ops;
using nc::Graph;
using nc::Tensor;
using nc::Var;

UEModel::UEModel(UEConfig cfg, std::size_t bow_size, std::uint64_t seed) : cfg_(cfg), bow_size_(bow_size) {
    if (bow_size == 0) {
        throw std::invalid_argument("UEModel: empty descriptive vocabulary");
    }
    Rng rng(seed);
    region_proj_ = nn::Linear::create(params_, "ue.region_proj", cfg_.feature_dim, cfg_.dim, rng);
    block_ = nn::TransformerBlock::create(params_, "ue.block", cfg_.dim, cfg_.heads, cfg_.ffn_dim, rng);
    ln_out_ = nn::LayerNorm::create(params_, "ue.ln_out", cfg_.dim);
    pool_proj_ = nn::Linear::create(params_, "ue.pool_proj", 2 * cfg_.dim, cfg_.dim, rng);
    mlp_hidden_ = nn::Linear::create(params_, "ue.mlp_hidden", cfg_.dim, cfg_.ffn_dim, rng);
    mlp_out_ = nn::Linear::create(params_, "ue.mlp_out", cfg_.ffn_dim, bow_size_, rng);
}

Var UEModel::forward(Graph& g, const Tensor& features) const {
    if (features.rank() != 2 || features.cols() != cfg_.feature_dim) {
        throw nc::ShapeError("ue_forward: features " + nc::shape_str(features.shape()) +
                             " do not match model feature width " + std::to_string(cfg_.feature_dim));
    }
    Var x = region_proj_(g, g.input(features));
    x = block_(g, x, std::nullopt, 0.0);
    x = ln_out_(g, x);
    Var pooled = ops::concat_cols(g, {ops::mean_rows(g, x), ops::max_rows(g, x)});
    Var h = ops::gelu(g, pool_proj_(g, pooled));
    h = ops::gelu(g, mlp_hidden_(g, h));
    return ops::scale(g, ops::sigmoid(g, mlp_out_(g, h)), -1.0);
}

std::vector<double> UEModel::predict(const Tensor& features) const {
    Graph g(&params_);
    Var pi = forward(g, features);
    const auto d = g.value(pi).data();
    return {d.begin(), d.end()};
}

Var ue_loss(Graph& g, Var pi, const std::vector<double>& psi) {
    Tensor target({1, psi.size()}, 0.0);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        target[i] = -psi[i];
    }
    return ops::squared_error(g, pi, target);
}

double ue_loss(const std::vector<double>& pi, const std::vector<TokenId>& caption,
               const corpus::BoWVocabulary& bow) {
    if (pi.size() != bow.size()) {
        throw nc::ShapeError("ue_loss: pi has " + std::to_string(pi.size()) + " entries, |V| = " +
                             std::to_string(bow.size()));
    }
    const auto psi = bow.presence(caption);
    double total = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        const double d = pi[i] + psi[i];
        total += d * d;
    }
    return total;
}

double token_uncertainty(const std::vector<double>& pi, TokenId token, const corpus::BoWVocabulary& bow) {
    if (auto p = bow.position(token)) {
        return std::clamp(1.0 + pi.at(*p), 0.0, 1.0);
    }
    return 1.0;
}

UncertaintyProfile word_uncertainty(const std::vector<double>& pi, const std::vector<TokenId>& caption,
                                    const corpus::BoWVocabulary& bow) {
    if (caption.empty()) {
        throw std::invalid_argument("word_uncertainty: empty caption");
    }
    UncertaintyProfile prof;
    prof.u.reserve(caption.size());
    for (auto t : caption) {
        prof.u.push_back(token_uncertainty(pi, t, bow));
    }
    return prof;
}

double average_uncertainty(const UEModel& model, const std::vector<corpus::SceneInstance>& scenes,
                           const corpus::Vocabulary& vocab, const corpus::BoWVocabulary& bow,
                           const corpus::FeatureCodebook& codebook) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : scenes) {
        const auto caption = vocab.encode(s.caption);
        if (caption.empty()) {
            continue;
        }
        const auto pi = model.predict(codebook.features(s));
        for (double u : word_uncertainty(pi, caption, bow).u) {
            total += u;
            ++count;
        }
    }
    if (count == 0) {
        throw std::invalid_argument("average_uncertainty: corpus has no in-vocabulary tokens");
    }
    return total / static_cast<double>(count);
}

UETrainResult train_ue(const std::vector<corpus::SceneInstance>& scenes, const corpus::Vocabulary& vocab,
                       const corpus::BoWVocabulary& bow, const corpus::FeatureCodebook& codebook,
                       const UEConfig& cfg, const UETrainConfig& train) {
    if (scenes.empty()) {
        throw std::invalid_argument("train_ue: empty corpus");
    }
    UEModel model(cfg, bow.size(), train.seed);
    std::vector<Tensor> features;
    std::vector<std::vector<double>> targets;
    features.reserve(scenes.size());
    for (const auto& s : scenes) {
        features.push_back(codebook.features(s));
        targets.push_back(bow.presence(vocab.encode(s.caption)));
    }
    nc::TrainLoopConfig loop;
    loop.epochs = train.epochs;
    loop.batch_size = train.batch_size;
    loop.seed = train.seed;
    loop.probe_examples = 0; // full corpus
    loop.adam.lr = train.lr;
    loop.adam.warmup_steps = train.warmup_steps;
    loop.adam.decay_factor = train.decay_factor;
    loop.adam.decay_interval = train.decay_interval;
    auto loss = [&](Graph& g, std::size_t i) { return ue_loss(g, model.forward(g, features[i]), targets[i]); };
    auto history = nc::train_loop(model.params(), scenes.size(), loss, loop, "train-ue");
    nc::round_to_f32(model.params());
    const double u_avg = average_uncertainty(model, scenes, vocab, bow, codebook);
    log::info("train-ue: u_avg = {:.4f}", u_avg);
    return UETrainResult{std::move(model), u_avg, std::move(history)};
}

ckpt::ModelCheckpoint to_checkpoint(const UEModel& model, const corpus::Vocabulary& vocab,
                                    const corpus::BoWVocabulary& bow, const corpus::FeatureConfig& features,
                                    double u_avg, std::uint64_t seed) {
    ckpt::ModelCheckpoint c;
    c.kind = ckpt::ModelKind::UE;
    const auto& cfg = model.config();
    c.dims = {{"feature_dim", cfg.feature_dim},
              {"dim", cfg.dim},
              {"heads", cfg.heads},
              {"ffn_dim", cfg.ffn_dim},
              {"bow_ids", bow.ids()},
              {"stop_list", bow.stop_list()},
              {"features", corpus::feature_config_to_json(features)}};
    c.vocab = vocab;
    c.u_avg = u_avg;
    c.seed = seed;
    c.params = model.params();
    return c;
}

UEModel model_from_checkpoint(const ckpt::ModelCheckpoint& c) {
    if (c.kind != ckpt::ModelKind::UE) {
        throw DataError("expected a ue checkpoint, found " + ckpt::kind_name(c.kind));
    }
    UEConfig cfg;
    try {
        cfg.feature_dim = c.dims.at("feature_dim").get<std::size_t>();
        cfg.dim = c.dims.at("dim").get<std::size_t>();
        cfg.heads = c.dims.at("heads").get<std::size_t>();
        cfg.ffn_dim = c.dims.at("ffn_dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ue checkpoint: ") + e.what());
    }
    UEModel model(cfg, bow_from_checkpoint(c).size(), c.seed);
    ckpt::assign_parameters(model.params(), c.params);
    return model;
}

corpus::BoWVocabulary bow_from_checkpoint(const ckpt::ModelCheckpoint& c) {
    try {
        auto ids = c.dims.at("bow_ids").get<std::vector<TokenId>>();
        for (auto id : ids) {
            if (id >= c.vocab.size() || corpus::Vocabulary::is_special(id)) {
                throw DataError("ue checkpoint: bag-of-words id out of range");
            }
        }
        return corpus::BoWVocabulary(std::move(ids), c.dims.at("stop_list").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ue checkpoint: ") + e.what());
    }
}

corpus::FeatureConfig features_from_checkpoint(const ckpt::ModelCheckpoint& c) {
    if (!c.dims.contains("features")) {
        throw DataError("checkpoint: missing feature configuration");
    }
    return corpus::feature_config_from_json(c.dims.at("features"));
}

} // namespace uaic::ue
