#include "uaic/pipeline.hpp"

#include <fstream>

#include "uaic/errors.hpp"
#include "uaic/json_util.hpp"
#include "uaic/log.hpp"
#include "uaic/rng.hpp"

namespace uaic::pipeline {

using jsonutil::read_field;
using jsonutil::reject_unknown;
using nlohmann::json;

namespace {

json ue_config_json(const ue::UEConfig& c) {
    return {{"feature_dim", c.feature_dim}, {"dim", c.dim}, {"heads", c.heads}, {"ffn_dim", c.ffn_dim}};
}

ue::UEConfig ue_config_from(const json& j) {
    reject_unknown(j, {"feature_dim", "dim", "heads", "ffn_dim"}, "ue config");
    ue::UEConfig c;
    read_field(j, "feature_dim", c.feature_dim);
    read_field(j, "dim", c.dim);
    read_field(j, "heads", c.heads);
    read_field(j, "ffn_dim", c.ffn_dim);
    return c;
}

json ue_train_json(const ue::UETrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr", c.lr},
            {"warmup_steps", c.warmup_steps},
            {"decay_factor", c.decay_factor},
            {"decay_interval", c.decay_interval},
            {"dropout", c.dropout},
            {"seed", c.seed}};
}

ue::UETrainConfig ue_train_from(const json& j) {
    reject_unknown(j, {"epochs", "batch_size", "lr", "warmup_steps", "decay_factor", "decay_interval", "dropout", "seed"},
                   "ue_train config");
    ue::UETrainConfig c;
    read_field(j, "epochs", c.epochs);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "lr", c.lr);
    read_field(j, "warmup_steps", c.warmup_steps);
    read_field(j, "decay_factor", c.decay_factor);
    read_field(j, "decay_interval", c.decay_interval);
    read_field(j, "dropout", c.dropout);
    read_field(j, "seed", c.seed);
    return c;
}

} // namespace

corpus::Grammar RunConfig::grammar_spec() const {
    if (grammar.is_null()) {
        return corpus::default_grammar();
    }
    return corpus::Grammar::from_json(grammar);
}

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    ue_train.seed = s * 1000 + 11;
    train.seed = s * 1000 + 23;
    baseline_train.seed = s * 1000 + 37;
}

json RunConfig::to_json() const {
    return {{"grammar", grammar},
            {"features", corpus::feature_config_to_json(features)},
            {"corpus",
             {{"scenes", corpus.scenes}, {"heldout", corpus.heldout}, {"seed", corpus.seed}, {"min_count", corpus.min_count}}},
            {"ue", ue_config_json(ue)},
            {"ue_train", ue_train_json(ue_train)},
            {"model", model.to_json()},
            {"train", train.to_json()},
            {"baseline_train", baseline_train.to_json()},
            {"decode",
             {{"beam", decode.beam}, {"max_stages", decode.max_stages}, {"ar_max_len", decode.ar_max_len}}},
            {"copy_embeddings", copy_embeddings},
            {"seed", seed}};
}

RunConfig RunConfig::from_json(const json& j) {
    reject_unknown(j,
                   {"grammar", "features", "corpus", "ue", "ue_train", "model", "train", "baseline_train", "decode",
                    "copy_embeddings", "seed"},
                   "run config");
    RunConfig c;
    try {
        if (j.contains("grammar")) {
            c.grammar = j.at("grammar");
            if (!c.grammar.is_null()) {
                corpus::Grammar::from_json(c.grammar).validate();
            }
        }
        if (j.contains("features")) {
            c.features = corpus::feature_config_from_json(j.at("features"));
        }
        if (j.contains("corpus")) {
            const auto& k = j.at("corpus");
            reject_unknown(k, {"scenes", "heldout", "seed", "min_count"}, "corpus config");
            read_field(k, "scenes", c.corpus.scenes);
            read_field(k, "heldout", c.corpus.heldout);
            read_field(k, "seed", c.corpus.seed);
            read_field(k, "min_count", c.corpus.min_count);
        }
        if (j.contains("ue")) {
            c.ue = ue_config_from(j.at("ue"));
        }
        if (j.contains("ue_train")) {
            c.ue_train = ue_train_from(j.at("ue_train"));
        }
        if (j.contains("model")) {
            c.model = model::ModelConfig::from_json(j.at("model"));
        }
        if (j.contains("train")) {
            c.train = model::TrainConfig::from_json(j.at("train"));
        }
        if (j.contains("baseline_train")) {
            c.baseline_train = model::TrainConfig::from_json(j.at("baseline_train"));
        }
        if (j.contains("decode")) {
            const auto& d = j.at("decode");
            reject_unknown(d, {"beam", "max_stages", "ar_max_len"}, "decode config");
            read_field(d, "beam", c.decode.beam);
            read_field(d, "max_stages", c.decode.max_stages);
            read_field(d, "ar_max_len", c.decode.ar_max_len);
            decode::BeamConfig::parse(c.decode.beam, 0.5);
        }
        read_field(j, "copy_embeddings", c.copy_embeddings);
        read_field(j, "seed", c.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("run config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("run config: ") + e.what());
    }
    if (c.features.dim != c.ue.feature_dim || c.features.dim != c.model.feature_dim) {
        throw DataError("run config: features.dim must equal ue.feature_dim and model.feature_dim");
    }
    if (c.decode.max_stages == 0 || c.decode.ar_max_len == 0) {
        throw DataError("run config: decode.max_stages and decode.ar_max_len must be >= 1");
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

// ---------------------------------------------------------------------------

model::FeatureTable feature_table(const corpus::FeatureCodebook& codebook,
                                  const std::vector<corpus::SceneInstance>& scenes) {
    model::FeatureTable table;
    table.reserve(scenes.size());
    for (const auto& s : scenes) {
        if (!table.emplace(s.id, codebook.features(s)).second) {
            throw DataError("duplicate scene id '" + s.id + "'");
        }
    }
    return table;
}

Dataset make_dataset(const RunConfig& cfg, std::vector<corpus::SceneInstance> train,
                     std::vector<corpus::SceneInstance> heldout) {
    if (train.empty()) {
        throw DataError("dataset: no training scenes");
    }
    Dataset d;
    d.grammar = cfg.grammar_spec();
    d.feature_config = cfg.features;
    d.train = std::move(train);
    d.heldout = std::move(heldout);
    d.vocab = corpus::build_vocab(d.train, cfg.corpus.min_count);
    d.bow = corpus::build_bow_vocab(d.vocab, corpus::default_stop_list());
    const corpus::FeatureCodebook codebook(d.grammar, d.feature_config);
    d.features = feature_table(codebook, d.train);
    for (auto& [id, t] : feature_table(codebook, d.heldout)) {
        if (!d.features.emplace(id, std::move(t)).second) {
            throw DataError("held-out scene id '" + id + "' also appears in training");
        }
    }
    return d;
}

Dataset make_dataset(const RunConfig& cfg) {
    auto all = corpus::generate_corpus(cfg.grammar_spec(), cfg.corpus.scenes + cfg.corpus.heldout, cfg.corpus.seed);
    std::vector<corpus::SceneInstance> heldout(all.begin() + static_cast<std::ptrdiff_t>(cfg.corpus.scenes), all.end());
    all.resize(cfg.corpus.scenes);
    return make_dataset(cfg, std::move(all), std::move(heldout));
}

// ---------------------------------------------------------------------------

std::string order_name(Order order) {
    switch (order) {
    case Order::Uncertainty:
        return "uncertainty";
    case Order::AntiUncertainty:
        return "anti-uncertainty";
    case Order::Random:
        return "random";
    case Order::Sequential:
        return "sequential";
    }
    return "?";
}

Order parse_order(const std::string& name) {
    for (auto o : {Order::Uncertainty, Order::AntiUncertainty, Order::Random, Order::Sequential}) {
        if (order_name(o) == name) {
            return o;
        }
    }
    throw std::invalid_argument("unknown order '" + name +
                                "' (expected uncertainty, anti-uncertainty, random or sequential)");
}

std::vector<double> order_scores(Order order, const std::vector<double>& u, const std::string& scene_id,
                                 std::uint64_t seed) {
    std::vector<double> out(u.size());
    switch (order) {
    case Order::Uncertainty:
    case Order::Sequential:
        return u;
    case Order::AntiUncertainty:
        for (std::size_t i = 0; i < u.size(); ++i) {
            out[i] = 1.0 - u[i];
        }
        return out;
    case Order::Random: {
        std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
        for (unsigned char ch : scene_id) {
            h = (h ^ ch) * 1099511628211ULL;
        }
        Rng rng(h);
        for (auto& v : out) {
            v = rng.uniform(0.0, 1.0);
        }
        return out;
    }
    }
    return out;
}

std::vector<staging::StagePlan> build_plans(const Dataset& data, const ue::UEModel* ue, Order order,
                                            std::uint64_t seed) {
    if (ue == nullptr && (order == Order::Uncertainty || order == Order::AntiUncertainty)) {
        throw std::invalid_argument("build_plans: this order needs an uncertainty estimator");
    }
    std::vector<staging::StagePlan> plans;
    plans.reserve(data.train.size());
    for (const auto& s : data.train) {
        const auto caption = data.vocab.encode(s.caption);
        if (order == Order::Sequential) {
            plans.push_back(staging::sequential_plan(caption));
            continue;
        }
        std::vector<double> u(caption.size(), 0.0);
        if (ue != nullptr && order != Order::Random) {
            u = ue::word_uncertainty(ue->predict(data.features.at(s.id)), caption, data.bow).u;
        }
        plans.push_back(staging::decompose(caption, order_scores(order, u, s.id, seed)));
    }
    return plans;
}

std::vector<staging::StagePair> build_pairs(const std::vector<staging::StagePlan>& plans,
                                            const std::vector<corpus::SceneInstance>& scenes) {
    if (plans.size() != scenes.size()) {
        throw std::invalid_argument("build_pairs: one plan per scene expected");
    }
    std::vector<staging::StagePair> pairs;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        auto p = staging::build_training_pairs(plans[i], scenes[i].id);
        pairs.insert(pairs.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }
    return pairs;
}

// ---------------------------------------------------------------------------

TrainedUE train_ue(const Dataset& data, const RunConfig& cfg) {
    const corpus::FeatureCodebook codebook(data.grammar, data.feature_config);
    auto res = ue::train_ue(data.train, data.vocab, data.bow, codebook, cfg.ue, cfg.ue_train);
    return TrainedUE{std::move(res.model), res.u_avg, std::move(res.history)};
}

model::InsertionModel train_insertion(const Dataset& data, const RunConfig& cfg,
                                      const std::vector<staging::StagePair>& pairs,
                                      const model::BaselineModel* embedding_source, nc::TrainLoopResult* history) {
    model::InsertionModel m(cfg.model, data.vocab, cfg.train.seed);
    if (embedding_source != nullptr) {
        model::copy_text_embeddings(m, *embedding_source);
    }
    auto res = model::train_insertion(m, pairs, data.features, cfg.train);
    if (history != nullptr) {
        *history = std::move(res.history);
    }
    return m;
}

model::BaselineModel train_baseline(const Dataset& data, const RunConfig& cfg, model::BaselineMode mode,
                                    nc::TrainLoopResult* history) {
    model::BaselineModel m(mode, cfg.model, data.vocab, cfg.baseline_train.seed);
    auto res = model::train_baseline(m, data.train, data.features, cfg.baseline_train);
    if (history != nullptr) {
        *history = std::move(res.history);
    }
    return m;
}

model::CheckpointContext checkpoint_context(const Dataset& data, const RunConfig& cfg, double u_avg) {
    model::CheckpointContext ctx;
    ctx.features = corpus::feature_config_to_json(data.feature_config);
    ctx.grammar = data.grammar.to_json();
    ctx.run_config = cfg.to_json();
    ctx.u_avg = u_avg;
    ctx.seed = cfg.seed;
    return ctx;
}

corpus::Grammar grammar_from_checkpoint(const ckpt::ModelCheckpoint& c) {
    if (!c.dims.contains("grammar")) {
        throw DataError("checkpoint: missing grammar");
    }
    try {
        return corpus::Grammar::from_json(c.dims.at("grammar"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint grammar: ") + e.what());
    }
}

} // namespace uaic::pipeline

// ---------------------------------------------------------------------------
// Model cache

namespace uaic::pipeline {

ModelCache::ModelCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
    if (dir_) {
        std::filesystem::create_directories(*dir_);
    }
}

std::string ModelCache::key(const Dataset& data, const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h = (h ^ c) * 1099511628211ULL;
        }
    };
    mix(ckpt::hex64(data.vocab.content_hash()));
    mix(std::to_string(data.train.size()));
    mix(data.train.front().id + data.train.back().id);
    mix(cfg.to_json().dump());
    return ckpt::hex64(h);
}

std::optional<std::filesystem::path> ModelCache::file(const std::string& stem, const Dataset& data,
                                                      const RunConfig& cfg) const {
    if (!dir_) {
        return std::nullopt;
    }
    return *dir_ / (stem + "-" + key(data, cfg) + ".ckpt");
}

TrainedUE ModelCache::ue(const Dataset& data, const RunConfig& cfg) {
    const auto path = file("ue", data, cfg);
    if (path && std::filesystem::exists(*path)) {
        const auto c = ckpt::load_checkpoint(*path, ckpt::ModelKind::UE, &data.vocab);
        log::info("cache: loaded {}", path->string());
        return TrainedUE{ue::model_from_checkpoint(c), c.u_avg, {}};
    }
    auto trained = train_ue(data, cfg);
    if (path) {
        ckpt::save_checkpoint(
            ue::to_checkpoint(trained.model, data.vocab, data.bow, data.feature_config, trained.u_avg, cfg.seed),
            *path);
    }
    return trained;
}

model::InsertionModel ModelCache::insertion(const Dataset& data, const RunConfig& cfg, Order order,
                                            const TrainedUE& ue) {
    const auto path = file("ins-" + order_name(order), data, cfg);
    if (path && std::filesystem::exists(*path)) {
        log::info("cache: loaded {}", path->string());
        return model::insertion_from_checkpoint(
            ckpt::load_checkpoint(*path, ckpt::ModelKind::Insertion, &data.vocab));
    }
    const auto plans = build_plans(data, &ue.model, order, cfg.seed);
    const auto pairs = build_pairs(plans, data.train);
    std::optional<model::BaselineModel> source;
    if (cfg.copy_embeddings) {
        source.emplace(baseline(data, cfg, model::BaselineMode::AR));
    }
    auto m = train_insertion(data, cfg, pairs, source ? &*source : nullptr);
    if (path) {
        ckpt::save_checkpoint(model::to_checkpoint(m, checkpoint_context(data, cfg, ue.u_avg)), *path);
    }
    return m;
}

model::BaselineModel ModelCache::baseline(const Dataset& data, const RunConfig& cfg, model::BaselineMode mode) {
    const auto kind = mode == model::BaselineMode::AR ? ckpt::ModelKind::AR : ckpt::ModelKind::NAIC;
    const auto path = file(model::mode_name(mode), data, cfg);
    if (path && std::filesystem::exists(*path)) {
        log::info("cache: loaded {}", path->string());
        return model::baseline_from_checkpoint(ckpt::load_checkpoint(*path, kind, &data.vocab));
    }
    auto m = train_baseline(data, cfg, mode);
    if (path) {
        ckpt::save_checkpoint(model::to_checkpoint(m, checkpoint_context(data, cfg, 0.0)), *path);
    }
    return m;
}

} // namespace uaic::pipeline
