// Command-line entry point: one subcommand per pipeline step.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "uaic/checkpoint.hpp"
#include "uaic/errors.hpp"
#include "uaic/evalbench.hpp"
#include "uaic/gradsuite.hpp"
#include "uaic/log.hpp"
#include "uaic/pipeline.hpp"

using namespace uaic;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

pipeline::RunConfig load_config(const Common& c) {
    auto cfg = c.config.empty() ? pipeline::RunConfig{} : pipeline::RunConfig::load(c.config);
    if (c.seed) {
        cfg.apply_seed(*c.seed);
    }
    return cfg;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw UsageError(std::string("missing required option ") + flag);
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << text;
}

void write_meta(const std::filesystem::path& out, const std::string& command, const json& config, json inputs) {
    json meta = {{"command", command}, {"config", config}, {"inputs", std::move(inputs)}};
    write_text(out.string() + ".meta.json", meta.dump(2) + "\n");
}

std::vector<corpus::SceneInstance> read_scenes(const std::string& path) {
    require(path, "--corpus");
    return corpus::read_corpus(path);
}

/// Run configuration echoed into a checkpoint, or the defaults when absent.
pipeline::RunConfig config_of(const ckpt::ModelCheckpoint& c) {
    if (c.config.is_object() && !c.config.empty()) {
        return pipeline::RunConfig::from_json(c.config);
    }
    return pipeline::RunConfig{};
}

corpus::Vocabulary vocab_for(const std::string& vocab_path, const std::string& ue_path,
                             const std::vector<corpus::SceneInstance>& scenes, const pipeline::RunConfig& cfg) {
    if (!vocab_path.empty()) {
        return corpus::read_vocab(vocab_path);
    }
    if (!ue_path.empty()) {
        return ckpt::load_checkpoint(ue_path, ckpt::ModelKind::UE).vocab;
    }
    return corpus::build_vocab(scenes, cfg.corpus.min_count);
}

pipeline::Dataset dataset_for(const pipeline::RunConfig& cfg, std::vector<corpus::SceneInstance> scenes,
                              const corpus::Vocabulary& vocab) {
    pipeline::Dataset d;
    d.grammar = cfg.grammar_spec();
    d.feature_config = cfg.features;
    d.vocab = vocab;
    d.bow = corpus::build_bow_vocab(vocab, corpus::default_stop_list());
    d.features = pipeline::feature_table(corpus::FeatureCodebook(d.grammar, d.feature_config), scenes);
    d.train = std::move(scenes);
    return d;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Common& c, std::size_t n) {
    require(c.out, "--out");
    auto cfg = load_config(c);
    const std::uint64_t seed = c.seed.value_or(cfg.corpus.seed);
    if (n == 0) {
        throw UsageError("--n must be >= 1");
    }
    const auto scenes = corpus::generate_corpus(cfg.grammar_spec(), n, seed);
    corpus::write_corpus(c.out, scenes);
    write_meta(c.out, "gen-data", cfg.to_json(), {{"n", n}, {"seed", seed}});
    log::info("gen-data: wrote {} scenes to {}", scenes.size(), c.out);
    return 0;
}

int cmd_build_vocab(const Common& c, const std::string& corpus_path, std::optional<std::size_t> min_count) {
    require(c.out, "--out");
    const auto cfg = load_config(c);
    const auto scenes = read_scenes(corpus_path);
    const auto vocab = corpus::build_vocab(scenes, min_count.value_or(cfg.corpus.min_count));
    corpus::write_vocab(c.out, vocab);
    log::info("build-vocab: {} tokens", vocab.size());
    return 0;
}

int cmd_train_ue(const Common& c, const std::string& corpus_path, const std::string& vocab_path) {
    require(c.out, "--out");
    const auto cfg = load_config(c);
    auto scenes = read_scenes(corpus_path);
    const auto vocab = vocab_for(vocab_path, "", scenes, cfg);
    const auto data = dataset_for(cfg, std::move(scenes), vocab);
    const auto trained = pipeline::train_ue(data, cfg);
    auto ck = ue::to_checkpoint(trained.model, data.vocab, data.bow, data.feature_config, trained.u_avg, cfg.seed);
    ck.config = cfg.to_json();
    ckpt::save_checkpoint(ck, c.out);
    std::cout << "train-ue: loss " << trained.history.initial_loss << " -> " << trained.history.final_loss
              << ", u_avg " << trained.u_avg << "\n";
    return 0;
}

int cmd_stage(const Common& c, const std::string& corpus_path, const std::string& ue_path, const std::string& order) {
    require(c.out, "--out");
    require(ue_path, "--ue");
    const auto uck = ckpt::load_checkpoint(ue_path, ckpt::ModelKind::UE);
    auto cfg = c.config.empty() ? config_of(uck) : load_config(c);
    if (c.seed) {
        cfg.apply_seed(*c.seed);
    }
    cfg.features = ue::features_from_checkpoint(uck);
    const auto model = ue::model_from_checkpoint(uck);
    auto data = dataset_for(cfg, read_scenes(corpus_path), uck.vocab);
    data.bow = ue::bow_from_checkpoint(uck);
    const auto plans = pipeline::build_plans(data, &model, pipeline::parse_order(order), cfg.seed);
    std::size_t ok = 0;
    for (const auto& p : plans) {
        ok += staging::reconstructs(p) ? 1 : 0;
    }
    const auto pairs = pipeline::build_pairs(plans, data.train);
    staging::write_pairs(c.out, pairs, data.vocab);
    write_meta(c.out, "stage", cfg.to_json(), {{"corpus", corpus_path}, {"ue", ue_path}, {"order", order}});
    std::cout << "stage: " << pairs.size() << " pairs; reconstruction " << ok << "/" << plans.size() << "\n";
    return ok == plans.size() ? 0 : 2;
}

int cmd_train(const Common& c, const std::string& corpus_path, const std::string& pairs_path,
              const std::string& ue_path, const std::string& init_from) {
    require(c.out, "--out");
    require(ue_path, "--ue");
    const auto uck = ckpt::load_checkpoint(ue_path, ckpt::ModelKind::UE);
    auto cfg = c.config.empty() ? config_of(uck) : load_config(c);
    if (c.seed) {
        cfg.apply_seed(*c.seed);
    }
    cfg.features = ue::features_from_checkpoint(uck);
    auto data = dataset_for(cfg, read_scenes(corpus_path), uck.vocab);
    data.bow = ue::bow_from_checkpoint(uck);
    std::vector<staging::StagePair> pairs;
    if (!pairs_path.empty()) {
        pairs = staging::read_pairs(pairs_path, data.vocab);
    } else {
        const auto model = ue::model_from_checkpoint(uck);
        pairs = pipeline::build_pairs(pipeline::build_plans(data, &model, pipeline::Order::Uncertainty, cfg.seed),
                                      data.train);
    }
    for (const auto& p : pairs) {
        if (!data.features.count(p.scene)) {
            throw DataError("pairs reference scene '" + p.scene + "' missing from the corpus");
        }
    }
    std::optional<model::BaselineModel> source;
    if (!init_from.empty()) {
        source.emplace(model::baseline_from_checkpoint(ckpt::load_checkpoint(init_from, ckpt::ModelKind::AR, &data.vocab)));
    }
    nc::TrainLoopResult hist;
    const auto m = pipeline::train_insertion(data, cfg, pairs, source ? &*source : nullptr, &hist);
    ckpt::save_checkpoint(model::to_checkpoint(m, pipeline::checkpoint_context(data, cfg, uck.u_avg)), c.out);
    std::cout << "train: " << pairs.size() << " pairs, loss " << hist.initial_loss << " -> " << hist.final_loss << "\n";
    return 0;
}

int cmd_train_baseline(const Common& c, const std::string& corpus_path, const std::string& mode,
                       const std::string& vocab_path, const std::string& ue_path) {
    require(c.out, "--out");
    const auto cfg = load_config(c);
    model::BaselineMode bm;
    if (mode == "ar") {
        bm = model::BaselineMode::AR;
    } else if (mode == "naic") {
        bm = model::BaselineMode::NAIC;
    } else {
        throw UsageError("--mode must be ar or naic");
    }
    auto scenes = read_scenes(corpus_path);
    const auto vocab = vocab_for(vocab_path, ue_path, scenes, cfg);
    const auto data = dataset_for(cfg, std::move(scenes), vocab);
    nc::TrainLoopResult hist;
    const auto m = pipeline::train_baseline(data, cfg, bm, &hist);
    ckpt::save_checkpoint(model::to_checkpoint(m, pipeline::checkpoint_context(data, cfg, 0.0)), c.out);
    std::cout << "train-baseline (" << mode << "): loss " << hist.initial_loss << " -> " << hist.final_loss << "\n";
    return 0;
}

struct LoadedModels {
    ckpt::ModelCheckpoint manifest;
    std::optional<model::InsertionModel> insertion;
    std::optional<model::BaselineModel> baseline;
    std::optional<ue::UEModel> ue;
    corpus::BoWVocabulary bow;
    double u_avg = 0.0;
    pipeline::RunConfig cfg;
};

LoadedModels load_models(const std::string& model_path, const std::string& ue_path) {
    require(model_path, "--model");
    LoadedModels lm;
    lm.manifest = ckpt::load_checkpoint(model_path);
    lm.cfg = config_of(lm.manifest);
    lm.cfg.features = ue::features_from_checkpoint(lm.manifest);
    lm.cfg.grammar = lm.manifest.dims.at("grammar");
    switch (lm.manifest.kind) {
    case ckpt::ModelKind::Insertion:
        lm.insertion.emplace(model::insertion_from_checkpoint(lm.manifest));
        break;
    case ckpt::ModelKind::AR:
    case ckpt::ModelKind::NAIC:
        lm.baseline.emplace(model::baseline_from_checkpoint(lm.manifest));
        break;
    case ckpt::ModelKind::UE:
        throw DataError("--model expects an insertion, ar or naic checkpoint, found ue");
    }
    lm.u_avg = lm.manifest.u_avg;
    if (!ue_path.empty()) {
        const auto uck = ckpt::load_checkpoint(ue_path, ckpt::ModelKind::UE, &lm.manifest.vocab);
        lm.ue.emplace(ue::model_from_checkpoint(uck));
        lm.bow = ue::bow_from_checkpoint(uck);
        lm.u_avg = uck.u_avg;
    }
    return lm;
}

int cmd_decode(const Common& c, const std::string& model_path, const std::string& ue_path,
               const std::string& corpus_path, const std::string& beam_text, std::size_t workers,
               std::optional<std::size_t> max_stages) {
    require(c.out, "--out");
    const auto lm = load_models(model_path, ue_path);
    const auto scenes = read_scenes(corpus_path);
    const corpus::FeatureCodebook codebook(lm.cfg.grammar_spec(), lm.cfg.features);
    const auto beam = decode::BeamConfig::parse(beam_text, lm.u_avg > 0 ? lm.u_avg : 0.5);
    if (beam.adaptive && (!lm.ue || !lm.insertion)) {
        throw UsageError("--beam adaptive needs an insertion --model and --ue");
    }
    const std::size_t stages = max_stages.value_or(lm.cfg.decode.max_stages);
    const auto& vocab = lm.manifest.vocab;
    std::vector<decode::DecodeRecord> records(scenes.size());
    const auto run = [&](std::size_t i) {
        const auto& s = scenes[i];
        const auto f = codebook.features(s);
        decode::DecodeTrace tr;
        if (lm.insertion) {
            const decode::ModelSlotScorer scorer(*lm.insertion, f);
            if (beam.adaptive) {
                const auto u = decode::token_uncertainties(*lm.ue, lm.bow, vocab.size(), f);
                tr = decode::beam_decode(scorer, &u, beam, stages);
            } else if (beam.width == 1) {
                tr = decode::greedy_parallel_decode(scorer, stages);
            } else {
                tr = decode::beam_decode(scorer, nullptr, beam, stages);
            }
        } else if (lm.baseline->mode() == model::BaselineMode::AR) {
            tr = decode::ar_decode(decode::ModelNextTokenScorer(*lm.baseline, f), beam.width, lm.cfg.decode.ar_max_len);
        } else {
            tr = decode::naic_decode(*lm.baseline, f);
        }
        records[i] = {s.id, vocab.decode(tr.caption), tr.insertion_stages(), tr.evaluations, tr.wall_ns, beam.label()};
    };
    workers = std::max<std::size_t>(1, workers);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < scenes.size(); i += workers) {
                    run(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    decode::write_records(c.out, records);
    write_meta(c.out, "decode", lm.cfg.to_json(),
               {{"model", model_path}, {"ue", ue_path}, {"corpus", corpus_path}, {"beam", beam.label()},
                {"max_stages", stages}});
    log::info("decode: {} captions written to {}", records.size(), c.out);
    return 0;
}

int cmd_eval(const Common& c, const std::string& decodes_path, const std::string& corpus_path) {
    require(decodes_path, "--decodes");
    const auto records = decode::read_records(decodes_path);
    const auto scenes = read_scenes(corpus_path);
    std::map<std::string, const corpus::SceneInstance*> by_id;
    for (const auto& s : scenes) {
        by_id[s.id] = &s;
    }
    std::vector<eval::Sentence> cands, refs;
    double evals = 0, stages = 0;
    for (const auto& r : records) {
        const auto it = by_id.find(r.scene);
        if (it == by_id.end()) {
            throw DataError("decode record for unknown scene '" + r.scene + "'");
        }
        cands.push_back(r.caption);
        refs.push_back(it->second->caption);
        evals += static_cast<double>(r.evals);
        stages += static_cast<double>(r.stages);
    }
    if (records.empty()) {
        throw DataError("no decode records in " + decodes_path);
    }
    const auto bleu = eval::corpus_bleu_all(cands, refs);
    const double n = static_cast<double>(records.size());
    json report = {{"sentences", records.size()}, {"bleu", bleu}, {"mean_evals", evals / n},
                   {"mean_stages", stages / n}, {"decodes", decodes_path}, {"corpus", corpus_path}};
    std::cout << "sentences " << records.size() << "  BLEU-1 " << bleu[0] << "  BLEU-2 " << bleu[1] << "  BLEU-3 "
              << bleu[2] << "  BLEU-4 " << bleu[3] << "  mean evals " << evals / n << "\n";
    if (!c.out.empty()) {
        write_text(c.out, report.dump(2) + "\n");
    }
    return 0;
}

int cmd_bench(const Common& c, const std::string& corpus_path, const std::string& model_path,
              const std::string& ar_path, const std::string& naic_path, const std::string& ue_path, std::size_t workers,
              std::size_t repeats) {
    require(c.out, "--out");
    require(ar_path, "--ar");
    const auto lm = load_models(model_path, ue_path);
    if (!lm.insertion) {
        throw DataError("--model must be an insertion checkpoint");
    }
    const auto& vocab = lm.manifest.vocab;
    const auto ar = model::baseline_from_checkpoint(ckpt::load_checkpoint(ar_path, ckpt::ModelKind::AR, &vocab));
    std::optional<model::BaselineModel> naic;
    if (!naic_path.empty()) {
        naic.emplace(model::baseline_from_checkpoint(ckpt::load_checkpoint(naic_path, ckpt::ModelKind::NAIC, &vocab)));
    }
    const corpus::FeatureCodebook codebook(lm.cfg.grammar_spec(), lm.cfg.features);
    eval::BenchInput in;
    in.scenes = read_scenes(corpus_path);
    in.encode = [&](const corpus::SceneInstance& s) { return codebook.features(s); };
    in.detokenize = [&](const std::vector<corpus::TokenId>& ids) { return vocab.decode(ids); };
    eval::BenchModels bm;
    bm.ar = &ar;
    bm.naic = naic ? &*naic : nullptr;
    bm.insertion = &*lm.insertion;
    bm.ue = lm.ue ? &*lm.ue : nullptr;
    bm.bow = &lm.bow;
    bm.u_avg = lm.u_avg;
    bm.max_stages = lm.cfg.decode.max_stages;
    bm.ar_max_len = lm.cfg.decode.ar_max_len;
    in.modes = eval::standard_modes(bm);
    in.workers = workers;
    in.repeats = repeats;
    const auto report = eval::bench_decode(in);
    const auto table = eval::complexity_report(report);
    auto j = report.to_json();
    j["config"] = lm.cfg.to_json();
    write_text(c.out + ".json", j.dump(2) + "\n");
    write_text(c.out + ".txt", report.to_text());
    write_text(c.out + ".csv", report.to_csv());
    write_text(c.out + ".complexity.txt", table.to_text());
    write_text(c.out + ".complexity.json", table.to_json().dump(2) + "\n");
    std::cout << report.to_text() << "\n" << table.to_text();
    return 0;
}

int cmd_ablate(const Common& c, const std::string& corpus_path, const std::string& orders_text,
               const std::string& seeds_text, const std::string& cache_dir) {
    require(c.out, "--out");
    const auto cfg = load_config(c);
    pipeline::Dataset data;
    if (corpus_path.empty()) {
        data = pipeline::make_dataset(cfg);
    } else {
        auto scenes = corpus::read_corpus(corpus_path);
        if (scenes.size() <= cfg.corpus.heldout) {
            throw DataError("corpus has no scenes left after the held-out split");
        }
        std::vector<corpus::SceneInstance> heldout(scenes.end() - static_cast<std::ptrdiff_t>(cfg.corpus.heldout),
                                                   scenes.end());
        scenes.resize(scenes.size() - cfg.corpus.heldout);
        data = pipeline::make_dataset(cfg, std::move(scenes), std::move(heldout));
    }
    eval::OrderAblationConfig ab;
    if (!orders_text.empty()) {
        ab.orders.clear();
        for (const auto& o : split_list(orders_text)) {
            ab.orders.push_back(pipeline::parse_order(o));
        }
    }
    if (!seeds_text.empty()) {
        ab.seeds.clear();
        for (const auto& s : split_list(seeds_text)) {
            try {
                ab.seeds.push_back(std::stoull(s));
            } catch (const std::exception&) {
                throw UsageError("--seeds must be a comma-separated list of integers");
            }
        }
    }
    pipeline::ModelCache cache(cache_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(cache_dir));
    const auto table = eval::run_order_ablation(data, cfg, ab, cache);
    auto j = table.to_json();
    j["config"] = cfg.to_json();
    write_text(c.out, j.dump(2) + "\n");
    std::cout << table.to_text();
    return 0;
}

int cmd_grad_check(const Common& c) {
    bool ok = true;
    for (const auto& r : nc::run_gradient_suite(c.seed.value_or(17))) {
        const bool pass = r.max_rel_error < 1e-4;
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << r.name << "  coords " << r.checked << "  max rel error "
                  << r.max_rel_error << "\n";
    }
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    log::configure_from_env();
    CLI::App app{"Uncertainty-aware parallel caption generation"};
    app.require_subcommand(1);

    Common common;
    std::string corpus_path, vocab_path, ue_path, model_path, pairs_path, init_from, mode = "ar", order = "uncertainty";
    std::string beam = "greedy", decodes_path, ar_path, naic_path, orders, seeds, cache_dir;
    std::size_t n = 0, workers = 1, repeats = 3;
    std::optional<std::size_t> min_count, max_stages;

    const auto add_common = [&](CLI::App* sub, bool out = true) {
        sub->add_option("--config", common.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "Seed for all randomness");
        if (out) {
            sub->add_option("--out", common.out, "Output path");
        }
    };

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic scene corpus");
    add_common(gen);
    gen->add_option("--n", n, "Number of scenes")->required();

    auto* bv = app.add_subcommand("build-vocab", "Build the vocabulary of a corpus");
    add_common(bv);
    bv->add_option("--corpus", corpus_path)->required();
    bv->add_option("--min-count", min_count);

    auto* tue = app.add_subcommand("train-ue", "Train the uncertainty estimator");
    add_common(tue);
    tue->add_option("--corpus", corpus_path)->required();
    tue->add_option("--vocab", vocab_path);

    auto* st = app.add_subcommand("stage", "Build stage pairs with the uncertainty DP");
    add_common(st);
    st->add_option("--corpus", corpus_path)->required();
    st->add_option("--ue", ue_path)->required();
    st->add_option("--order", order, "uncertainty | anti-uncertainty | random | sequential");

    auto* tr = app.add_subcommand("train", "Train the insertion model");
    add_common(tr);
    tr->add_option("--corpus", corpus_path)->required();
    tr->add_option("--ue", ue_path)->required();
    tr->add_option("--pairs", pairs_path);
    tr->add_option("--init-from", init_from, "Copy token embeddings from an AR checkpoint");

    auto* tb = app.add_subcommand("train-baseline", "Train the AR or one-shot baseline");
    add_common(tb);
    tb->add_option("--corpus", corpus_path)->required();
    tb->add_option("--mode", mode, "ar | naic");
    tb->add_option("--vocab", vocab_path);
    tb->add_option("--ue", ue_path, "Take the vocabulary from this estimator checkpoint");

    auto* dc = app.add_subcommand("decode", "Caption scenes with a trained model");
    add_common(dc);
    dc->add_option("--model", model_path)->required();
    dc->add_option("--ue", ue_path);
    dc->add_option("--corpus", corpus_path)->required();
    dc->add_option("--beam", beam, "greedy | fixed:B | adaptive");
    dc->add_option("--workers", workers)->check(CLI::Range(1, 256));
    dc->add_option("--max-stages", max_stages);

    auto* ev = app.add_subcommand("eval", "Score decodes with corpus BLEU");
    add_common(ev);
    ev->add_option("--decodes", decodes_path)->required();
    ev->add_option("--corpus", corpus_path)->required();

    auto* bn = app.add_subcommand("bench", "Benchmark evaluations and latency");
    add_common(bn);
    bn->add_option("--corpus", corpus_path)->required();
    bn->add_option("--model", model_path)->required();
    bn->add_option("--ar", ar_path)->required();
    bn->add_option("--naic", naic_path);
    bn->add_option("--ue", ue_path);
    bn->add_option("--workers", workers)->check(CLI::Range(1, 256));
    bn->add_option("--repeats", repeats)->check(CLI::Range(1, 100));

    auto* ab = app.add_subcommand("ablate-order", "Compare generation orders over seeds");
    add_common(ab);
    ab->add_option("--corpus", corpus_path);
    ab->add_option("--orders", orders, "Comma-separated orders");
    ab->add_option("--seeds", seeds, "Comma-separated seeds (at least 3)");
    ab->add_option("--cache", cache_dir, "Checkpoint cache directory");

    auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient checks");
    add_common(gc, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*gen) return cmd_gen_data(common, n);
        if (*bv) return cmd_build_vocab(common, corpus_path, min_count);
        if (*tue) return cmd_train_ue(common, corpus_path, vocab_path);
        if (*st) return cmd_stage(common, corpus_path, ue_path, order);
        if (*tr) return cmd_train(common, corpus_path, pairs_path, ue_path, init_from);
        if (*tb) return cmd_train_baseline(common, corpus_path, mode, vocab_path, ue_path);
        if (*dc) return cmd_decode(common, model_path, ue_path, corpus_path, beam, workers, max_stages);
        if (*ev) return cmd_eval(common, decodes_path, corpus_path);
        if (*bn) return cmd_bench(common, corpus_path, model_path, ar_path, naic_path, ue_path, workers, repeats);
        if (*ab) return cmd_ablate(common, corpus_path, orders, seeds, cache_dir);
        if (*gc) return cmd_grad_check(common);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
