#include "uaic/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uaic/errors.hpp"
#include "uaic/rng.hpp"

namespace uaic::corpus {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace {

bool is_class_ref(const std::string& tok) {
    return tok.size() > 2 && tok.front() == '<' && tok.back() == '>';
}

std::string class_name(const std::string& tok) { return tok.substr(1, tok.size() - 2); }

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

// ---------------------------------------------------------------------------
// Grammar

void Grammar::validate() const {
    for (const char* required : {"obj", "attr"}) {
        auto it = word_classes.find(required);
        if (it == word_classes.end() || it->second.empty()) {
            throw DataError(std::string("grammar: word class '") + required + "' missing or empty");
        }
    }
    auto check = [&](const std::vector<std::string>& tmpl, bool allow_rel, const std::string& where) {
        for (const auto& tok : tmpl) {
            if (!is_class_ref(tok)) {
                continue;
            }
            const std::string cls = class_name(tok);
            if (allow_rel && cls == "rel") {
                continue;
            }
            auto it = word_classes.find(cls);
            if (it == word_classes.end() || it->second.empty()) {
                throw DataError("grammar: " + where + " references unknown word class '" + cls + "'");
            }
        }
    };
    check(noun_phrase, false, "noun_phrase");
    if (std::count(noun_phrase.begin(), noun_phrase.end(), "<obj>") != 1 ||
        std::count(noun_phrase.begin(), noun_phrase.end(), "<attr>") != 1) {
        throw DataError("grammar: noun_phrase must contain <obj> and <attr> exactly once");
    }
    for (const auto& o : openers) {
        check(o, false, "opener");
    }
    for (const auto& c : closers) {
        check(c, false, "closer");
    }
    if (relations.empty()) {
        throw DataError("grammar: no relations");
    }
    for (const auto& [word, phrase] : relations) {
        check(phrase, true, "relation '" + word + "'");
    }
    if (openers.empty()) {
        throw DataError("grammar: openers must be nonempty (use [] for no opener)");
    }
    if (max_objects == 0 || max_objects > objects().size()) {
        throw DataError("grammar: max_objects must be in [1, |obj|]");
    }
    if (min_len == 0 || min_len > max_len) {
        throw DataError("grammar: invalid length range");
    }
}

std::vector<std::string> Grammar::relation_words() const {
    std::vector<std::string> out;
    for (const auto& [word, phrase] : relations) {
        out.push_back(word);
    }
    return out;
}

std::set<std::string> Grammar::terminals() const {
    std::set<std::string> out;
    auto add_template = [&](const std::vector<std::string>& tmpl) {
        for (const auto& tok : tmpl) {
            if (!is_class_ref(tok)) {
                out.insert(tok);
            } else if (class_name(tok) != "rel") {
                const auto& words = word_classes.at(class_name(tok));
                out.insert(words.begin(), words.end());
            }
        }
    };
    add_template(noun_phrase);
    for (const auto& o : openers) {
        add_template(o);
    }
    for (const auto& c : closers) {
        add_template(c);
    }
    for (const auto& [word, phrase] : relations) {
        out.insert(word);
        add_template(phrase);
    }
    return out;
}

Grammar Grammar::from_json(const json& j) {
    static const std::set<std::string> known = {
        "word_classes", "relations",         "noun_phrase", "openers", "closers",  "closer_prob",
        "relation_fidelity", "max_objects", "min_len",     "max_len"};
    if (!j.is_object()) {
        throw DataError("grammar: expected a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw DataError("grammar: unknown key '" + key + "'");
        }
    }
    Grammar g = default_grammar();
    try {
        if (j.contains("word_classes")) {
            g.word_classes = j.at("word_classes").get<std::map<std::string, std::vector<std::string>>>();
        }
        if (j.contains("relations")) {
            g.relations.clear();
            for (const auto& r : j.at("relations")) {
                g.relations.emplace_back(r.at(0).get<std::string>(), r.at(1).get<std::vector<std::string>>());
            }
        }
        if (j.contains("noun_phrase")) {
            g.noun_phrase = j.at("noun_phrase").get<std::vector<std::string>>();
        }
        if (j.contains("openers")) {
            g.openers = j.at("openers").get<std::vector<std::vector<std::string>>>();
        }
        if (j.contains("closers")) {
            g.closers = j.at("closers").get<std::vector<std::vector<std::string>>>();
        }
        g.closer_prob = j.value("closer_prob", g.closer_prob);
        g.relation_fidelity = j.value("relation_fidelity", g.relation_fidelity);
        g.max_objects = j.value("max_objects", g.max_objects);
        g.min_len = j.value("min_len", g.min_len);
        g.max_len = j.value("max_len", g.max_len);
    } catch (const json::exception& e) {
        throw DataError(std::string("grammar: ") + e.what());
    }
    g.validate();
    return g;
}

json Grammar::to_json() const {
    json rel = json::array();
    for (const auto& [word, phrase] : relations) {
        rel.push_back(json::array({word, phrase}));
    }
    return json{{"word_classes", word_classes},
                {"relations", rel},
                {"noun_phrase", noun_phrase},
                {"openers", openers},
                {"closers", closers},
                {"closer_prob", closer_prob},
                {"relation_fidelity", relation_fidelity},
                {"max_objects", max_objects},
                {"min_len", min_len},
                {"max_len", max_len}};
}

Grammar default_grammar() {
    Grammar g;
    g.word_classes = {
        {"det", {"a", "the"}},
        {"obj", {"cube", "sphere", "cone", "cylinder", "table", "chair", "box", "ball", "lamp", "cup"}},
        {"attr", {"red", "blue", "green", "yellow", "small", "large", "wooden", "shiny"}},
    };
    g.relations = {
        {"left", {"to", "the", "<rel>", "of"}},
        {"right", {"to", "the", "<rel>", "of"}},
        {"top", {"on", "<rel>", "of"}},
        {"front", {"in", "<rel>", "of"}},
        {"next", {"<rel>", "to"}},
        {"behind", {"<rel>"}},
        {"under", {"<rel>"}},
        {"near", {"<rel>"}},
        {"above", {"<rel>"}},
        {"beside", {"<rel>"}},
    };
    g.noun_phrase = {"<det>", "<attr>", "<obj>"};
    g.openers = {{}, {"there", "is"}};
    g.closers = {{"in", "the", "room"}, {"on", "the", "floor"}};
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

void expand(const Grammar& g, const std::vector<std::string>& tmpl, Rng& rng, const std::string& obj,
            const std::string& attr, const std::string& rel, std::vector<std::string>& out) {
    for (const auto& tok : tmpl) {
        if (!is_class_ref(tok)) {
            out.push_back(tok);
            continue;
        }
        const std::string cls = class_name(tok);
        if (cls == "obj" && !obj.empty()) {
            out.push_back(obj);
        } else if (cls == "attr" && !attr.empty()) {
            out.push_back(attr);
        } else if (cls == "rel") {
            out.push_back(rel);
        } else {
            const auto& words = g.word_classes.at(cls);
            out.push_back(words[rng.below(words.size())]);
        }
    }
}

} // namespace

SceneInstance generate_scene(const Grammar& g, std::uint64_t seed, std::string id) {
    Rng rng(seed);
    SceneInstance s;
    s.id = std::move(id);
    s.seed = seed;

    const auto& objs = g.objects();
    const auto& attrs = g.attributes();
    const std::size_t n = 1 + rng.below(g.max_objects);
    std::vector<std::size_t> pick(objs.size());
    std::iota(pick.begin(), pick.end(), 0);
    rng.shuffle(pick);
    pick.resize(n);
    // Canonical caption order: grammar order of the object words.
    std::sort(pick.begin(), pick.end());
    for (std::size_t idx : pick) {
        s.objects.push_back({objs[idx], attrs[rng.below(attrs.size())]});
    }
    const std::size_t nrel = g.relations.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t r = (3 * pick[i] + 5 * pick[i + 1]) % nrel;
        if (!rng.bernoulli(g.relation_fidelity)) {
            r = rng.below(nrel);
        }
        s.relations.push_back({g.relations[r].first, i, i + 1});
    }

    const auto& opener_tmpl = g.openers[rng.below(g.openers.size())];
    const bool use_closer = !g.closers.empty() && rng.bernoulli(g.closer_prob);
    const std::size_t closer_idx = g.closers.empty() ? 0 : rng.below(g.closers.size());

    std::vector<std::string> chain;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const auto& rel = s.relations[i - 1].name;
            const auto it = std::find_if(g.relations.begin(), g.relations.end(),
                                         [&](const auto& p) { return p.first == rel; });
            expand(g, it->second, rng, "", "", rel, chain);
        }
        expand(g, g.noun_phrase, rng, s.objects[i].name, s.objects[i].attr, "", chain);
    }
    std::vector<std::string> opener, closer;
    expand(g, opener_tmpl, rng, "", "", "", opener);
    if (use_closer) {
        expand(g, g.closers[closer_idx], rng, "", "", "", closer);
    }

    auto assemble = [&](const std::vector<std::string>& o, const std::vector<std::string>& c) {
        std::vector<std::string> out = o;
        out.insert(out.end(), chain.begin(), chain.end());
        out.insert(out.end(), c.begin(), c.end());
        return out;
    };
    s.caption = assemble(opener, closer);
    if (s.caption.size() > g.max_len) {
        s.caption = assemble(opener, {});
    }
    if (s.caption.size() > g.max_len) {
        s.caption = chain;
    }
    // Too short: try openers in grammar order.
    for (std::size_t k = 0; s.caption.size() < g.min_len && k < g.openers.size(); ++k) {
        std::vector<std::string> alt;
        Rng det_rng(mix_seed(seed, 17 + k));
        expand(g, g.openers[k], det_rng, "", "", "", alt);
        auto candidate = assemble(alt, closer);
        if (candidate.size() >= g.min_len && candidate.size() <= g.max_len) {
            s.caption = std::move(candidate);
        }
    }
    if (s.caption.size() < g.min_len || s.caption.size() > g.max_len) {
        throw DataError("grammar cannot realize a caption within [" + std::to_string(g.min_len) + ", " +
                        std::to_string(g.max_len) + "] for seed " + std::to_string(seed));
    }
    return s;
}

std::vector<SceneInstance> generate_corpus(const Grammar& g, std::size_t count, std::uint64_t seed) {
    if (count == 0) {
        throw std::invalid_argument("generate_corpus: count must be >= 1");
    }
    g.validate();
    Rng master(seed);
    std::vector<SceneInstance> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene-%06zu", i);
        out.push_back(generate_scene(g, master.next(), id));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Features

json feature_config_to_json(const FeatureConfig& cfg) {
    return json{{"sigma", cfg.sigma}, {"dim", cfg.dim}, {"codebook_seed", cfg.codebook_seed}};
}

FeatureConfig feature_config_from_json(const json& j) {
    FeatureConfig cfg;
    if (!j.is_object()) {
        throw DataError("features: expected a JSON object");
    }
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "sigma") {
                cfg.sigma = value.get<double>();
            } else if (key == "dim") {
                cfg.dim = value.get<std::size_t>();
            } else if (key == "codebook_seed") {
                cfg.codebook_seed = value.get<std::uint64_t>();
            } else {
                throw DataError("features: unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("features: ") + e.what());
    }
    return cfg;
}

FeatureCodebook::FeatureCodebook(const Grammar& grammar, FeatureConfig cfg) : cfg_(cfg) {
    if (cfg_.dim < 2) {
        throw std::invalid_argument("feature dim must be >= 2");
    }
    if (cfg_.sigma < 0.0) {
        throw std::invalid_argument("feature sigma must be >= 0");
    }
    auto make = [&](const std::string& word, std::uint64_t tag) {
        Rng rng(mix_seed(cfg_.codebook_seed, fnv1a(word, tag)));
        std::vector<double> v(cfg_.dim);
        for (double& x : v) {
            x = rng.normal();
        }
        return v;
    };
    for (const auto& w : grammar.objects()) {
        objects_[w] = make(w, 1);
    }
    for (const auto& w : grammar.attributes()) {
        attributes_[w] = make(w, 2);
    }
}

nc::Tensor FeatureCodebook::features(const SceneInstance& scene) const {
    if (scene.objects.empty()) {
        throw DataError("scene " + scene.id + " has no objects");
    }
    nc::Tensor out({scene.objects.size(), cfg_.dim});
    Rng noise(mix_seed(scene.seed, cfg_.codebook_seed ^ 0x5eed));
    for (std::size_t r = 0; r < scene.objects.size(); ++r) {
        const auto& o = scene.objects[r];
        auto oi = objects_.find(o.name);
        if (oi == objects_.end()) {
            throw DataError("unknown object name '" + o.name + "' in scene " + scene.id);
        }
        auto ai = attributes_.find(o.attr);
        if (ai == attributes_.end()) {
            throw DataError("unknown attribute name '" + o.attr + "' in scene " + scene.id);
        }
        for (std::size_t c = 0; c < cfg_.dim; ++c) {
            double v = oi->second[c] + ai->second[c];
            if (cfg_.sigma > 0.0) {
                v += noise.normal(0.0, cfg_.sigma);
            }
            out.at(r, c) = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{std::string(kPad), std::string(kBos), std::string(kEos),
                                          std::string(kNone)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    const std::string_view specials[] = {kPad, kBos, kEos, kNone};
    if (tokens_.size() < kSpecialCount) {
        throw DataError("vocabulary: missing special tokens");
    }
    for (std::size_t i = 0; i < kSpecialCount; ++i) {
        if (tokens_[i] != specials[i]) {
            throw DataError("vocabulary: id " + std::to_string(i) + " must be " + std::string(specials[i]));
        }
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw DataError("vocabulary: duplicate token '" + tokens_[i] + "'");
        }
    }
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
    if (auto i = find(token)) {
        return *i;
    }
    throw DataError("vocabulary: unknown token '" + std::string(token) + "'");
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& words) const {
    std::vector<TokenId> out;
    out.reserve(words.size());
    for (const auto& w : words) {
        if (auto i = find(to_lower(w)); i && !is_special(*i)) {
            out.push_back(*i);
        }
    }
    return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : ids) {
        out.push_back(token(i));
    }
    return out;
}

std::uint64_t Vocabulary::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tokens_) {
        h = fnv1a(t, h);
        h = fnv1a(std::string_view("\n", 1), h);
    }
    return h;
}

json Vocabulary::to_json() const {
    return json{{"tokens", tokens_},
                {"specials", {{"pad", kPadId}, {"bos", kBosId}, {"eos", kEosId}, {"none", kNoneId}}}};
}

Vocabulary Vocabulary::from_json(const json& j) {
    try {
        if (!j.is_object() || j.size() != 2 || !j.contains("tokens") || !j.contains("specials")) {
            throw DataError("vocabulary: expected exactly {tokens, specials}");
        }
        const auto& sp = j.at("specials");
        if (sp.at("pad").get<std::size_t>() != kPadId || sp.at("bos").get<std::size_t>() != kBosId ||
            sp.at("eos").get<std::size_t>() != kEosId || sp.at("none").get<std::size_t>() != kNoneId) {
            throw DataError("vocabulary: specials must occupy ids 0-3");
        }
        return Vocabulary(j.at("tokens").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw DataError(std::string("vocabulary: ") + e.what());
    }
}

Vocabulary build_vocab(const std::vector<SceneInstance>& corpus, std::size_t min_count) {
    if (corpus.empty()) {
        throw std::invalid_argument("build_vocab: empty corpus");
    }
    std::map<std::string, std::size_t> freq;
    for (const auto& s : corpus) {
        for (const auto& w : s.caption) {
            ++freq[to_lower(w)];
        }
    }
    const std::set<std::string_view> specials = {kPad, kBos, kEos, kNone};
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [w, c] : freq) {
        if (c >= min_count && !specials.contains(w)) {
            kept.emplace_back(w, c);
        }
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> tokens = {std::string(kPad), std::string(kBos), std::string(kEos),
                                       std::string(kNone)};
    for (auto& [w, c] : kept) {
        tokens.push_back(w);
    }
    return Vocabulary(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Bag-of-words vocabulary

BoWVocabulary::BoWVocabulary(std::vector<TokenId> ids, std::vector<std::string> stop_list)
    : ids_(std::move(ids)), stop_list_(std::move(stop_list)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        pos_.emplace(ids_[i], i);
    }
}

std::optional<std::size_t> BoWVocabulary::position(TokenId id) const {
    auto it = pos_.find(id);
    if (it == pos_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<double> BoWVocabulary::presence(const std::vector<TokenId>& caption) const {
    std::vector<double> psi(ids_.size(), 0.0);
    for (auto t : caption) {
        if (auto p = position(t)) {
            psi[*p] = 1.0;
        }
    }
    return psi;
}

BoWVocabulary build_bow_vocab(const Vocabulary& vocab, const std::set<std::string>& stop_list) {
    std::vector<TokenId> ids;
    for (TokenId i = kSpecialCount; i < vocab.size(); ++i) {
        if (!stop_list.contains(vocab.token(i))) {
            ids.push_back(i);
        }
    }
    if (ids.empty()) {
        throw DataError("build_bow_vocab: descriptive vocabulary is empty");
    }
    return BoWVocabulary(std::move(ids), std::vector<std::string>(stop_list.begin(), stop_list.end()));
}

std::set<std::string> parse_stop_list(std::string_view text) {
    std::set<std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        out.insert(to_lower(line.substr(first, last - first + 1)));
    }
    return out;
}

std::set<std::string> load_stop_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open stop list " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_stop_list(ss.str());
}

std::string_view default_stop_list_text() {
    return R"(# Stop list for the descriptive (bag-of-words) vocabulary, version 1.
# One token per line; '#' starts a comment.
# determiners
a
the
# prepositions and particles used inside relation phrases
to
of
on
in
# opener / closer words
there
is
room
floor
)";
}

std::set<std::string> default_stop_list() { return parse_stop_list(default_stop_list_text()); }

// ---------------------------------------------------------------------------
// Files

json scene_to_json(const SceneInstance& s) {
    json objects = json::array();
    for (const auto& o : s.objects) {
        objects.push_back(json::array({o.name, o.attr}));
    }
    json relations = json::array();
    for (const auto& r : s.relations) {
        relations.push_back(json::array({r.name, r.subject, r.object}));
    }
    json j;
    j["id"] = s.id;
    j["objects"] = objects;
    j["relations"] = relations;
    j["caption"] = s.caption;
    j["seed"] = s.seed;
    return j;
}

SceneInstance scene_from_json(const json& j) {
    static const std::set<std::string> fields = {"id", "objects", "relations", "caption", "seed"};
    if (!j.is_object()) {
        throw DataError("scene: expected a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!fields.contains(key)) {
            throw DataError("scene: unexpected field '" + key + "'");
        }
    }
    for (const auto& f : fields) {
        if (!j.contains(f)) {
            throw DataError("scene: missing field '" + f + "'");
        }
    }
    SceneInstance s;
    try {
        s.id = j.at("id").get<std::string>();
        for (const auto& o : j.at("objects")) {
            if (!o.is_array() || o.size() != 2) {
                throw DataError("scene: objects entries must be [name, attr]");
            }
            s.objects.push_back({o.at(0).get<std::string>(), o.at(1).get<std::string>()});
        }
        for (const auto& r : j.at("relations")) {
            if (!r.is_array() || r.size() != 3) {
                throw DataError("scene: relations entries must be [rel, i, j]");
            }
            s.relations.push_back({r.at(0).get<std::string>(), r.at(1).get<std::size_t>(),
                                   r.at(2).get<std::size_t>()});
        }
        s.caption = j.at("caption").get<std::vector<std::string>>();
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("scene: ") + e.what());
    }
    if (s.objects.empty()) {
        throw DataError("scene: no objects");
    }
    for (const auto& r : s.relations) {
        if (r.subject >= s.objects.size() || r.object >= s.objects.size()) {
            throw DataError("scene: relation index out of range");
        }
    }
    if (s.caption.empty()) {
        throw DataError("scene: empty caption");
    }
    return s;
}

void write_corpus(const std::filesystem::path& path, const std::vector<SceneInstance>& scenes) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& s : scenes) {
        out << scene_to_json(s).dump() << '\n';
    }
}

std::vector<SceneInstance> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open corpus " + path.string());
    }
    std::vector<SceneInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(scene_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw DataError(std::string("corpus: invalid JSON: ") + e.what(), lineno);
        } catch (const DataError& e) {
            throw DataError(e.what(), lineno);
        }
    }
    return out;
}

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << vocab.to_json().dump(1) << '\n';
}

Vocabulary read_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open vocabulary " + path.string());
    }
    try {
        return Vocabulary::from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw DataError(std::string("vocabulary: ") + e.what());
    }
}

} // namespace uaic::corpus
