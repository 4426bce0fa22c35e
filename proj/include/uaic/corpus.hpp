#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "uaic/tensor.hpp"

namespace uaic::corpus {

using json = nlohmann::json;
using TokenId = std::size_t;

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kBos = "[BOS]";
inline constexpr std::string_view kEos = "[EOS]";
inline constexpr std::string_view kNone = "[NONE]";
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kNoneId = 3;
inline constexpr std::size_t kSpecialCount = 4;

struct SceneObject {
    std::string name;
    std::string attr;
    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Relation {
    std::string name;
    std::size_t subject = 0;
    std::size_t object = 0;
    friend bool operator==(const Relation&, const Relation&) = default;
};

/// A synthetic "image": objects with attributes and pairwise relations, plus
/// the reference caption produced from the same seed.
struct SceneInstance {
    std::string id;
    std::vector<SceneObject> objects;
    std::vector<Relation> relations;
    std::vector<std::string> caption;
    std::uint64_t seed = 0;
    friend bool operator==(const SceneInstance&, const SceneInstance&) = default;
};

/// Caption grammar. Template tokens of the form "<class>" refer to a word
/// class; relation phrases may additionally use "<rel>" for the relation
/// word itself. Objects come from class "obj" and attributes from "attr".
struct Grammar {
    std::map<std::string, std::vector<std::string>> word_classes;
    /// relation word -> phrase template, in a fixed order
    std::vector<std::pair<std::string, std::vector<std::string>>> relations;
    std::vector<std::string> noun_phrase;
    std::vector<std::vector<std::string>> openers; // chosen uniformly; may contain {}
    std::vector<std::vector<std::string>> closers; // appended with closer_prob
    double closer_prob = 0.25;
    double relation_fidelity = 0.75;
    std::size_t max_objects = 3;
    std::size_t min_len = 4;
    std::size_t max_len = 20;

    /// Throws DataError on templates that reference unknown word classes or
    /// on missing obj/attr classes.
    void validate() const;

    static Grammar from_json(const json& j);
    json to_json() const;

    /// Every word the grammar can emit.
    std::set<std::string> terminals() const;
    const std::vector<std::string>& objects() const { return word_classes.at("obj"); }
    const std::vector<std::string>& attributes() const { return word_classes.at("attr"); }
    std::vector<std::string> relation_words() const;
};

Grammar default_grammar();

SceneInstance generate_scene(const Grammar& grammar, std::uint64_t seed, std::string id);
/// Deterministic for a fixed seed; per-scene seeds are drawn from `seed`.
std::vector<SceneInstance> generate_corpus(const Grammar& grammar, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Region features

struct FeatureConfig {
    double sigma = 0.1;
    std::size_t dim = 32;
    std::uint64_t codebook_seed = 1234;
};

json feature_config_to_json(const FeatureConfig& cfg);
/// Strict: rejects unknown keys; missing keys keep their defaults.
FeatureConfig feature_config_from_json(const json& j);

/// Fixed seeded embeddings for every object and attribute word. A region
/// vector is object-embedding + attribute-embedding + N(0, sigma^2) noise,
/// with the noise stream seeded from the scene seed.
class FeatureCodebook {
  public:
    FeatureCodebook(const Grammar& grammar, FeatureConfig cfg);

    const FeatureConfig& config() const { return cfg_; }
    /// Shape (|objects|, dim). Throws on unknown object/attribute names.
    nc::Tensor features(const SceneInstance& scene) const;

  private:
    FeatureConfig cfg_;
    std::unordered_map<std::string, std::vector<double>> objects_;
    std::unordered_map<std::string, std::vector<double>> attributes_;
};

// ---------------------------------------------------------------------------
// Vocabularies

class Vocabulary {
  public:
    Vocabulary();
    /// `tokens` must start with the four specials in id order.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(TokenId id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::optional<TokenId> find(std::string_view token) const;
    TokenId id(std::string_view token) const;
    static bool is_special(TokenId id) { return id < kSpecialCount; }

    /// Lowercases and maps tokens; tokens outside the vocabulary are dropped.
    std::vector<TokenId> encode(const std::vector<std::string>& words) const;
    std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

    /// FNV-1a over the ordered token list.
    std::uint64_t content_hash() const;

    json to_json() const;
    static Vocabulary from_json(const json& j);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Tokens with frequency >= min_count (lowercased) plus the four specials,
/// ordered by frequency descending then lexicographically.
Vocabulary build_vocab(const std::vector<SceneInstance>& corpus, std::size_t min_count);

/// Descriptive subset V of the vocabulary used by the uncertainty estimator.
class BoWVocabulary {
  public:
    BoWVocabulary() = default;
    BoWVocabulary(std::vector<TokenId> ids, std::vector<std::string> stop_list);

    std::size_t size() const { return ids_.size(); }
    const std::vector<TokenId>& ids() const { return ids_; }
    const std::vector<std::string>& stop_list() const { return stop_list_; }
    std::optional<std::size_t> position(TokenId id) const;
    bool contains(TokenId id) const { return position(id).has_value(); }

    /// psi(S): binary presence over V for a caption.
    std::vector<double> presence(const std::vector<TokenId>& caption) const;

  private:
    std::vector<TokenId> ids_;
    std::vector<std::string> stop_list_;
    std::unordered_map<TokenId, std::size_t> pos_;
};

/// V = vocabulary - specials - stop list, in vocabulary order. Throws when V
/// would be empty.
BoWVocabulary build_bow_vocab(const Vocabulary& vocab, const std::set<std::string>& stop_list);

std::set<std::string> parse_stop_list(std::string_view text);
std::set<std::string> load_stop_list(const std::filesystem::path& path);
/// The stop list shipped in data/stopwords.txt.
std::set<std::string> default_stop_list();
std::string_view default_stop_list_text();

// ---------------------------------------------------------------------------
// Files

json scene_to_json(const SceneInstance& scene);
/// Strict: exactly the fields id, objects, relations, caption, seed.
SceneInstance scene_from_json(const json& j);

void write_corpus(const std::filesystem::path& path, const std::vector<SceneInstance>& scenes);
/// Throws DataError carrying the 1-based line number on schema violations.
std::vector<SceneInstance> read_corpus(const std::filesystem::path& path);

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::filesystem::path& path);

std::string to_lower(std::string_view s);

} // namespace uaic::corpus
