#include "uaic/staging.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "uaic/errors.hpp"

namespace uaic::staging {

std::size_t MaskPattern::masked() const {
    return static_cast<std::size_t>(std::count(phi.begin(), phi.end(), std::uint8_t{1}));
}

bool MaskPattern::non_adjacent() const {
    for (std::size_t t = 1; t < phi.size(); ++t) {
        if (phi[t] && phi[t - 1]) {
            return false;
        }
    }
    return true;
}

MaskPattern dp_mask(std::span<const double> u) {
    const std::size_t T = u.size();
    if (T == 0) {
        throw std::invalid_argument("dp_mask: empty uncertainty list");
    }
    // best[t] / pattern[t] describe the optimum over the first t tokens.
    std::vector<double> best(T + 1, 0.0);
    std::vector<std::vector<std::uint8_t>> pattern(T + 1);
    best[1] = u[0];
    pattern[1] = {1};
    for (std::size_t t = 2; t <= T; ++t) {
        const double take = best[t - 2] + u[t - 1];
        if (best[t - 1] > take) {
            best[t] = best[t - 1];
            pattern[t] = pattern[t - 1];
            pattern[t].push_back(0);
        } else {
            best[t] = take;
            pattern[t] = pattern[t - 2];
            // Extending the t-2 prefix needs both the skipped and the taken
            // position so that |phi| == t.
            pattern[t].push_back(0);
            pattern[t].push_back(1);
        }
    }
    return MaskPattern{std::move(pattern[T]), best[T]};
}

MaskPattern brute_force_mask(std::span<const double> u) {
    const std::size_t T = u.size();
    if (T == 0) {
        throw std::invalid_argument("brute_force_mask: empty uncertainty list");
    }
    if (T > 22) {
        throw std::invalid_argument("brute_force_mask: T = " + std::to_string(T) + " exceeds 22");
    }
    auto rightmost_one_wins = [T](std::uint32_t a, std::uint32_t b) {
        // true when a should replace b on a tie
        for (std::size_t t = T; t-- > 0;) {
            const bool ba = (a >> t) & 1u, bb = (b >> t) & 1u;
            if (ba != bb) {
                return ba;
            }
        }
        return false;
    };
    std::uint32_t best_mask = 0;
    double best_value = -1.0;
    bool have = false;
    for (std::uint32_t m = 0; m < (1u << T); ++m) {
        if (m & (m >> 1)) {
            continue;
        }
        double v = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            if ((m >> t) & 1u) {
                v += u[t];
            }
        }
        if (!have || v > best_value || (v == best_value && rightmost_one_wins(m, best_mask))) {
            best_value = v;
            best_mask = m;
            have = true;
        }
    }
    MaskPattern out;
    out.value = best_value;
    out.phi.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        out.phi[t] = (best_mask >> t) & 1u;
    }
    return out;
}

namespace {

// Fills stage k's insertion records from the difference to its parent.
void link_stages(StagePlan& plan) {
    std::vector<StageToken> parent;
    for (auto& stage : plan.stages) {
        stage.inserted.clear();
        std::size_t slot = 0;
        for (const auto& tok : stage.tokens) {
            if (slot < parent.size() && parent[slot] == tok) {
                ++slot;
            } else {
                stage.inserted.push_back({slot, tok.token, tok.position});
            }
        }
        parent = stage.tokens;
    }
}

} // namespace

StagePlan decompose(const std::vector<TokenId>& caption, std::span<const double> u) {
    if (caption.empty()) {
        throw std::invalid_argument("decompose: empty caption");
    }
    if (u.size() != caption.size()) {
        throw std::invalid_argument("decompose: uncertainty profile length " + std::to_string(u.size()) +
                                    " != caption length " + std::to_string(caption.size()));
    }
    std::vector<Stage> backward;
    std::vector<StageToken> current;
    for (std::size_t i = 0; i < caption.size(); ++i) {
        current.push_back({caption[i], i});
    }
    while (!current.empty()) {
        backward.push_back(Stage{current, {}});
        std::vector<double> sub;
        sub.reserve(current.size());
        for (const auto& t : current) {
            sub.push_back(u[t.position]);
        }
        MaskPattern mask = dp_mask(sub);
        if (mask.masked() == 0) {
            // Unreachable for dp_mask; keeps the loop finite for odd inputs.
            const auto it = std::max_element(sub.begin(), sub.end());
            mask.phi[static_cast<std::size_t>(it - sub.begin())] = 1;
        }
        std::vector<StageToken> prev;
        for (std::size_t i = 0; i < current.size(); ++i) {
            if (!mask.phi[i]) {
                prev.push_back(current[i]);
            }
        }
        current = std::move(prev);
    }
    StagePlan plan;
    plan.caption = caption;
    plan.stages.assign(backward.rbegin(), backward.rend());
    link_stages(plan);
    return plan;
}

StagePlan sequential_plan(const std::vector<TokenId>& caption) {
    if (caption.empty()) {
        throw std::invalid_argument("sequential_plan: empty caption");
    }
    StagePlan plan;
    plan.caption = caption;
    std::vector<StageToken> cur;
    for (std::size_t i = 0; i < caption.size(); ++i) {
        cur.push_back({caption[i], i});
        plan.stages.push_back(Stage{cur, {}});
    }
    link_stages(plan);
    return plan;
}

std::vector<TokenId> replay(const StagePlan& plan) {
    std::vector<StageToken> seq;
    for (const auto& stage : plan.stages) {
        std::vector<std::vector<const Insertion*>> by_slot(seq.size() + 1);
        for (const auto& ins : stage.inserted) {
            if (ins.slot > seq.size()) {
                throw std::invalid_argument("replay: slot " + std::to_string(ins.slot) + " out of range");
            }
            by_slot[ins.slot].push_back(&ins);
        }
        std::vector<StageToken> next;
        for (std::size_t slot = 0; slot <= seq.size(); ++slot) {
            if (by_slot[slot].size() > 1) {
                throw std::invalid_argument("replay: more than one insertion in slot " + std::to_string(slot));
            }
            if (!by_slot[slot].empty()) {
                next.push_back({by_slot[slot][0]->token, by_slot[slot][0]->position});
            }
            if (slot < seq.size()) {
                next.push_back(seq[slot]);
            }
        }
        seq = std::move(next);
    }
    std::vector<TokenId> out;
    for (const auto& t : seq) {
        out.push_back(t.token);
    }
    return out;
}

bool reconstructs(const StagePlan& plan) {
    std::vector<StageToken> seq;
    try {
        for (const auto& stage : plan.stages) {
            std::vector<std::vector<const Insertion*>> by_slot(seq.size() + 1);
            for (const auto& ins : stage.inserted) {
                if (ins.slot > seq.size()) {
                    return false;
                }
                by_slot[ins.slot].push_back(&ins);
            }
            std::vector<StageToken> next;
            for (std::size_t slot = 0; slot <= seq.size(); ++slot) {
                if (by_slot[slot].size() > 1) {
                    return false;
                }
                if (!by_slot[slot].empty()) {
                    next.push_back({by_slot[slot][0]->token, by_slot[slot][0]->position});
                }
                if (slot < seq.size()) {
                    next.push_back(seq[slot]);
                }
            }
            if (next != stage.tokens) {
                return false;
            }
            seq = std::move(next);
        }
    } catch (const std::exception&) {
        return false;
    }
    return replay(plan) == plan.caption;
}

std::vector<TokenId> frame(const std::vector<TokenId>& tokens) {
    std::vector<TokenId> out;
    out.reserve(tokens.size() + 2);
    out.push_back(corpus::kBosId);
    out.insert(out.end(), tokens.begin(), tokens.end());
    out.push_back(corpus::kEosId);
    return out;
}

std::vector<StagePair> build_training_pairs(const StagePlan& plan, const std::string& scene_id) {
    std::vector<StagePair> pairs;
    std::vector<TokenId> parent;
    for (const auto& stage : plan.stages) {
        StagePair p;
        p.scene = scene_id;
        p.input = frame(parent);
        p.targets.assign(parent.size() + 1, corpus::kNoneId);
        for (const auto& ins : stage.inserted) {
            if (ins.slot >= p.targets.size()) {
                throw std::invalid_argument("build_training_pairs: slot out of range");
            }
            if (p.targets[ins.slot] != corpus::kNoneId) {
                throw std::invalid_argument("build_training_pairs: two insertions in slot " +
                                            std::to_string(ins.slot) + " of scene " + scene_id);
            }
            p.targets[ins.slot] = ins.token;
        }
        pairs.push_back(std::move(p));
        parent.clear();
        for (const auto& t : stage.tokens) {
            parent.push_back(t.token);
        }
    }
    StagePair terminal;
    terminal.scene = scene_id;
    terminal.input = frame(parent);
    terminal.targets.assign(parent.size() + 1, corpus::kNoneId);
    pairs.push_back(std::move(terminal));
    return pairs;
}

nlohmann::json pair_to_json(const StagePair& pair, const corpus::Vocabulary& vocab) {
    return nlohmann::json{
        {"scene", pair.scene}, {"input", vocab.decode(pair.input)}, {"targets", vocab.decode(pair.targets)}};
}

StagePair pair_from_json(const nlohmann::json& j, const corpus::Vocabulary& vocab) {
    static const std::set<std::string> fields = {"scene", "input", "targets"};
    if (!j.is_object() || j.size() != fields.size()) {
        throw DataError("stage pair: expected exactly {scene, input, targets}");
    }
    StagePair p;
    try {
        p.scene = j.at("scene").get<std::string>();
        for (const auto& t : j.at("input").get<std::vector<std::string>>()) {
            p.input.push_back(vocab.id(t));
        }
        for (const auto& t : j.at("targets").get<std::vector<std::string>>()) {
            p.targets.push_back(vocab.id(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("stage pair: ") + e.what());
    }
    if (p.input.size() < 2 || p.input.front() != corpus::kBosId || p.input.back() != corpus::kEosId) {
        throw DataError("stage pair: input must be framed by [BOS] ... [EOS]");
    }
    if (p.targets.size() + 1 != p.input.size()) {
        throw DataError("stage pair: slot count must equal input length - 1");
    }
    return p;
}

void write_pairs(const std::filesystem::path& path, const std::vector<StagePair>& pairs,
                 const corpus::Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& p : pairs) {
        out << pair_to_json(p, vocab).dump() << '\n';
    }
}

std::vector<StagePair> read_pairs(const std::filesystem::path& path, const corpus::Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open stage pairs " + path.string());
    }
    std::vector<StagePair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(pair_from_json(nlohmann::json::parse(line), vocab));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("stage pairs: invalid JSON: ") + e.what(), lineno);
        } catch (const DataError& e) {
            throw DataError(e.what(), lineno);
        }
    }
    return out;
}

} // namespace uaic::staging
