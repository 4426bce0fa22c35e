#include "uaic/decode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "uaic/errors.hpp"

namespace uaic::decode {

using corpus::kBosId;
using corpus::kEosId;
using corpus::kNoneId;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point start) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

std::size_t argmax_row(const Tensor& t, std::size_t row) {
    const std::size_t cols = t.cols();
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
        if (t.at(row, c) > t.at(row, best)) {
            best = c;
        }
    }
    return best;
}

// Indices of the k largest entries of a row, best first; ties keep the lower
// index first so rank 1 always equals argmax_row.
std::vector<std::size_t> top_k_row(const Tensor& t, std::size_t row, std::size_t k) {
    std::vector<std::size_t> idx(t.cols());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double va = t.at(row, a), vb = t.at(row, b);
                          return va != vb ? va > vb : a < b;
                      });
    idx.resize(k);
    return idx;
}

// Inserts choices[s] (insertion inventory indices) into slot s.
std::vector<TokenId> apply_insertions(const std::vector<TokenId>& framed, const std::vector<std::size_t>& choices,
                                      std::vector<TokenId>* inserted) {
    std::vector<TokenId> next;
    next.reserve(framed.size() + choices.size());
    for (std::size_t i = 0; i < framed.size(); ++i) {
        next.push_back(framed[i]);
        if (i < choices.size() && choices[i] != 0) {
            const TokenId tok = model::insertion_token(choices[i]);
            next.push_back(tok);
            if (inserted) {
                inserted->push_back(tok);
            }
        }
    }
    return next;
}

std::vector<TokenId> unframe(const std::vector<TokenId>& framed) {
    return {framed.begin() + 1, framed.end() - 1};
}

double mean_uncertainty(const std::vector<TokenId>& tokens, const TokenUncertainty& u) {
    double total = 0.0;
    for (auto t : tokens) {
        total += u.at(t);
    }
    return total / static_cast<double>(tokens.size());
}

double normalized(double score, std::size_t length) {
    return score / static_cast<double>(std::max<std::size_t>(1, length));
}

} // namespace

TokenUncertainty token_uncertainties(const ue::UEModel& ue, const corpus::BoWVocabulary& bow,
                                     std::size_t vocab_size, const Tensor& features) {
    const auto pi = ue.predict(features);
    TokenUncertainty u(vocab_size, 1.0);
    for (TokenId t = 0; t < vocab_size; ++t) {
        u[t] = ue::token_uncertainty(pi, t, bow);
    }
    return u;
}

DecodeTrace greedy_parallel_decode(const SlotScorer& scorer, std::size_t max_stages) {
    if (max_stages == 0) {
        throw std::invalid_argument("greedy_parallel_decode: max_stages must be >= 1");
    }
    const auto start = Clock::now();
    DecodeTrace trace;
    std::vector<TokenId> framed = {kBosId, kEosId};
    while (true) {
        const Tensor lp = scorer.slot_log_probs(framed);
        ++trace.evaluations;
        std::vector<std::size_t> choices(framed.size() - 1);
        std::size_t inserts = 0;
        double step = 0.0;
        for (std::size_t s = 0; s < choices.size(); ++s) {
            choices[s] = argmax_row(lp, s);
            step += lp.at(s, choices[s]);
            inserts += choices[s] != 0;
        }
        if (inserts == 0) {
            trace.log_prob += step;
            trace.converged = true;
            break;
        }
        if (trace.stages.size() == max_stages || framed.size() + inserts > scorer.max_len()) {
            break;
        }
        trace.log_prob += step;
        framed = apply_insertions(framed, choices, nullptr);
        trace.stages.push_back({inserts, 1, 0.0});
    }
    trace.forward_passes = trace.evaluations;
    trace.caption = unframe(framed);
    trace.wall_ns = elapsed_ns(start);
    return trace;
}

int adaptive_beam_size(double u_k, double u_avg) {
    if (!(u_avg > 0.0)) {
        throw std::invalid_argument("adaptive_beam_size: u_avg must be > 0");
    }
    const double ratio = std::clamp((u_avg - u_k) / u_avg, -0.5, 0.5);
    return 3 + static_cast<int>(std::trunc(4.0 * ratio));
}

std::string BeamConfig::label() const {
    if (adaptive) {
        return "adaptive";
    }
    return width == 1 ? "greedy" : "fixed:" + std::to_string(width);
}

BeamConfig BeamConfig::parse(const std::string& text, double u_avg) {
    BeamConfig c;
    c.u_avg = u_avg;
    if (text == "greedy") {
        return c;
    }
    if (text == "adaptive") {
        c.adaptive = true;
        return c;
    }
    if (text.rfind("fixed:", 0) == 0) {
        try {
            std::size_t used = 0;
            const int w = std::stoi(text.substr(6), &used);
            if (used == text.size() - 6 && w >= 1 && w <= 16) {
                c.width = static_cast<std::size_t>(w);
                return c;
            }
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("beam must be greedy, adaptive or fixed:B with B in [1,16], got '" + text + "'");
}

namespace {

struct Hypothesis {
    std::vector<TokenId> framed;
    double score = 0.0;
    double u_prev = 0.0;
    std::size_t evals = 0;
    std::vector<StageRecord> stages;
    bool converged = false;
};

struct Candidate {
    std::size_t parent = 0;
    std::vector<std::size_t> choices;
    double score = 0.0;
    std::size_t inserts = 0;
};

} // namespace

DecodeTrace beam_decode(const SlotScorer& scorer, const TokenUncertainty* token_u, const BeamConfig& cfg,
                        std::size_t max_stages) {
    if (max_stages == 0) {
        throw std::invalid_argument("beam_decode: max_stages must be >= 1");
    }
    if (cfg.adaptive && token_u == nullptr) {
        throw std::invalid_argument("beam_decode: adaptive mode needs token uncertainties");
    }
    if (!cfg.adaptive && (cfg.width < 1 || cfg.width > 16)) {
        throw std::invalid_argument("beam_decode: fixed beam must be in [1, 16]");
    }
    const auto start = Clock::now();
    std::size_t passes = 0;
    std::vector<Hypothesis> active(1);
    active[0].framed = {kBosId, kEosId};
    active[0].u_prev = cfg.u_avg;
    std::vector<Hypothesis> pool;

    while (!active.empty()) {
        const double u_k = active.front().u_prev;
        const std::size_t beam =
            cfg.adaptive ? static_cast<std::size_t>(adaptive_beam_size(u_k, cfg.u_avg)) : cfg.width;
        std::vector<Candidate> cands;
        std::vector<Hypothesis> parents;
        for (auto& h : active) {
            const Tensor lp = scorer.slot_log_probs(h.framed);
            ++passes;
            h.evals += 1;
            const std::size_t slots = h.framed.size() - 1;
            std::vector<std::vector<std::size_t>> band(slots);
            Candidate base;
            base.parent = parents.size();
            base.choices.resize(slots);
            base.score = h.score;
            for (std::size_t s = 0; s < slots; ++s) {
                band[s] = top_k_row(lp, s, beam);
                base.choices[s] = band[s][0];
                base.score += lp.at(s, band[s][0]);
                base.inserts += band[s][0] != 0;
            }
            if (base.inserts > 0 && (h.stages.size() == max_stages || h.framed.size() + base.inserts > scorer.max_len())) {
                // Out of stages or room: retire unconverged.
                pool.push_back(h);
                continue;
            }
            cands.push_back(base);
            for (std::size_t s = 0; s < slots; ++s) {
                for (std::size_t r = 1; r < band[s].size(); ++r) {
                    Candidate dev = base;
                    dev.choices[s] = band[s][r];
                    dev.score += lp.at(s, band[s][r]) - lp.at(s, band[s][0]);
                    dev.inserts = dev.inserts - (band[s][0] != 0) + (band[s][r] != 0);
                    if (dev.inserts > 0 &&
                        (h.stages.size() == max_stages || h.framed.size() + dev.inserts > scorer.max_len())) {
                        continue;
                    }
                    cands.push_back(std::move(dev));
                }
            }
            parents.push_back(h);
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        std::vector<Hypothesis> next;
        for (std::size_t i = 0; i < cands.size() && i < beam; ++i) {
            const auto& c = cands[i];
            Hypothesis h = parents[c.parent];
            h.score = c.score;
            if (c.inserts == 0) {
                h.converged = true;
                pool.push_back(std::move(h));
                continue;
            }
            std::vector<TokenId> inserted;
            h.framed = apply_insertions(h.framed, c.choices, &inserted);
            h.stages.push_back({c.inserts, beam, u_k});
            h.u_prev = token_u ? mean_uncertainty(inserted, *token_u) : cfg.u_avg;
            next.push_back(std::move(h));
        }
        active = std::move(next);
    }

    const Hypothesis* best = nullptr;
    double best_norm = 0.0;
    for (const auto& h : pool) {
        const double norm = normalized(h.score, h.framed.size() - 2);
        if (best == nullptr || norm > best_norm) {
            best = &h;
            best_norm = norm;
        }
    }
    DecodeTrace trace;
    trace.caption = unframe(best->framed);
    trace.stages = best->stages;
    trace.evaluations = best->evals;
    trace.forward_passes = passes;
    trace.converged = best->converged;
    trace.log_prob = best->score;
    trace.wall_ns = elapsed_ns(start);
    return trace;
}

DecodeTrace ar_decode(const NextTokenScorer& scorer, std::size_t beam, std::size_t max_len) {
    if (max_len == 0) {
        throw std::invalid_argument("ar_decode: max_len must be >= 1");
    }
    if (beam == 0) {
        throw std::invalid_argument("ar_decode: beam must be >= 1");
    }
    const auto start = Clock::now();
    const std::size_t limit = std::min(max_len, scorer.max_len() - 1);

    struct Hyp {
        std::vector<TokenId> prefix;
        double score = 0.0;
        bool finished = false;
    };
    std::vector<Hyp> active = {Hyp{{kBosId}, 0.0, false}};
    std::vector<Hyp> pool;
    std::size_t passes = 0;
    while (!active.empty()) {
        struct Cand {
            std::size_t parent;
            std::size_t index;
            double score;
        };
        std::vector<Cand> cands;
        for (std::size_t h = 0; h < active.size(); ++h) {
            const Tensor lp = scorer.next_log_probs(active[h].prefix);
            ++passes;
            for (auto idx : top_k_row(lp, 0, beam)) {
                cands.push_back({h, idx, active[h].score + lp[idx]});
            }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
        std::vector<Hyp> next;
        for (std::size_t i = 0; i < cands.size() && i < beam; ++i) {
            Hyp h = active[cands[i].parent];
            h.score = cands[i].score;
            if (cands[i].index == 0) {
                h.finished = true;
                pool.push_back(std::move(h));
                continue;
            }
            h.prefix.push_back(model::ar_token(cands[i].index));
            if (h.prefix.size() - 1 == limit) {
                pool.push_back(std::move(h));
            } else {
                next.push_back(std::move(h));
            }
        }
        active = std::move(next);
    }
    const Hyp* best = nullptr;
    double best_norm = 0.0;
    for (const auto& h : pool) {
        const double norm = normalized(h.score, h.prefix.size() - 1 + (h.finished ? 1 : 0));
        if (best == nullptr || norm > best_norm) {
            best = &h;
            best_norm = norm;
        }
    }
    DecodeTrace trace;
    trace.caption.assign(best->prefix.begin() + 1, best->prefix.end());
    trace.evaluations = trace.caption.size() + (best->finished ? 1 : 0);
    trace.forward_passes = passes;
    trace.converged = best->finished;
    trace.log_prob = best->score;
    trace.stages.assign(trace.evaluations, StageRecord{1, beam, 0.0});
    trace.wall_ns = elapsed_ns(start);
    return trace;
}

DecodeTrace naic_decode(const model::BaselineModel& m, const Tensor& features) {
    const auto start = Clock::now();
    const Tensor lp = m.one_shot_log_probs(features);
    DecodeTrace trace;
    trace.evaluations = 1;
    trace.forward_passes = 1;
    trace.converged = true;
    for (std::size_t r = 0; r < lp.rows(); ++r) {
        const std::size_t idx = argmax_row(lp, r);
        trace.log_prob += lp.at(r, idx);
        if (idx == 0) {
            break;
        }
        trace.caption.push_back(model::ar_token(idx));
    }
    trace.stages.push_back({trace.caption.size(), 1, 0.0});
    trace.wall_ns = elapsed_ns(start);
    return trace;
}

// ---------------------------------------------------------------------------
// Files

json record_to_json(const DecodeRecord& r) {
    return json{{"scene", r.scene}, {"caption", r.caption}, {"stages", r.stages},
                {"evals", r.evals}, {"wall_ns", r.wall_ns}, {"beam", r.beam}};
}

DecodeRecord record_from_json(const json& j) {
    static const std::set<std::string> fields = {"scene", "caption", "stages", "evals", "wall_ns", "beam"};
    if (!j.is_object() || j.size() != fields.size()) {
        throw DataError("decode record: expected exactly {scene, caption, stages, evals, wall_ns, beam}");
    }
    DecodeRecord r;
    try {
        r.scene = j.at("scene").get<std::string>();
        r.caption = j.at("caption").get<std::vector<std::string>>();
        r.stages = j.at("stages").get<std::size_t>();
        r.evals = j.at("evals").get<std::size_t>();
        r.wall_ns = j.at("wall_ns").get<std::uint64_t>();
        r.beam = j.at("beam").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("decode record: ") + e.what());
    }
    return r;
}

void write_records(const std::filesystem::path& path, const std::vector<DecodeRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (const auto& r : records) {
        out << record_to_json(r).dump() << '\n';
    }
}

std::vector<DecodeRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open decode file " + path.string());
    }
    std::vector<DecodeRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw DataError(std::string("decode file: invalid JSON: ") + e.what(), lineno);
        } catch (const DataError& e) {
            throw DataError(e.what(), lineno);
        }
    }
    return out;
}

} // namespace uaic::decode
