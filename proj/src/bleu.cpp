#include "uaic/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace uaic::eval {

namespace {

constexpr double kSmoothing = 1e-9;

using Counts = std::map<std::vector<std::string>, std::size_t>;

Counts ngrams(const Sentence& s, std::size_t n) {
    Counts c;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
        ++c[Sentence(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return c;
}

struct Stats {
    std::array<std::size_t, 4> matched{};
    std::array<std::size_t, 4> total{};
    std::size_t cand_len = 0;
    std::size_t ref_len = 0;
};

Stats collect(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
    if (candidates.empty()) {
        throw std::invalid_argument("corpus_bleu: empty corpus");
    }
    if (candidates.size() != references.size()) {
        throw std::invalid_argument("corpus_bleu: candidate and reference counts differ");
    }
    Stats st;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& cand = candidates[i];
        const auto& ref = references[i];
        st.cand_len += cand.size();
        st.ref_len += ref.size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto cc = ngrams(cand, n);
            const auto rc = ngrams(ref, n);
            for (const auto& [gram, count] : cc) {
                const auto it = rc.find(gram);
                st.matched[n - 1] += std::min(count, it == rc.end() ? 0 : it->second);
                st.total[n - 1] += count;
            }
        }
    }
    return st;
}

double score(const Stats& st, int n) {
    if (st.cand_len == 0) {
        return 0.0;
    }
    double log_sum = 0.0;
    for (int k = 0; k < n; ++k) {
        double p = st.total[k] == 0 ? 0.0 : static_cast<double>(st.matched[k]) / static_cast<double>(st.total[k]);
        if (p == 0.0) {
            p = kSmoothing;
        }
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(st.cand_len);
    const double r = static_cast<double>(st.ref_len);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / n);
}

} // namespace

double corpus_bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references, int n) {
    if (n < 1 || n > 4) {
        throw std::invalid_argument("corpus_bleu: n must be in 1..4");
    }
    return score(collect(candidates, references), n);
}

std::array<double, 4> corpus_bleu_all(const std::vector<Sentence>& candidates,
                                      const std::vector<Sentence>& references) {
    const Stats st = collect(candidates, references);
    return {score(st, 1), score(st, 2), score(st, 3), score(st, 4)};
}

} // namespace uaic::eval
