#pragma once

#include <array>
#include <string>
#include <vector>

namespace uaic::eval {

using Sentence = std::vector<std::string>;

/// Corpus-level BLEU-n with clipped n-gram precision and brevity penalty
/// exp(1 - r/c) for c < r. Zero precisions are replaced by 1e-9 before the
/// geometric mean. Throws std::invalid_argument on an empty corpus, on
/// mismatched list sizes or n outside 1..4. An all-empty candidate set
/// scores 0.
double corpus_bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references, int n);

/// BLEU-1..4 in one pass.
std::array<double, 4> corpus_bleu_all(const std::vector<Sentence>& candidates,
                                      const std::vector<Sentence>& references);

} // namespace uaic::eval
