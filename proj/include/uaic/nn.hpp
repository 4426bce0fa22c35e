#pragma once

#include <optional>
#include <string>

#include "uaic/graph.hpp"
#include "uaic/rng.hpp"

namespace uaic::nn {

using nc::Graph;
using nc::ParameterSet;
using nc::Tensor;
using nc::Var;

/// uniform(-s, s), s = sqrt(6 / (fan_in + fan_out))
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
/// normal(0, stddev) matrix, used for embedding tables
Tensor normal_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

struct Linear {
    std::size_t weight = 0;            // [in, out]
    std::optional<std::size_t> bias;   // [out]

    static Linear create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t out,
                         Rng& rng, bool with_bias = true);
    Var operator()(Graph& g, Var x) const;
};

struct LayerNorm {
    std::size_t gamma = 0;
    std::size_t beta = 0;

    static LayerNorm create(ParameterSet& ps, const std::string& name, std::size_t dim);
    Var operator()(Graph& g, Var x) const;
};

/// Additive attention masks: 0 where attention is allowed, -1e30 where it is
/// blocked. Rows are queries, columns keys.
Tensor full_mask(std::size_t len);

/// Pre-norm transformer block: x + Attn(LN(x)), then x + FFN(LN(x)).
/// The fused query/key/value projection has no bias: a key bias cancels in
/// the row softmax and would only ever receive a zero gradient.
struct TransformerBlock {
    LayerNorm ln_attn;
    Linear qkv;
    Linear out;
    LayerNorm ln_ffn;
    Linear ff_in;
    Linear ff_out;
    std::size_t dim = 0;
    std::size_t heads = 1;

    static TransformerBlock create(ParameterSet& ps, const std::string& name, std::size_t dim,
                                   std::size_t heads, std::size_t ffn_dim, Rng& rng);

    /// `mask` is an additive [L, L] mask node, or nullopt for full attention.
    Var operator()(Graph& g, Var x, std::optional<Var> mask, double dropout) const;
};

} // namespace uaic::nn
