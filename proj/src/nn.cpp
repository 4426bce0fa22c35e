#include "uaic/nn.hpp"

#include <cmath>

namespace uaic::nn {

namespace ops = nc::ops;

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (double& v : t.data()) {
        v = rng.uniform(-s, s);
    }
    return t;
}

Tensor normal_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    Tensor t({rows, cols});
    for (double& v : t.data()) {
        v = rng.normal(0.0, stddev);
    }
    return t;
}

Linear Linear::create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t out,
                      Rng& rng, bool with_bias) {
    Linear l;
    l.weight = ps.add(name + ".weight", glorot_uniform(in, out, rng));
    if (with_bias) {
        l.bias = ps.add(name + ".bias", Tensor({out}, 0.0));
    }
    return l;
}

Var Linear::operator()(Graph& g, Var x) const {
    Var y = ops::matmul(g, x, g.param(weight));
    return bias ? ops::add_bias(g, y, g.param(*bias)) : y;
}

LayerNorm LayerNorm::create(ParameterSet& ps, const std::string& name, std::size_t dim) {
    LayerNorm ln;
    ln.gamma = ps.add(name + ".gamma", Tensor({dim}, 1.0));
    ln.beta = ps.add(name + ".beta", Tensor({dim}, 0.0));
    return ln;
}

Var LayerNorm::operator()(Graph& g, Var x) const {
    return ops::layer_norm(g, x, g.param(gamma), g.param(beta));
}

Tensor full_mask(std::size_t len) { return Tensor({len, len}, 0.0); }

TransformerBlock TransformerBlock::create(ParameterSet& ps, const std::string& name, std::size_t dim,
                                          std::size_t heads, std::size_t ffn_dim, Rng& rng) {
    if (heads == 0 || dim % heads != 0) {
        throw std::invalid_argument("transformer block: dim " + std::to_string(dim) +
                                    " not divisible by heads " + std::to_string(heads));
    }
    TransformerBlock b;
    b.dim = dim;
    b.heads = heads;
    b.ln_attn = LayerNorm::create(ps, name + ".ln_attn", dim);
    b.qkv = Linear::create(ps, name + ".qkv", dim, 3 * dim, rng, false);
    b.out = Linear::create(ps, name + ".attn_out", dim, dim, rng);
    b.ln_ffn = LayerNorm::create(ps, name + ".ln_ffn", dim);
    b.ff_in = Linear::create(ps, name + ".ff_in", dim, ffn_dim, rng);
    b.ff_out = Linear::create(ps, name + ".ff_out", ffn_dim, dim, rng);
    return b;
}

Var TransformerBlock::operator()(Graph& g, Var x, std::optional<Var> mask, double dropout) const {
    const std::size_t head_dim = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Var h = ln_attn(g, x);
    Var qkv_all = qkv(g, h);
    std::vector<Var> head_out;
    head_out.reserve(heads);
    for (std::size_t i = 0; i < heads; ++i) {
        Var q = ops::slice_cols(g, qkv_all, i * head_dim, head_dim);
        Var k = ops::slice_cols(g, qkv_all, dim + i * head_dim, head_dim);
        Var v = ops::slice_cols(g, qkv_all, 2 * dim + i * head_dim, head_dim);
        Var scores = ops::scale(g, ops::matmul_nt(g, q, k), inv_sqrt);
        if (mask) {
            scores = ops::add(g, scores, *mask);
        }
        head_out.push_back(ops::matmul(g, ops::softmax_rows(g, scores), v));
    }
    Var attn = heads == 1 ? head_out[0] : ops::concat_cols(g, head_out);
    x = ops::add(g, x, ops::dropout(g, out(g, attn), dropout));

    Var f = ff_out(g, ops::gelu(g, ff_in(g, ln_ffn(g, x))));
    return ops::add(g, x, ops::dropout(g, f, dropout));
}

} // namespace uaic::nn
