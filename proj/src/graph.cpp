#include "uaic/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uaic::nc {

// ---------------------------------------------------------------------------
// ParameterSet / Gradients

std::size_t ParameterSet::add(std::string name, Tensor value) {
    if (find(name)) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    params_.push_back({std::move(name), std::move(value)});
    return params_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.value.size();
    }
    return n;
}

Gradients::Gradients(const ParameterSet& params) {
    grads_.reserve(params.size());
    for (const auto& p : params) {
        grads_.emplace_back(p.value.shape(), 0.0);
    }
}

void Gradients::zero() {
    for (auto& g : grads_) {
        g.fill(0.0);
    }
}

void Gradients::scale(double s) {
    for (auto& g : grads_) {
        for (double& v : g.data()) {
            v *= s;
        }
    }
}

double Gradients::global_norm() const {
    double acc = 0.0;
    for (const auto& g : grads_) {
        for (double v : g.data()) {
            acc += v * v;
        }
    }
    return std::sqrt(acc);
}

bool Gradients::all_finite() const {
    return std::all_of(grads_.begin(), grads_.end(), [](const Tensor& t) { return t.all_finite(); });
}

const char* op_name(OpKind kind) {
    switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Param: return "param";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::Add: return "add";
    case OpKind::AddBias: return "add_bias";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::LogSoftmaxRows: return "log_softmax_rows";
    case OpKind::LayerNorm: return "layer_norm";
    case OpKind::Gelu: return "gelu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Embedding: return "embedding";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::MeanRows: return "mean_rows";
    case OpKind::MaxRows: return "max_rows";
    case OpKind::Sum: return "sum";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::SquaredError: return "squared_error";
    case OpKind::Clamp: return "clamp";
    case OpKind::Dropout: return "dropout";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Dense kernels. Reductions run left to right in a fixed order.

namespace {

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            c[i * n + j] += acc;
        }
    }
}

// C[m,n] += A[k,m]^T * B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t k, std::size_t m,
             std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

bool is_matrix(const Tensor& t) { return t.rank() == 2; }

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const std::string& why) {
    throw ShapeError(std::string(op) + ": shape " + shape_str(a.shape()) + " " + why);
}

double gelu_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }
double gelu_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

} // namespace

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::input(Tensor value, bool requires_grad) {
    Node n;
    n.kind = OpKind::Input;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Var Graph::param(std::size_t param_id) {
    if (!params_ || param_id >= params_->size()) {
        throw std::out_of_range("graph: unknown parameter id " + std::to_string(param_id));
    }
    Node n;
    n.kind = OpKind::Param;
    n.requires_grad = true;
    n.param_id = static_cast<std::int64_t>(param_id);
    return push(std::move(n));
}

const Tensor& Graph::value(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.kind == OpKind::Param) {
        return (*params_)[static_cast<std::size_t>(n.param_id)].value;
    }
    return n.value;
}

void Graph::set_training(bool on, std::uint64_t seed) {
    training_ = on;
    dropout_rng_ = Rng(seed);
}

struct OpBuilder {
    using Node = Graph::Node;

    static const Tensor& val(const Graph& g, Var v) { return g.value(v); }

    static Var emit(Graph& g, OpKind kind, std::vector<std::uint32_t> inputs, Tensor value) {
        Node n;
        n.kind = kind;
        n.requires_grad = false;
        for (auto id : inputs) {
            n.requires_grad = n.requires_grad || g.nodes_[id].requires_grad;
        }
        n.inputs = std::move(inputs);
        n.value = std::move(value);
        return g.push(std::move(n));
    }

    static Node& node(Graph& g, Var v) { return g.nodes_[v.id]; }
};

Tensor& Graph::grad_buffer(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
        n.grad = Tensor(value(Var{id}).shape(), 0.0);
    }
    return n.grad;
}

void Graph::backward(Var loss, Gradients* grads) {
    const Tensor& lv = value(loss);
    if (lv.size() != 1) {
        throw ShapeError("backward: loss must be scalar, got shape " + shape_str(lv.shape()));
    }
    if (!lv.all_finite()) {
        throw NumericError("backward: loss is not finite");
    }
    if (grads && params_ && grads->size() != params_->size()) {
        throw std::invalid_argument("backward: gradient map does not match parameter set");
    }
    for (auto& n : nodes_) {
        n.grad = Tensor();
    }
    grad_buffer(loss.id)[0] = 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty()) {
            continue;
        }
        if (n.kind == OpKind::Param) {
            if (grads) {
                Tensor& dst = (*grads)[static_cast<std::size_t>(n.param_id)];
                auto src = n.grad.data();
                auto out = dst.data();
                for (std::size_t i = 0; i < src.size(); ++i) {
                    out[i] += src[i];
                }
            }
            continue;
        }
        if (n.kind == OpKind::Input) {
            continue;
        }
        backprop_node(id);
    }
}

void Graph::backprop_node(std::uint32_t id) {
    // Copy what we need; grad_buffer() may not reallocate nodes_, but keep
    // references local and explicit.
    Node& n = nodes_[id];
    const Tensor& dy = n.grad;
    auto needs = [&](std::size_t i) { return nodes_[n.inputs[i]].requires_grad; };
    auto in_val = [&](std::size_t i) -> const Tensor& { return value(Var{n.inputs[i]}); };
    auto in_grad = [&](std::size_t i) -> Tensor& { return grad_buffer(n.inputs[i]); };

    switch (n.kind) {
    case OpKind::Input:
    case OpKind::Param:
        break;
    case OpKind::MatMul: {
        const Tensor& a = in_val(0);
        const Tensor& b = in_val(1);
        const std::size_t m = a.rows(), k = a.cols(), nn = b.cols();
        if (needs(0)) {
            gemm_nt(dy.ptr(), b.ptr(), in_grad(0).ptr(), m, nn, k);
        }
        if (needs(1)) {
            gemm_tn(a.ptr(), dy.ptr(), in_grad(1).ptr(), m, k, nn);
        }
        break;
    }
    case OpKind::MatMulNT: {
        const Tensor& a = in_val(0);
        const Tensor& b = in_val(1);
        const std::size_t m = a.rows(), k = a.cols(), nn = b.rows();
        if (needs(0)) {
            gemm_nn(dy.ptr(), b.ptr(), in_grad(0).ptr(), m, nn, k);
        }
        if (needs(1)) {
            gemm_tn(dy.ptr(), a.ptr(), in_grad(1).ptr(), m, nn, k);
        }
        break;
    }
    case OpKind::Add: {
        for (std::size_t i = 0; i < 2; ++i) {
            if (needs(i)) {
                auto g = in_grad(i).data();
                for (std::size_t j = 0; j < g.size(); ++j) {
                    g[j] += dy[j];
                }
            }
        }
        break;
    }
    case OpKind::AddBias: {
        const std::size_t rows = dy.rows(), cols = dy.cols();
        if (needs(0)) {
            auto g = in_grad(0).data();
            for (std::size_t j = 0; j < g.size(); ++j) {
                g[j] += dy[j];
            }
        }
        if (needs(1)) {
            auto g = in_grad(1).data();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    g[c] += dy[r * cols + c];
                }
            }
        }
        break;
    }
    case OpKind::Mul: {
        const Tensor& a = in_val(0);
        const Tensor& b = in_val(1);
        if (needs(0)) {
            auto g = in_grad(0).data();
            for (std::size_t j = 0; j < g.size(); ++j) {
                g[j] += dy[j] * b[j];
            }
        }
        if (needs(1)) {
            auto g = in_grad(1).data();
            for (std::size_t j = 0; j < g.size(); ++j) {
                g[j] += dy[j] * a[j];
            }
        }
        break;
    }
    case OpKind::Scale: {
        auto g = in_grad(0).data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += n.scalar * dy[j];
        }
        break;
    }
    case OpKind::SoftmaxRows: {
        const Tensor& y = n.value;
        auto g = in_grad(0).data();
        const std::size_t rows = y.rows(), cols = y.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                dot += dy[r * cols + c] * y[r * cols + c];
            }
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += y[r * cols + c] * (dy[r * cols + c] - dot);
            }
        }
        break;
    }
    case OpKind::LogSoftmaxRows: {
        const Tensor& y = n.value;
        auto g = in_grad(0).data();
        const std::size_t rows = y.rows(), cols = y.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            double total = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                total += dy[r * cols + c];
            }
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += dy[r * cols + c] - std::exp(y[r * cols + c]) * total;
            }
        }
        break;
    }
    case OpKind::LayerNorm: {
        // saved: xhat (rows*cols) followed by rstd (rows)
        const Tensor& gamma = in_val(1);
        const std::size_t rows = dy.rows(), cols = dy.cols();
        const double* xhat = n.saved.data();
        const double* rstd = n.saved.data() + rows * cols;
        if (needs(1)) {
            auto gg = in_grad(1).data();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    gg[c] += dy[r * cols + c] * xhat[r * cols + c];
                }
            }
        }
        if (needs(2)) {
            auto gb = in_grad(2).data();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    gb[c] += dy[r * cols + c];
                }
            }
        }
        if (needs(0)) {
            auto gx = in_grad(0).data();
            std::vector<double> dxhat(cols);
            for (std::size_t r = 0; r < rows; ++r) {
                double mean_d = 0.0, mean_dx = 0.0;
                for (std::size_t c = 0; c < cols; ++c) {
                    dxhat[c] = dy[r * cols + c] * gamma[c];
                    mean_d += dxhat[c];
                    mean_dx += dxhat[c] * xhat[r * cols + c];
                }
                mean_d /= static_cast<double>(cols);
                mean_dx /= static_cast<double>(cols);
                for (std::size_t c = 0; c < cols; ++c) {
                    gx[r * cols + c] +=
                        rstd[r] * (dxhat[c] - mean_d - xhat[r * cols + c] * mean_dx);
                }
            }
        }
        break;
    }
    case OpKind::Gelu: {
        const Tensor& x = in_val(0);
        auto g = in_grad(0).data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += dy[j] * (gelu_cdf(x[j]) + x[j] * gelu_pdf(x[j]));
        }
        break;
    }
    case OpKind::Sigmoid: {
        const Tensor& y = n.value;
        auto g = in_grad(0).data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += dy[j] * y[j] * (1.0 - y[j]);
        }
        break;
    }
    case OpKind::Embedding: {
        auto g = in_grad(0).data();
        const std::size_t cols = dy.cols();
        for (std::size_t r = 0; r < n.index.size(); ++r) {
            double* dst = g.data() + n.index[r] * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                dst[c] += dy[r * cols + c];
            }
        }
        break;
    }
    case OpKind::ConcatCols: {
        const std::size_t rows = dy.rows(), cols = dy.cols();
        std::size_t offset = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
            const std::size_t w = in_val(i).cols();
            if (needs(i)) {
                auto g = in_grad(i).data();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < w; ++c) {
                        g[r * w + c] += dy[r * cols + offset + c];
                    }
                }
            }
            offset += w;
        }
        break;
    }
    case OpKind::ConcatRows: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
            const std::size_t len = in_val(i).size();
            if (needs(i)) {
                auto g = in_grad(i).data();
                for (std::size_t j = 0; j < len; ++j) {
                    g[j] += dy[offset + j];
                }
            }
            offset += len;
        }
        break;
    }
    case OpKind::SliceRows: {
        auto g = in_grad(0).data();
        const std::size_t start = n.index[0] * dy.cols();
        for (std::size_t j = 0; j < dy.size(); ++j) {
            g[start + j] += dy[j];
        }
        break;
    }
    case OpKind::SliceCols: {
        auto g = in_grad(0).data();
        const std::size_t start = n.index[0], w = dy.cols(), src_cols = in_val(0).cols();
        for (std::size_t r = 0; r < dy.rows(); ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                g[r * src_cols + start + c] += dy[r * w + c];
            }
        }
        break;
    }
    case OpKind::MeanRows: {
        auto g = in_grad(0).data();
        const Tensor& x = in_val(0);
        const std::size_t rows = x.rows(), cols = x.cols();
        const double inv = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += dy[c] * inv;
            }
        }
        break;
    }
    case OpKind::MaxRows: {
        auto g = in_grad(0).data();
        const std::size_t cols = dy.cols();
        for (std::size_t c = 0; c < cols; ++c) {
            g[n.index[c] * cols + c] += dy[c];
        }
        break;
    }
    case OpKind::Sum: {
        auto g = in_grad(0).data();
        for (double& v : g) {
            v += dy[0];
        }
        break;
    }
    case OpKind::CrossEntropy: {
        // saved: row softmax probabilities; index: targets; scalar weights in
        // saved tail (rows entries).
        auto g = in_grad(0).data();
        const Tensor& x = in_val(0);
        const std::size_t rows = x.rows(), cols = x.cols();
        const double* probs = n.saved.data();
        const double* w = n.saved.data() + rows * cols;
        for (std::size_t r = 0; r < rows; ++r) {
            const double s = w[r] * dy[0];
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += s * probs[r * cols + c];
            }
            g[r * cols + n.index[r]] -= s;
        }
        break;
    }
    case OpKind::SquaredError: {
        auto g = in_grad(0).data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += 2.0 * n.saved[j] * dy[0];
        }
        break;
    }
    case OpKind::Clamp: {
        const Tensor& x = in_val(0);
        auto g = in_grad(0).data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (x[j] >= n.scalar && x[j] <= n.scalar2) {
                g[j] += dy[j];
            }
        }
        break;
    }
    case OpKind::Dropout: {
        auto g = in_grad(0).data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += dy[j] * n.saved[j];
        }
        break;
    }
    }
}

// ---------------------------------------------------------------------------
// Forward ops

namespace ops {

Var matmul(Graph& g, Var a, Var b) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (!is_matrix(av) || !is_matrix(bv) || av.cols() != bv.rows()) {
        shape_fail("matmul", av, bv);
    }
    Tensor out({av.rows(), bv.cols()}, 0.0);
    gemm_nn(av.ptr(), bv.ptr(), out.ptr(), av.rows(), av.cols(), bv.cols());
    return OpBuilder::emit(g, OpKind::MatMul, {a.id, b.id}, std::move(out));
}

Var matmul_nt(Graph& g, Var a, Var b) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (!is_matrix(av) || !is_matrix(bv) || av.cols() != bv.cols()) {
        shape_fail("matmul_nt", av, bv);
    }
    Tensor out({av.rows(), bv.rows()}, 0.0);
    gemm_nt(av.ptr(), bv.ptr(), out.ptr(), av.rows(), av.cols(), bv.rows());
    return OpBuilder::emit(g, OpKind::MatMulNT, {a.id, b.id}, std::move(out));
}

Var add(Graph& g, Var a, Var b) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (av.shape() != bv.shape()) {
        shape_fail("add", av, bv);
    }
    Tensor out = av;
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += bv[j];
    }
    return OpBuilder::emit(g, OpKind::Add, {a.id, b.id}, std::move(out));
}

Var add_bias(Graph& g, Var x, Var bias) {
    const Tensor& xv = g.value(x);
    const Tensor& bv = g.value(bias);
    if (bv.rank() != 1 || bv.size() != xv.cols()) {
        shape_fail("add_bias", xv, bv);
    }
    Tensor out = xv;
    const std::size_t rows = xv.rows(), cols = xv.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] += bv[c];
        }
    }
    return OpBuilder::emit(g, OpKind::AddBias, {x.id, bias.id}, std::move(out));
}

Var mul(Graph& g, Var a, Var b) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (av.shape() != bv.shape()) {
        shape_fail("mul", av, bv);
    }
    Tensor out = av;
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] *= bv[j];
    }
    return OpBuilder::emit(g, OpKind::Mul, {a.id, b.id}, std::move(out));
}

Var scale(Graph& g, Var x, double factor) {
    Tensor out = g.value(x);
    for (double& v : out.data()) {
        v *= factor;
    }
    Var y = OpBuilder::emit(g, OpKind::Scale, {x.id}, std::move(out));
    OpBuilder::node(g, y).scalar = factor;
    return y;
}

namespace {

void softmax_row(const double* x, double* y, std::size_t cols) {
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) {
        mx = std::max(mx, x[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
        y[c] = std::exp(x[c] - mx);
        total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) {
        y[c] /= total;
    }
}

void log_softmax_row(const double* x, double* y, std::size_t cols) {
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) {
        mx = std::max(mx, x[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
        total += std::exp(x[c] - mx);
    }
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) {
        y[c] = x[c] - lse;
    }
}

} // namespace

Var softmax_rows(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    Tensor out(xv.shape(), 0.0);
    const std::size_t rows = xv.rows(), cols = xv.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        softmax_row(xv.ptr() + r * cols, out.ptr() + r * cols, cols);
    }
    return OpBuilder::emit(g, OpKind::SoftmaxRows, {x.id}, std::move(out));
}

Var log_softmax_rows(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    Tensor out(xv.shape(), 0.0);
    const std::size_t rows = xv.rows(), cols = xv.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        log_softmax_row(xv.ptr() + r * cols, out.ptr() + r * cols, cols);
    }
    return OpBuilder::emit(g, OpKind::LogSoftmaxRows, {x.id}, std::move(out));
}

Var layer_norm(Graph& g, Var x, Var gamma, Var beta, double eps) {
    const Tensor& xv = g.value(x);
    const Tensor& gv = g.value(gamma);
    const Tensor& bv = g.value(beta);
    const std::size_t rows = xv.rows(), cols = xv.cols();
    if (gv.rank() != 1 || gv.size() != cols) {
        shape_fail("layer_norm", xv, gv);
    }
    if (bv.rank() != 1 || bv.size() != cols) {
        shape_fail("layer_norm", xv, bv);
    }
    Tensor out(xv.shape(), 0.0);
    std::vector<double> saved(rows * cols + rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.ptr() + r * cols;
        double mean = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            mean += xr[c];
        }
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            var += (xr[c] - mean) * (xr[c] - mean);
        }
        var /= static_cast<double>(cols);
        const double rstd = 1.0 / std::sqrt(var + eps);
        saved[rows * cols + r] = rstd;
        for (std::size_t c = 0; c < cols; ++c) {
            const double xh = (xr[c] - mean) * rstd;
            saved[r * cols + c] = xh;
            out[r * cols + c] = xh * gv[c] + bv[c];
        }
    }
    Var y = OpBuilder::emit(g, OpKind::LayerNorm, {x.id, gamma.id, beta.id}, std::move(out));
    OpBuilder::node(g, y).saved = std::move(saved);
    return y;
}

Var gelu(Graph& g, Var x) {
    Tensor out = g.value(x);
    for (double& v : out.data()) {
        v = v * gelu_cdf(v);
    }
    return OpBuilder::emit(g, OpKind::Gelu, {x.id}, std::move(out));
}

Var sigmoid(Graph& g, Var x) {
    Tensor out = g.value(x);
    for (double& v : out.data()) {
        v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return OpBuilder::emit(g, OpKind::Sigmoid, {x.id}, std::move(out));
}

Var embedding(Graph& g, Var table, const std::vector<std::size_t>& ids) {
    const Tensor& tv = g.value(table);
    if (!is_matrix(tv)) {
        shape_fail("embedding", tv, "is not a matrix");
    }
    if (ids.empty()) {
        throw ShapeError("embedding: empty index list");
    }
    const std::size_t cols = tv.cols();
    Tensor out({ids.size(), cols}, 0.0);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] >= tv.rows()) {
            throw std::out_of_range("embedding: index " + std::to_string(ids[r]) +
                                    " out of range for table " + shape_str(tv.shape()));
        }
        std::copy_n(tv.ptr() + ids[r] * cols, cols, out.ptr() + r * cols);
    }
    Var y = OpBuilder::emit(g, OpKind::Embedding, {table.id}, std::move(out));
    OpBuilder::node(g, y).index = ids;
    return y;
}

Var concat_cols(Graph& g, const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols: no inputs");
    }
    const Tensor& first = g.value(parts[0]);
    const std::size_t rows = first.rows();
    std::size_t cols = 0;
    std::vector<std::uint32_t> ids;
    for (Var p : parts) {
        const Tensor& pv = g.value(p);
        if (!is_matrix(pv) || pv.rows() != rows) {
            shape_fail("concat_cols", first, pv);
        }
        cols += pv.cols();
        ids.push_back(p.id);
    }
    Tensor out({rows, cols}, 0.0);
    std::size_t offset = 0;
    for (Var p : parts) {
        const Tensor& pv = g.value(p);
        const std::size_t w = pv.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(pv.ptr() + r * w, w, out.ptr() + r * cols + offset);
        }
        offset += w;
    }
    return OpBuilder::emit(g, OpKind::ConcatCols, std::move(ids), std::move(out));
}

Var concat_rows(Graph& g, const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_rows: no inputs");
    }
    const Tensor& first = g.value(parts[0]);
    const std::size_t cols = first.cols();
    std::size_t rows = 0;
    std::vector<std::uint32_t> ids;
    for (Var p : parts) {
        const Tensor& pv = g.value(p);
        if (!is_matrix(pv) || pv.cols() != cols) {
            shape_fail("concat_rows", first, pv);
        }
        rows += pv.rows();
        ids.push_back(p.id);
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    for (Var p : parts) {
        const auto d = g.value(p).data();
        data.insert(data.end(), d.begin(), d.end());
    }
    return OpBuilder::emit(g, OpKind::ConcatRows, std::move(ids), Tensor({rows, cols}, std::move(data)));
}

Var slice_rows(Graph& g, Var x, std::size_t start, std::size_t count) {
    const Tensor& xv = g.value(x);
    if (!is_matrix(xv) || count == 0 || start + count > xv.rows()) {
        shape_fail("slice_rows", xv,
                   "cannot take rows [" + std::to_string(start) + "," + std::to_string(start + count) + ")");
    }
    const std::size_t cols = xv.cols();
    std::vector<double> data(xv.ptr() + start * cols, xv.ptr() + (start + count) * cols);
    Var y = OpBuilder::emit(g, OpKind::SliceRows, {x.id}, Tensor({count, cols}, std::move(data)));
    OpBuilder::node(g, y).index = {start};
    return y;
}

Var slice_cols(Graph& g, Var x, std::size_t start, std::size_t count) {
    const Tensor& xv = g.value(x);
    if (!is_matrix(xv) || count == 0 || start + count > xv.cols()) {
        shape_fail("slice_cols", xv,
                   "cannot take cols [" + std::to_string(start) + "," + std::to_string(start + count) + ")");
    }
    const std::size_t rows = xv.rows(), cols = xv.cols();
    Tensor out({rows, count}, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(xv.ptr() + r * cols + start, count, out.ptr() + r * count);
    }
    Var y = OpBuilder::emit(g, OpKind::SliceCols, {x.id}, std::move(out));
    OpBuilder::node(g, y).index = {start};
    return y;
}

Var mean_rows(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    const std::size_t rows = xv.rows(), cols = xv.cols();
    Tensor out({1, cols}, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] += xv[r * cols + c];
        }
    }
    for (double& v : out.data()) {
        v /= static_cast<double>(rows);
    }
    return OpBuilder::emit(g, OpKind::MeanRows, {x.id}, std::move(out));
}

Var max_rows(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    const std::size_t rows = xv.rows(), cols = xv.cols();
    Tensor out({1, cols}, 0.0);
    std::vector<std::size_t> arg(cols, 0);
    for (std::size_t c = 0; c < cols; ++c) {
        out[c] = xv[c];
        for (std::size_t r = 1; r < rows; ++r) {
            if (xv[r * cols + c] > out[c]) {
                out[c] = xv[r * cols + c];
                arg[c] = r;
            }
        }
    }
    Var y = OpBuilder::emit(g, OpKind::MaxRows, {x.id}, std::move(out));
    OpBuilder::node(g, y).index = std::move(arg);
    return y;
}

Var sum(Graph& g, Var x) {
    double total = 0.0;
    for (double v : g.value(x).data()) {
        total += v;
    }
    return OpBuilder::emit(g, OpKind::Sum, {x.id}, Tensor::scalar(total));
}

Var cross_entropy(Graph& g, Var logits, const std::vector<std::size_t>& targets,
                  const std::vector<double>& weights) {
    const Tensor& xv = g.value(logits);
    const std::size_t rows = xv.rows(), cols = xv.cols();
    if (targets.size() != rows) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_str(xv.shape()));
    }
    if (!weights.empty() && weights.size() != rows) {
        throw ShapeError("cross_entropy: " + std::to_string(weights.size()) + " weights for logits " +
                         shape_str(xv.shape()));
    }
    std::vector<double> saved(rows * cols + rows);
    std::vector<double> logp(cols);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (targets[r] >= cols) {
            throw std::out_of_range("cross_entropy: target " + std::to_string(targets[r]) +
                                    " out of range for " + std::to_string(cols) + " classes");
        }
        log_softmax_row(xv.ptr() + r * cols, logp.data(), cols);
        const double w = weights.empty() ? 1.0 : weights[r];
        for (std::size_t c = 0; c < cols; ++c) {
            saved[r * cols + c] = std::exp(logp[c]);
        }
        saved[rows * cols + r] = w;
        loss += -w * logp[targets[r]];
    }
    Var y = OpBuilder::emit(g, OpKind::CrossEntropy, {logits.id}, Tensor::scalar(loss));
    auto& n = OpBuilder::node(g, y);
    n.saved = std::move(saved);
    n.index = targets;
    return y;
}

Var squared_error(Graph& g, Var pred, const Tensor& target) {
    const Tensor& pv = g.value(pred);
    if (pv.size() != target.size() || pv.cols() != target.cols()) {
        shape_fail("squared_error", pv, target);
    }
    std::vector<double> diff(pv.size());
    double total = 0.0;
    for (std::size_t j = 0; j < pv.size(); ++j) {
        diff[j] = pv[j] - target[j];
        total += diff[j] * diff[j];
    }
    Var y = OpBuilder::emit(g, OpKind::SquaredError, {pred.id}, Tensor::scalar(total));
    OpBuilder::node(g, y).saved = std::move(diff);
    return y;
}

Var clamp(Graph& g, Var x, double lo, double hi) {
    if (lo > hi) {
        throw std::invalid_argument("clamp: lo > hi");
    }
    Tensor out = g.value(x);
    for (double& v : out.data()) {
        v = std::clamp(v, lo, hi);
    }
    Var y = OpBuilder::emit(g, OpKind::Clamp, {x.id}, std::move(out));
    OpBuilder::node(g, y).scalar = lo;
    OpBuilder::node(g, y).scalar2 = hi;
    return y;
}

Var dropout(Graph& g, Var x, double rate) {
    if (!g.training() || rate <= 0.0) {
        return x;
    }
    if (rate >= 1.0) {
        throw std::invalid_argument("dropout: rate must be < 1");
    }
    Tensor out = g.value(x);
    std::vector<double> mask(out.size());
    const double keep = 1.0 / (1.0 - rate);
    auto& rng = g.dropout_rng();
    for (std::size_t j = 0; j < out.size(); ++j) {
        mask[j] = rng.uniform() < rate ? 0.0 : keep;
        out[j] *= mask[j];
    }
    Var y = OpBuilder::emit(g, OpKind::Dropout, {x.id}, std::move(out));
    OpBuilder::node(g, y).saved = std::move(mask);
    return y;
}

} // namespace ops

} // namespace uaic::nc
