#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uaic/rng.hpp"
#include "uaic/tensor.hpp"

namespace uaic::nc {

/// Named learnable tensor.
struct Parameter {
    std::string name;
    Tensor value;
};

/// Ordered collection of parameters. Parameter ids are dense indices in
/// insertion order; names are unique.
class ParameterSet {
  public:
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t id) { return params_[id]; }
    const Parameter& operator[](std::size_t id) const { return params_[id]; }

    std::optional<std::size_t> find(const std::string& name) const;
    std::size_t scalar_count() const;

    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

  private:
    std::vector<Parameter> params_;
};

/// Gradient map aligned with a ParameterSet: entry i holds dLoss/dParam_i.
class Gradients {
  public:
    Gradients() = default;
    explicit Gradients(const ParameterSet& params);

    std::size_t size() const { return grads_.size(); }
    Tensor& operator[](std::size_t id) { return grads_[id]; }
    const Tensor& operator[](std::size_t id) const { return grads_[id]; }

    void zero();
    void scale(double s);
    double global_norm() const;
    bool all_finite() const;

  private:
    std::vector<Tensor> grads_;
};

enum class OpKind : std::uint8_t {
    Input,
    Param,
    MatMul,
    MatMulNT,
    Add,
    AddBias,
    Mul,
    Scale,
    SoftmaxRows,
    LogSoftmaxRows,
    LayerNorm,
    Gelu,
    Sigmoid,
    Embedding,
    ConcatCols,
    ConcatRows,
    SliceRows,
    SliceCols,
    MeanRows,
    MaxRows,
    Sum,
    CrossEntropy,
    SquaredError,
    Clamp,
    Dropout,
};

const char* op_name(OpKind kind);

struct Var {
    std::uint32_t id = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is a topological order by construction. Parameter leaves reference
/// the ParameterSet's storage directly; the set must outlive the graph and
/// must not be modified while the graph is alive.
class Graph {
  public:
    explicit Graph(const ParameterSet* params = nullptr) : params_(params) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;

    Var input(Tensor value, bool requires_grad = false);
    Var param(std::size_t param_id);

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    OpKind kind(Var v) const { return nodes_[v.id].kind; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Accumulates dLoss/dParam into `grads` (which must be aligned with the
    /// graph's ParameterSet) and fills per-node gradients for inputs created
    /// with requires_grad. The loss must be a scalar.
    void backward(Var loss, Gradients* grads);

    // Dropout is active only while training.
    void set_training(bool on, std::uint64_t seed = 0);
    bool training() const { return training_; }
    Rng& dropout_rng() { return dropout_rng_; }

  private:
    friend struct OpBuilder;

    struct Node {
        OpKind kind = OpKind::Input;
        std::vector<std::uint32_t> inputs;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::int64_t param_id = -1;
        // Op-specific saved state: indices, integer arguments, cached
        // intermediates needed by the backward rule.
        std::vector<std::size_t> index;
        std::vector<double> saved;
        double scalar = 0.0;
        double scalar2 = 0.0;
    };

    Var push(Node node);
    void backprop_node(std::uint32_t id);
    Tensor& grad_buffer(std::uint32_t id);

    const ParameterSet* params_ = nullptr;
    std::vector<Node> nodes_;
    bool training_ = false;
    Rng dropout_rng_{0};
};

// Forward primitives. Every op validates shapes and throws ShapeError with
// the op name and offending shapes on mismatch.
namespace ops {

Var matmul(Graph& g, Var a, Var b);          // [m,k]·[k,n]
Var matmul_nt(Graph& g, Var a, Var b);       // [m,k]·[n,k]^T
Var add(Graph& g, Var a, Var b);             // same shape
Var add_bias(Graph& g, Var x, Var bias);     // [m,n] + [n] broadcast over rows
Var mul(Graph& g, Var a, Var b);             // elementwise
Var scale(Graph& g, Var x, double factor);
Var softmax_rows(Graph& g, Var x);
Var log_softmax_rows(Graph& g, Var x);
Var layer_norm(Graph& g, Var x, Var gamma, Var beta, double eps = 1e-5);
Var gelu(Graph& g, Var x);
Var sigmoid(Graph& g, Var x);
Var embedding(Graph& g, Var table, const std::vector<std::size_t>& ids);
Var concat_cols(Graph& g, const std::vector<Var>& parts);
Var concat_rows(Graph& g, const std::vector<Var>& parts);
Var slice_rows(Graph& g, Var x, std::size_t start, std::size_t count);
Var slice_cols(Graph& g, Var x, std::size_t start, std::size_t count);
Var mean_rows(Graph& g, Var x);              // [m,n] -> [1,n]
Var max_rows(Graph& g, Var x);               // [m,n] -> [1,n], first max wins
Var sum(Graph& g, Var x);                    // -> scalar
/// Sum over rows of weight[r] * -log softmax(logits[r])[target[r]].
Var cross_entropy(Graph& g, Var logits, const std::vector<std::size_t>& targets,
                  const std::vector<double>& weights = {});
/// Sum of squared differences (pred - target)^2; target is a constant.
Var squared_error(Graph& g, Var pred, const Tensor& target);
Var clamp(Graph& g, Var x, double lo, double hi);
/// Inverted dropout; identity when the graph is not training or rate == 0.
Var dropout(Graph& g, Var x, double rate);

} // namespace ops

} // namespace uaic::nc
