#pragma once

#include "sslstm/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sslstm::ad {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    void zero_grad() { grad.fill(0.0); }
};

/// Ordered, name-unique parameter list. Parameters are addressed by the
/// index returned from add(), which stays valid across copies.
class ParameterSet {
public:
    std::size_t add(std::string name, Tensor init, bool trainable = true);

    Parameter& operator[](std::size_t i) { return params_.at(i); }
    const Parameter& operator[](std::size_t i) const { return params_.at(i); }
    std::optional<std::size_t> index_of(std::string_view name) const;

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();

private:
    std::vector<Parameter> params_;
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so parents
/// always precede children and backward is a single reverse sweep.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    /// With gradients disabled no backward closures are kept (inference).
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf bound to a parameter; reads its value in place. On backward the
    /// node's gradient is added into `p.grad`.
    Var param(Parameter& p);
    /// Read-only binding; never receives a gradient.
    Var param(const Parameter& p);

    Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);

    const Tensor& value(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    /// Gradient buffer of a node, allocated on first use; nullptr if the node
    /// does not require a gradient.
    Tensor* grad(std::size_t id);
    const Tensor* grad_if_present(std::size_t id) const;

    /// Populates gradients for every node reachable from `loss` and
    /// accumulates into bound parameters. `loss` must hold a single value.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    bool grad_enabled() const { return grad_enabled_; }

private:
    struct Node {
        Tensor value;
        const Tensor* external = nullptr;
        Parameter* sink = nullptr;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    bool grad_enabled_;
    bool backward_done_ = false;
};

// Elementwise.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

/// x (m x n or m) plus b (m) broadcast over columns.
Var add_bias(Var x, Var b);
/// A (m x k) times B (k x n or k).
Var matmul(Var a, Var b);
/// Stacks a (p x n) over b (q x n).
Var concat_rows(Var a, Var b);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var sum(Var x);

/// Column-wise softmax with max subtraction.
Var softmax(Var logits);
/// Mean over columns of -ln(max(p[gold_j, j], 1e-12)); weighted mean when
/// weights are given.
Var cross_entropy(Var probs, std::span<const std::size_t> gold, std::span<const double> weights = {});
inline constexpr double kProbabilityFloor = 1e-12;

/// input (c_in x T), filters (c_out x c_in x w) -> (c_out x T), same padding.
Var conv1d(Var input, Var filters);
/// (c x T) -> (c); gradient to the first maximal position.
Var maxpool_time(Var x);
/// (c x L) -> (c x S): max over each [start, start + length) column segment.
Var maxpool_segments(Var x, std::vector<std::pair<std::size_t, std::size_t>> segments);

/// table (V x e) -> (e x n), column j = row indices[j]; negative index gives a zero column.
Var embedding_lookup(Var table, std::vector<std::ptrdiff_t> indices);
/// x (m x n) -> (m x k), column j = x column indices[j]; negative index gives zeros.
Var gather_cols(Var x, std::vector<std::ptrdiff_t> indices);
/// Column j taken from `a` where take_a[j] is set, otherwise from `b`.
Var where_cols(std::vector<std::uint8_t> take_a, Var a, Var b);

/// Glorot/Xavier uniform limit sqrt(6 / (fan_in + fan_out)).
double glorot_limit(std::size_t fan_in, std::size_t fan_out);

} // namespace sslstm::ad
