#pragma once

#include "cosgraph/matrix.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cosgraph::ad {

class Tape;

/// Handle to a 2-D value. A tensor either lives on a Tape (and participates
/// in differentiation) or is detached and just carries its value. Operations
/// on detached operands evaluate eagerly and return detached results.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Matrix value);

    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    const Matrix& value() const;

    std::optional<std::size_t> tape_id() const;
    Tape* tape() const noexcept { return tape_; }

private:
    friend class Tape;
    Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
    std::shared_ptr<const Matrix> detached_;
};

class Gradients {
public:
    /// Gradient of the loss with respect to a leaf recorded on the tape.
    const Matrix& of(const Tensor& leaf) const;
    bool contains(const Tensor& leaf) const;

private:
    friend class Tape;
    const Tape* tape_ = nullptr;
    std::vector<std::optional<Matrix>> grads_;
};

/// Records operations in execution order; every node's parents precede it.
/// A tape supports exactly one backward pass.
class Tape {
public:
    using BackwardFn = std::function<void(const Matrix& grad_out, Tape& tape)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable leaf (a parameter).
    Tensor leaf(Matrix value);
    /// Value on the tape that never receives a gradient.
    Tensor constant(Matrix value);

    /// Appends an op node. `fn` is dropped when no parent needs a gradient.
    Tensor record(Matrix value, std::vector<std::size_t> parents, BackwardFn fn);

    /// Lifts `t` onto this tape (detached tensors become constants).
    Tensor adopt(const Tensor& t);

    /// Reverse sweep from a 1x1 loss. Throws TapeError for non-scalar or
    /// detached seeds and on a second call.
    Gradients backward(const Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_.at(id).parents; }

    /// Adds `contribution` into the running gradient of node `id` (no-op when
    /// the node does not require a gradient). Only valid during backward.
    void accumulate(std::size_t id, const Matrix& contribution);
    Matrix& grad_slot(std::size_t id);

private:
    struct Node {
        Matrix value;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
        bool leaf = false;
    };

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
    bool consumed_ = false;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
/// a + 1·row, broadcasting a 1xC row over every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Per-row max (Rx1); gradient goes to the lowest-index argmax.
Tensor row_max(const Tensor& a);
Tensor row_mean(const Tensor& a);
/// Per-column reductions over rows (1xC).
Tensor col_max(const Tensor& a);
Tensor col_mean(const Tensor& a);
/// Column reductions over consecutive row segments [offsets[i], offsets[i+1]).
/// Result has offsets.size() - 1 rows. Empty segments are a ShapeError.
Tensor segment_max(const Tensor& a, std::span<const std::size_t> offsets);
Tensor segment_mean(const Tensor& a, std::span<const std::size_t> offsets);

Tensor concat_cols(std::span<const Tensor> parts);
/// Zero-pads columns on the right up to `width`.
Tensor pad_cols(const Tensor& a, std::size_t width);

/// Constant sparse matrix times tensor; the sparse operand is data.
Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& a);
/// diag(scales) · a
Tensor scale_rows(const Tensor& a, std::shared_ptr<const std::vector<double>> scales);
/// s · a for a learnable 1x1 tensor s.
Tensor scalar_mul(const Tensor& a, const Tensor& s);

/// Mean negative log-softmax of the true class, row-max stabilised.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);
Matrix softmax(const Matrix& logits);

struct Parameter {
    std::string name;
    Matrix value;
};

/// Named parameter buffers in declaration order.
class ParameterSet {
public:
    std::size_t add(std::string name, Matrix value);
    std::size_t size() const noexcept { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    std::vector<Parameter>& all() noexcept { return params_; }
    const std::vector<Parameter>& all() const noexcept { return params_; }

    /// Registers every parameter as a leaf on `tape`.
    std::vector<Tensor> bind(Tape& tape) const;
    /// Detached copies for tape-free evaluation.
    std::vector<Tensor> detached() const;

    std::size_t scalar_count() const;

private:
    std::vector<Parameter> params_;
};

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t t = 0;
};

/// One bias-corrected Adam update. grads[i] must match params[i]; a null or
/// mis-shaped gradient is an OptimizerError and leaves everything untouched.
void adam_step(ParameterSet& params, std::span<const Matrix* const> grads, AdamState& state,
               const AdamConfig& cfg);

} // namespace cosgraph::ad
