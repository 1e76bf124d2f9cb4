#include "cosgraph/tensor.hpp"

#include "cosgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>

namespace cosgraph::ad {

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(Matrix value) : detached_(std::make_shared<const Matrix>(std::move(value))) {}

const Matrix& Tensor::value() const {
    if (tape_) return tape_->value(id_);
    if (detached_) return *detached_;
    static const Matrix empty;
    return empty;
}

std::optional<std::size_t> Tensor::tape_id() const {
    if (tape_) return id_;
    return std::nullopt;
}

// ------------------------------------------------------------- Gradients

const Matrix& Gradients::of(const Tensor& leaf) const {
    if (leaf.tape() != tape_ || !leaf.tape_id() || *leaf.tape_id() >= grads_.size() || !grads_[*leaf.tape_id()]) {
        throw TapeError("no gradient recorded for this tensor (not a leaf of the differentiated tape)");
    }
    return *grads_[*leaf.tape_id()];
}

bool Gradients::contains(const Tensor& leaf) const {
    return leaf.tape() == tape_ && leaf.tape_id() && *leaf.tape_id() < grads_.size() &&
           grads_[*leaf.tape_id()].has_value();
}

// ------------------------------------------------------------------ Tape

Tensor Tape::leaf(Matrix value) {
    nodes_.push_back({std::move(value), {}, {}, true, true});
    return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
    nodes_.push_back({std::move(value), {}, {}, false, false});
    return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
    if (consumed_) throw TapeError("cannot record onto a tape that has already been differentiated");
    bool needs = false;
    for (std::size_t p : parents) {
        if (p >= nodes_.size()) throw TapeError("parent id " + std::to_string(p) + " not on tape");
        needs = needs || nodes_[p].requires_grad;
    }
    nodes_.push_back({std::move(value), std::move(parents), needs ? std::move(fn) : BackwardFn{}, needs, false});
    return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::adopt(const Tensor& t) {
    if (t.tape() == this) return t;
    if (t.tape() != nullptr) throw TapeError("operands recorded on different tapes");
    return constant(t.value());
}

void Tape::accumulate(std::size_t id, const Matrix& contribution) {
    if (!nodes_[id].requires_grad) return;
    Matrix& slot = grad_slot(id);
    if (!slot.same_shape(contribution)) {
        throw TapeError("gradient shape " + contribution.shape_string() + " does not match value shape " +
                        slot.shape_string());
    }
    double* dst = slot.data();
    const double* src = contribution.data();
    for (std::size_t i = 0; i < slot.size(); ++i) dst[i] += src[i];
}

Matrix& Tape::grad_slot(std::size_t id) {
    if (grads_.size() != nodes_.size()) throw TapeError("gradients are only available during backward");
    Matrix& slot = grads_[id];
    if (!slot.same_shape(nodes_[id].value)) slot = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
    return slot;
}

Gradients Tape::backward(const Tensor& loss) {
    if (consumed_) throw TapeError("backward already ran on this tape; record a new pass first");
    if (loss.tape() == nullptr) throw TapeError("backward seed is detached from any tape");
    if (loss.tape() != this) throw TapeError("backward seed belongs to a different tape");
    const std::size_t seed = *loss.tape_id();
    if (nodes_[seed].value.rows() != 1 || nodes_[seed].value.cols() != 1) {
        throw TapeError("backward seed must be a 1x1 scalar, got " + nodes_[seed].value.shape_string());
    }
    consumed_ = true;

    grads_.assign(nodes_.size(), Matrix{});
    std::vector<bool> reached(nodes_.size(), false);
    grads_[seed] = Matrix(1, 1, 1.0);
    reached[seed] = true;
    for (std::size_t i = seed + 1; i-- > 0;) {
        if (!reached[i]) continue;
        Node& node = nodes_[i];
        if (node.backward) {
            for (std::size_t p : node.parents) reached[p] = reached[p] || nodes_[p].requires_grad;
            node.backward(grads_[i], *this);
        }
        if (!node.leaf) grads_[i] = Matrix{};
    }

    Gradients out;
    out.tape_ = this;
    out.grads_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].leaf) continue;
        if (grads_[i].same_shape(nodes_[i].value)) {
            out.grads_[i] = std::move(grads_[i]);
        } else {
            out.grads_[i] = Matrix(nodes_[i].value.rows(), nodes_[i].value.cols());
        }
    }
    grads_.clear();
    return out;
}

// ------------------------------------------------------------------- ops

namespace {

Tape* shared_tape(std::initializer_list<const Tensor*> ts) {
    Tape* tape = nullptr;
    for (const Tensor* t : ts) {
        if (!t->tape()) continue;
        if (tape && tape != t->tape()) throw TapeError("operands recorded on different tapes");
        tape = t->tape();
    }
    return tape;
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
}

template <typename Fn>
Tensor unary(const Tensor& a, Matrix out, Fn&& backward) {
    Tape* tape = a.tape();
    if (!tape) return Tensor(std::move(out));
    const std::size_t ia = *a.tape_id();
    return tape->record(std::move(out), {ia},
                        [ia, backward = std::forward<Fn>(backward)](const Matrix& g, Tape& t) { backward(g, t, ia); });
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    Matrix out = dense_matmul(a.value(), b.value());
    Tape* tape = shared_tape({&a, &b});
    if (!tape) return Tensor(std::move(out));
    const std::size_t ia = *tape->adopt(a).tape_id();
    const std::size_t ib = *tape->adopt(b).tape_id();
    return tape->record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
        if (t.requires_grad(ia)) t.accumulate(ia, dense_matmul_nt(g, t.value(ib)));
        if (t.requires_grad(ib)) t.accumulate(ib, dense_matmul_tn(t.value(ia), g));
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a.value(), b.value());
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.value().values()[i];
    Tape* tape = shared_tape({&a, &b});
    if (!tape) return Tensor(std::move(out));
    const std::size_t ia = *tape->adopt(a).tape_id();
    const std::size_t ib = *tape->adopt(b).tape_id();
    return tape->record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw ShapeError("add_row: " + av.shape_string() + " + row " + rv.shape_string());
    }
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
    Tape* tape = shared_tape({&a, &row});
    if (!tape) return Tensor(std::move(out));
    const std::size_t ia = *tape->adopt(a).tape_id();
    const std::size_t ib = *tape->adopt(row).tape_id();
    return tape->record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
        t.accumulate(ia, g);
        if (t.requires_grad(ib)) {
            Matrix& slot = t.grad_slot(ib);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) slot(0, c) += g(r, c);
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a.value(), b.value());
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.value().values()[i];
    Tape* tape = shared_tape({&a, &b});
    if (!tape) return Tensor(std::move(out));
    const std::size_t ia = *tape->adopt(a).tape_id();
    const std::size_t ib = *tape->adopt(b).tape_id();
    return tape->record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
        if (t.requires_grad(ia)) {
            Matrix& slot = t.grad_slot(ia);
            for (std::size_t i = 0; i < g.size(); ++i) slot.values()[i] += g.values()[i] * t.value(ib).values()[i];
        }
        if (t.requires_grad(ib)) {
            Matrix& slot = t.grad_slot(ib);
            for (std::size_t i = 0; i < g.size(); ++i) slot.values()[i] += g.values()[i] * t.value(ia).values()[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    Matrix out = a.value();
    for (double& v : out.values()) v *= c;
    return unary(a, std::move(out), [c](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t i = 0; i < g.size(); ++i) slot.values()[i] += c * g.values()[i];
    });
}

Tensor relu(const Tensor& a) {
    Matrix out = a.value();
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return unary(a, std::move(out), [](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        const auto& x = t.value(ia).values();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0) slot.values()[i] += g.values()[i];
    });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.value().values()) total += v;
    return unary(a, Matrix(1, 1, total), [](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (double& v : slot.values()) v += g(0, 0);
    });
}

Tensor mean(const Tensor& a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw ShapeError("mean of an empty tensor");
    double total = 0.0;
    for (double v : a.value().values()) total += v;
    return unary(a, Matrix(1, 1, total / n), [n](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (double& v : slot.values()) v += g(0, 0) / n;
    });
}

Tensor row_max(const Tensor& a) {
    const Matrix& x = a.value();
    if (x.cols() == 0) throw ShapeError("row_max over zero columns");
    Matrix out(x.rows(), 1);
    std::vector<std::size_t> arg(x.rows(), 0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 1; c < x.cols(); ++c)
            if (x(r, c) > x(r, arg[r])) arg[r] = c;
        out(r, 0) = x(r, arg[r]);
    }
    return unary(a, std::move(out), [arg = std::move(arg)](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t r = 0; r < arg.size(); ++r) slot(r, arg[r]) += g(r, 0);
    });
}

Tensor row_mean(const Tensor& a) {
    const Matrix& x = a.value();
    if (x.cols() == 0) throw ShapeError("row_mean over zero columns");
    const double n = static_cast<double>(x.cols());
    Matrix out(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (double v : x.row(r)) s += v;
        out(r, 0) = s / n;
    }
    return unary(a, std::move(out), [n](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t r = 0; r < slot.rows(); ++r)
            for (std::size_t c = 0; c < slot.cols(); ++c) slot(r, c) += g(r, 0) / n;
    });
}

Tensor segment_max(const Tensor& a, std::span<const std::size_t> offsets) {
    const Matrix& x = a.value();
    if (offsets.size() < 2 || offsets.back() != x.rows()) {
        throw ShapeError("segment_max: offsets do not cover the " + std::to_string(x.rows()) + " rows");
    }
    const std::size_t segments = offsets.size() - 1;
    Matrix out(segments, x.cols());
    std::vector<std::size_t> arg(segments * x.cols());
    for (std::size_t s = 0; s < segments; ++s) {
        if (offsets[s + 1] <= offsets[s]) throw ShapeError("readout over an empty graph (segment " + std::to_string(s) + ")");
        for (std::size_t c = 0; c < x.cols(); ++c) {
            std::size_t best = offsets[s];
            for (std::size_t r = offsets[s] + 1; r < offsets[s + 1]; ++r)
                if (x(r, c) > x(best, c)) best = r;
            arg[s * x.cols() + c] = best;
            out(s, c) = x(best, c);
        }
    }
    const std::size_t cols = x.cols();
    return unary(a, std::move(out), [arg = std::move(arg), cols](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t s = 0; s < g.rows(); ++s)
            for (std::size_t c = 0; c < cols; ++c) slot(arg[s * cols + c], c) += g(s, c);
    });
}

Tensor segment_mean(const Tensor& a, std::span<const std::size_t> offsets) {
    const Matrix& x = a.value();
    if (offsets.size() < 2 || offsets.back() != x.rows()) {
        throw ShapeError("segment_mean: offsets do not cover the " + std::to_string(x.rows()) + " rows");
    }
    const std::size_t segments = offsets.size() - 1;
    Matrix out(segments, x.cols());
    for (std::size_t s = 0; s < segments; ++s) {
        if (offsets[s + 1] <= offsets[s]) throw ShapeError("readout over an empty graph (segment " + std::to_string(s) + ")");
        const double n = static_cast<double>(offsets[s + 1] - offsets[s]);
        for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
            for (std::size_t c = 0; c < x.cols(); ++c) out(s, c) += x(r, c);
        for (std::size_t c = 0; c < x.cols(); ++c) out(s, c) /= n;
    }
    std::vector<std::size_t> offs(offsets.begin(), offsets.end());
    return unary(a, std::move(out), [offs = std::move(offs)](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
            const double n = static_cast<double>(offs[s + 1] - offs[s]);
            for (std::size_t r = offs[s]; r < offs[s + 1]; ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) slot(r, c) += g(s, c) / n;
        }
    });
}

Tensor col_max(const Tensor& a) {
    const std::size_t offsets[2] = {0, a.rows()};
    return segment_max(a, offsets);
}

Tensor col_mean(const Tensor& a) {
    const std::size_t offsets[2] = {0, a.rows()};
    return segment_mean(a, offsets);
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_cols of nothing");
    const std::size_t rows = parts.front().rows();
    std::size_t width = 0;
    Tape* tape = nullptr;
    for (const Tensor& p : parts) {
        if (p.rows() != rows) {
            throw ShapeError("concat_cols: row mismatch " + parts.front().value().shape_string() + " vs " +
                             p.value().shape_string());
        }
        width += p.cols();
        if (p.tape()) {
            if (tape && tape != p.tape()) throw TapeError("operands recorded on different tapes");
            tape = p.tape();
        }
    }
    Matrix out(rows, width);
    std::vector<std::size_t> starts;
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        const Matrix& v = p.value();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
        starts.push_back(offset);
        offset += v.cols();
    }
    if (!tape) return Tensor(std::move(out));
    std::vector<std::size_t> ids;
    for (const Tensor& p : parts) ids.push_back(*tape->adopt(p).tape_id());
    std::vector<std::size_t> parents = ids;
    return tape->record(std::move(out), std::move(parents),
                        [ids = std::move(ids), starts = std::move(starts)](const Matrix& g, Tape& t) {
                            for (std::size_t k = 0; k < ids.size(); ++k) {
                                if (!t.requires_grad(ids[k])) continue;
                                Matrix& slot = t.grad_slot(ids[k]);
                                for (std::size_t r = 0; r < slot.rows(); ++r)
                                    for (std::size_t c = 0; c < slot.cols(); ++c) slot(r, c) += g(r, starts[k] + c);
                            }
                        });
}

Tensor pad_cols(const Tensor& a, std::size_t width) {
    const Matrix& x = a.value();
    if (width < x.cols()) throw ShapeError("pad_cols: width " + std::to_string(width) + " below " + x.shape_string());
    if (width == x.cols()) return a;
    Matrix out(x.rows(), width);
    for (std::size_t r = 0; r < x.rows(); ++r) std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin());
    return unary(a, std::move(out), [](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t r = 0; r < slot.rows(); ++r)
            for (std::size_t c = 0; c < slot.cols(); ++c) slot(r, c) += g(r, c);
    });
}

Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& a) {
    Matrix out = s->multiply(a.value());
    return unary(a, std::move(out), [s = std::move(s)](const Matrix& g, Tape& t, std::size_t ia) {
        t.accumulate(ia, s->transpose_multiply(g));
    });
}

Tensor scale_rows(const Tensor& a, std::shared_ptr<const std::vector<double>> scales) {
    const Matrix& x = a.value();
    if (scales->size() != x.rows()) {
        throw ShapeError("scale_rows: " + std::to_string(scales->size()) + " scales for " + x.shape_string());
    }
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (double& v : out.row(r)) v *= (*scales)[r];
    return unary(a, std::move(out), [scales = std::move(scales)](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix& slot = t.grad_slot(ia);
        for (std::size_t r = 0; r < slot.rows(); ++r)
            for (std::size_t c = 0; c < slot.cols(); ++c) slot(r, c) += (*scales)[r] * g(r, c);
    });
}

Tensor scalar_mul(const Tensor& a, const Tensor& s) {
    if (s.rows() != 1 || s.cols() != 1) throw ShapeError("scalar_mul: scale must be 1x1, got " + s.value().shape_string());
    const double k = s.value()(0, 0);
    Matrix out = a.value();
    for (double& v : out.values()) v *= k;
    Tape* tape = shared_tape({&a, &s});
    if (!tape) return Tensor(std::move(out));
    const std::size_t ia = *tape->adopt(a).tape_id();
    const std::size_t is = *tape->adopt(s).tape_id();
    return tape->record(std::move(out), {ia, is}, [ia, is](const Matrix& g, Tape& t) {
        const Matrix& x = t.value(ia);
        if (t.requires_grad(ia)) {
            Matrix& slot = t.grad_slot(ia);
            const double k = t.value(is)(0, 0);
            for (std::size_t i = 0; i < g.size(); ++i) slot.values()[i] += k * g.values()[i];
        }
        if (t.requires_grad(is)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += x.values()[i] * g.values()[i];
            t.grad_slot(is)(0, 0) += acc;
        }
    });
}

Matrix softmax(const Matrix& logits) {
    Matrix p = logits;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        auto row = p.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double& v : row) {
            v = std::exp(v - m);
            z += v;
        }
        for (double& v : row) v /= z;
    }
    return p;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    const Matrix& x = logits.value();
    if (labels.size() != x.rows()) {
        throw LossError("cross entropy: " + std::to_string(labels.size()) + " labels for " + x.shape_string() + " logits");
    }
    if (x.rows() == 0 || x.cols() == 0) throw LossError("cross entropy over empty logits");
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= x.cols()) {
            throw LossError("label " + std::to_string(labels[r]) + " outside [0, " + std::to_string(x.cols()) + ")");
        }
    }
    double total = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - m);
        total += (m + std::log(z)) - row[static_cast<std::size_t>(labels[r])];
    }
    const double n = static_cast<double>(x.rows());
    std::vector<int> ys(labels.begin(), labels.end());
    return unary(logits, Matrix(1, 1, total / n), [ys = std::move(ys), n](const Matrix& g, Tape& t, std::size_t ia) {
        Matrix p = softmax(t.value(ia));
        for (std::size_t r = 0; r < p.rows(); ++r) p(r, static_cast<std::size_t>(ys[r])) -= 1.0;
        const double k = g(0, 0) / n;
        for (double& v : p.values()) v *= k;
        t.accumulate(ia, p);
    });
}

// ------------------------------------------------------------ parameters

std::size_t ParameterSet::add(std::string name, Matrix value) {
    params_.push_back({std::move(name), std::move(value)});
    return params_.size() - 1;
}

std::vector<Tensor> ParameterSet::bind(Tape& tape) const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(tape.leaf(p.value));
    return out;
}

std::vector<Tensor> ParameterSet::detached() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.emplace_back(p.value);
    return out;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (double& v : w.values()) v = dist(rng);
    return w;
}

void adam_step(ParameterSet& params, std::span<const Matrix* const> grads, AdamState& state, const AdamConfig& cfg) {
    if (grads.size() != params.size()) {
        throw OptimizerError("adam: " + std::to_string(grads.size()) + " gradients for " +
                             std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i] == nullptr) throw OptimizerError("adam: missing gradient for parameter '" + params[i].name + "'");
        if (!grads[i]->same_shape(params[i].value)) {
            throw OptimizerError("adam: gradient " + grads[i]->shape_string() + " for parameter '" + params[i].name +
                                 "' of shape " + params[i].value.shape_string());
        }
    }
    if (state.m.size() != params.size()) {
        state.m.clear();
        state.v.clear();
        for (const auto& p : params.all()) {
            state.m.emplace_back(p.value.rows(), p.value.cols());
            state.v.emplace_back(p.value.rows(), p.value.cols());
        }
        state.t = 0;
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i].value.values();
        auto& m = state.m[i].values();
        auto& v = state.v[i].values();
        const auto& g = grads[i]->values();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            w[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

} // namespace cosgraph::ad
