#include "cosgraph/cos_layers.hpp"

#include "cosgraph/detail/text.hpp"
#include "cosgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cosgraph {

using ad::Tensor;

std::string to_string(CrossScale c) { return c == CrossScale::inverse ? "inverse" : "paper-literal"; }
std::string to_string(Readout r) { return r == Readout::max ? "max" : "mean"; }
std::string to_string(Backbone b) { return b == Backbone::cos_gcn ? "cos-gcn" : "cos-gin"; }

CrossScale parse_cross_scale(std::string_view s) {
    if (s == "inverse") return CrossScale::inverse;
    if (s == "paper-literal") return CrossScale::paper_literal;
    throw ConfigError("unknown cross-scale '" + std::string(s) + "' (expected inverse or paper-literal)");
}

Readout parse_readout(std::string_view s) {
    if (s == "max") return Readout::max;
    if (s == "mean") return Readout::mean;
    throw ConfigError("unknown readout '" + std::string(s) + "' (expected max or mean)");
}

Backbone parse_backbone(std::string_view s) {
    if (s == "cos-gcn") return Backbone::cos_gcn;
    if (s == "cos-gin") return Backbone::cos_gin;
    throw ConfigError("unknown backbone '" + std::string(s) + "' (expected cos-gcn or cos-gin)");
}

// ------------------------------------------------------------ dual graph

DualGraph build_dual(const Graph& g, CrossScale mode) {
    const std::size_t n = g.num_nodes();
    std::vector<double> inv_sqrt(n);
    auto cross = std::make_shared<std::vector<double>>(n);
    for (std::size_t v = 0; v < n; ++v) {
        // Degree in the paired graph: neighbours, self-loop and the twin link.
        const double d = static_cast<double>(degree(g, v)) + 2.0;
        inv_sqrt[v] = 1.0 / std::sqrt(d);
        (*cross)[v] = mode == CrossScale::inverse ? 1.0 / d : d;
    }

    auto norm = std::make_shared<SparseMatrix>();
    norm->rows = norm->cols = n;
    for (std::size_t v = 0; v < n; ++v) {
        bool self_done = false;
        for (NodeId u : g.neighbors(v)) {
            if (!self_done && u > v) {
                norm->col_idx.push_back(v);
                norm->values.push_back(inv_sqrt[v] * inv_sqrt[v]);
                self_done = true;
            }
            norm->col_idx.push_back(u);
            norm->values.push_back(inv_sqrt[v] * inv_sqrt[u]);
        }
        if (!self_done) {
            norm->col_idx.push_back(v);
            norm->values.push_back(inv_sqrt[v] * inv_sqrt[v]);
        }
        norm->row_ptr.push_back(norm->col_idx.size());
    }

    DualGraph dg;
    dg.adjacency = std::make_shared<const SparseMatrix>(adjacency_matrix(g));
    dg.normalized = std::move(norm);
    dg.cross_scale = std::move(cross);
    dg.mode = mode;
    dg.offsets = {0, n};
    return dg;
}

DualGraph batch_duals(std::span<const DualGraph* const> parts) {
    DualGraph out;
    std::vector<SparseMatrix> adj, norm;
    auto cross = std::make_shared<std::vector<double>>();
    adj.reserve(parts.size());
    norm.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const DualGraph& p = *parts[i];
        if (i > 0 && p.mode != out.mode) throw ConfigError("cannot batch dual graphs with different cross-scale modes");
        out.mode = p.mode;
        adj.push_back(*p.adjacency);
        norm.push_back(*p.normalized);
        cross->insert(cross->end(), p.cross_scale->begin(), p.cross_scale->end());
        const std::size_t base = out.offsets.back();
        for (std::size_t k = 1; k < p.offsets.size(); ++k) out.offsets.push_back(base + p.offsets[k]);
    }
    out.adjacency = std::make_shared<const SparseMatrix>(block_diagonal(adj));
    out.normalized = std::make_shared<const SparseMatrix>(block_diagonal(norm));
    out.cross_scale = std::move(cross);
    return out;
}

// ---------------------------------------------------------------- layers

std::pair<Tensor, Tensor> cos_gcn_layer(const DualGraph& dg, const Tensor& h_n, const Tensor& h_ns, const Tensor& w_n,
                                        const Tensor& w_ns) {
    const std::size_t n = dg.num_nodes();
    if (h_n.rows() != n || h_ns.rows() != n) {
        throw ShapeError("cos_gcn_layer: inputs " + h_n.value().shape_string() + " and " +
                         h_ns.value().shape_string() + " for " + std::to_string(n) + " nodes");
    }
    if (h_n.cols() != w_n.rows() || h_ns.cols() != w_ns.rows() || w_n.cols() != w_ns.cols()) {
        throw ShapeError("cos_gcn_layer: weights " + w_n.value().shape_string() + " / " +
                         w_ns.value().shape_string() + " do not fit inputs " + h_n.value().shape_string() + " / " +
                         h_ns.value().shape_string());
    }
    const Tensor p = ad::matmul(h_n, w_n);
    const Tensor q = ad::matmul(h_ns, w_ns);
    Tensor out_n = ad::relu(ad::add(ad::spmm(dg.normalized, p), ad::scale_rows(q, dg.cross_scale)));
    Tensor out_ns = ad::relu(ad::add(ad::spmm(dg.normalized, q), ad::scale_rows(p, dg.cross_scale)));
    return {std::move(out_n), std::move(out_ns)};
}

Tensor aggregate_layers(std::span<const Tensor> h_n, std::span<const Tensor> h_ns) {
    std::vector<Tensor> parts(h_n.begin(), h_n.end());
    parts.insert(parts.end(), h_ns.begin(), h_ns.end());
    if (parts.empty()) throw ShapeError("aggregate_layers: no layers");
    for (const Tensor& t : parts) {
        if (t.rows() != parts.front().rows()) {
            throw ShapeError("aggregate_layers: row mismatch " + parts.front().value().shape_string() + " vs " +
                             t.value().shape_string());
        }
    }
    return ad::concat_cols(parts);
}

Tensor readout(const Tensor& h, std::span<const std::size_t> offsets, Readout kind) {
    return kind == Readout::max ? ad::segment_max(h, offsets) : ad::segment_mean(h, offsets);
}

Mlp Mlp::create(ad::ParameterSet& params, const std::string& prefix, std::vector<std::size_t> widths,
                bool activate_last, std::mt19937_64& rng) {
    Mlp m;
    m.activate_last_ = activate_last;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::string tag = prefix + "." + std::to_string(i);
        m.weights_.push_back(params.add(tag + ".weight", ad::glorot_uniform(widths[i], widths[i + 1], rng)));
        m.biases_.push_back(params.add(tag + ".bias", Matrix(1, widths[i + 1])));
    }
    return m;
}

Tensor Mlp::forward(std::span<const Tensor> bound, const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const Tensor& w = bound[weights_[i]];
        if (h.cols() != w.rows()) {
            throw ShapeError("mlp layer " + std::to_string(i) + ": input " + h.value().shape_string() +
                             " vs weight " + w.value().shape_string());
        }
        h = ad::add_row(ad::matmul(h, w), bound[biases_[i]]);
        if (i + 1 < weights_.size() || activate_last_) h = ad::relu(h);
    }
    return h;
}

std::pair<Tensor, Tensor> cos_gin_layer(const DualGraph& dg, const Tensor& h_n, const Tensor& h_ns, const Mlp& mlp_n,
                                        const Mlp& mlp_ns, const Tensor& eps, std::span<const Tensor> bound) {
    const std::size_t n = dg.num_nodes();
    if (h_n.rows() != n || h_ns.rows() != n || h_n.cols() != h_ns.cols()) {
        throw ShapeError("cos_gin_layer: inputs " + h_n.value().shape_string() + " and " +
                         h_ns.value().shape_string() + " for " + std::to_string(n) + " nodes");
    }
    auto combine = [&](const Tensor& self, const Tensor& twin) {
        const Tensor own = ad::add(self, ad::scalar_mul(self, eps));
        return ad::add(ad::add(own, ad::spmm(dg.adjacency, self)), twin);
    };
    Tensor out_n = mlp_n.forward(bound, combine(h_n, h_ns));
    Tensor out_ns = mlp_ns.forward(bound, combine(h_ns, h_n));
    return {std::move(out_n), std::move(out_ns)};
}

Tensor gin_graph_readout(std::span<const Tensor> h_n, std::span<const Tensor> h_ns, std::span<const Mlp> fc_n,
                         std::span<const Mlp> fc_ns, std::span<const Tensor> bound,
                         std::span<const std::size_t> offsets, Readout kind) {
    if (h_n.empty() || h_n.size() != h_ns.size() || fc_n.size() != h_n.size() || fc_ns.size() != h_n.size()) {
        throw ShapeError("gin_graph_readout: layer counts disagree");
    }
    Tensor total;
    bool first = true;
    auto accumulate = [&](const Tensor& term) {
        if (!first && !total.value().same_shape(term.value())) {
            throw ShapeError("gin_graph_readout: " + total.value().shape_string() + " vs " +
                             term.value().shape_string());
        }
        total = first ? term : ad::add(total, term);
        first = false;
    };
    for (std::size_t l = 0; l < h_n.size(); ++l) accumulate(fc_n[l].forward(bound, readout(h_n[l], offsets, kind)));
    for (std::size_t l = 0; l < h_ns.size(); ++l)
        accumulate(fc_ns[l].forward(bound, readout(h_ns[l], offsets, kind)));
    return total;
}

Tensor fuse(const Tensor& h_l, const Tensor& x_gs, const Mlp& mlp_l, const Mlp& mlp_gs, std::span<const Tensor> bound) {
    if (x_gs.cols() != kGraphFeatureCount || x_gs.rows() != h_l.rows()) {
        throw ShapeError("fuse: graph features " + x_gs.value().shape_string() + " for representation " +
                         h_l.value().shape_string());
    }
    const Tensor parts[2] = {mlp_l.forward(bound, h_l), mlp_gs.forward(bound, x_gs)};
    return ad::concat_cols(parts);
}

// ---------------------------------------------------------------- inputs

GraphInput make_input(const Graph& g, const AugmentRecord& rec, CrossScale mode) {
    if (rec.node.rows() != g.num_nodes() || rec.node.cols() != kNodeFeatureCount) {
        throw ShapeError("structural features " + rec.node.shape_string() + " for a graph with " +
                         std::to_string(g.num_nodes()) + " nodes");
    }
    GraphInput in;
    in.dual = build_dual(g, mode);
    in.x_n = node_input(g);
    in.x_ns = rec.node;
    in.x_gs = rec.graph;
    in.label = g.label().value_or(0);
    return in;
}

GraphBatch make_batch(std::span<const GraphInput> inputs, std::span<const std::size_t> indices) {
    GraphBatch b;
    if (indices.empty()) throw ShapeError("empty batch");
    std::vector<const DualGraph*> duals;
    std::size_t nodes = 0;
    const std::size_t d = inputs[indices.front()].x_n.cols();
    for (std::size_t i : indices) {
        if (inputs[i].x_n.cols() != d) throw ShapeError("batch mixes attribute widths");
        duals.push_back(&inputs[i].dual);
        nodes += inputs[i].x_n.rows();
    }
    b.dual = batch_duals(duals);
    b.x_n = Matrix(nodes, d);
    b.x_ns = Matrix(nodes, kNodeFeatureCount);
    b.x_gs = Matrix(indices.size(), kGraphFeatureCount);
    std::size_t row = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const GraphInput& in = inputs[indices[k]];
        std::copy(in.x_n.values().begin(), in.x_n.values().end(), b.x_n.row(row).begin());
        std::copy(in.x_ns.values().begin(), in.x_ns.values().end(), b.x_ns.row(row).begin());
        std::copy(in.x_gs.begin(), in.x_gs.end(), b.x_gs.row(k).begin());
        b.labels.push_back(in.label);
        row += in.x_n.rows();
    }
    return b;
}

GraphBatch make_batch(std::span<const GraphInput> inputs) {
    std::vector<std::size_t> all(inputs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return make_batch(inputs, all);
}

// ----------------------------------------------------------------- model

CosModel CosModel::create(const ModelDims& dims, std::uint64_t seed) {
    if (dims.layers < 1) throw ConfigError("model needs at least one layer");
    if (dims.hidden < 1) throw ConfigError("hidden width must be positive");
    if (dims.input_dim < 1) throw ConfigError("input width must be positive");
    if (dims.num_classes < 2) throw ConfigError("need at least two classes");

    CosModel m;
    m.dims_ = dims;
    std::mt19937_64 rng(seed);
    const std::size_t h = dims.hidden;
    const std::size_t L = dims.layers;
    auto& P = m.params_;

    if (dims.backbone == Backbone::cos_gcn) {
        for (std::size_t l = 0; l < L; ++l) {
            const std::string tag = "layer" + std::to_string(l + 1);
            m.w_n_.push_back(P.add(tag + ".w_n", ad::glorot_uniform(l == 0 ? dims.input_dim : h, h, rng)));
            m.w_ns_.push_back(P.add(tag + ".w_ns", ad::glorot_uniform(l == 0 ? kNodeFeatureCount : h, h, rng)));
        }
        m.mlp_l_ = Mlp::create(P, "mlp_l", {2 * L * h, h, h}, false, rng);
    } else {
        const std::size_t width = std::max(dims.input_dim, kNodeFeatureCount);
        for (std::size_t l = 0; l < L; ++l) {
            const std::string tag = "layer" + std::to_string(l + 1);
            const std::size_t in = l == 0 ? width : h;
            m.gin_n_.push_back(Mlp::create(P, tag + ".mlp_n", {in, h, h}, true, rng));
            m.gin_ns_.push_back(Mlp::create(P, tag + ".mlp_ns", {in, h, h}, true, rng));
            m.eps_.push_back(P.add(tag + ".eps", Matrix(1, 1)));
            m.fc_n_.push_back(Mlp::create(P, tag + ".fc_n", {h, h}, false, rng));
            m.fc_ns_.push_back(Mlp::create(P, tag + ".fc_ns", {h, h}, false, rng));
        }
        m.mlp_l_ = Mlp::create(P, "mlp_l", {h, h, h}, false, rng);
    }
    m.mlp_gs_ = Mlp::create(P, "mlp_gs", {kGraphFeatureCount, h, h}, false, rng);
    m.classifier_ = Mlp::create(P, "classifier", {2 * h, h, h, dims.num_classes}, false, rng);
    return m;
}

ForwardPass CosModel::forward(const GraphBatch& batch, ad::Tape* tape) const {
    ForwardPass out;
    out.params = tape ? params_.bind(*tape) : params_.detached();
    const auto& P = out.params;
    const DualGraph& dg = batch.dual;
    if (batch.x_n.cols() != dims_.input_dim) {
        throw ShapeError("model expects " + std::to_string(dims_.input_dim) + " attribute columns, batch has " +
                         std::to_string(batch.x_n.cols()));
    }

    Tensor h_n(batch.x_n);
    Tensor h_ns(batch.x_ns);
    std::vector<Tensor> hs_n, hs_ns;
    Tensor h_l;
    if (dims_.backbone == Backbone::cos_gcn) {
        for (std::size_t l = 0; l < dims_.layers; ++l) {
            std::tie(h_n, h_ns) = cos_gcn_layer(dg, h_n, h_ns, P[w_n_[l]], P[w_ns_[l]]);
            hs_n.push_back(h_n);
            hs_ns.push_back(h_ns);
        }
        h_l = readout(aggregate_layers(hs_n, hs_ns), dg.offsets, dims_.readout);
    } else {
        const std::size_t width = std::max(dims_.input_dim, kNodeFeatureCount);
        h_n = ad::pad_cols(h_n, width);
        h_ns = ad::pad_cols(h_ns, width);
        for (std::size_t l = 0; l < dims_.layers; ++l) {
            std::tie(h_n, h_ns) = cos_gin_layer(dg, h_n, h_ns, gin_n_[l], gin_ns_[l], P[eps_[l]], P);
            hs_n.push_back(h_n);
            hs_ns.push_back(h_ns);
        }
        h_l = gin_graph_readout(hs_n, hs_ns, fc_n_, fc_ns_, P, dg.offsets, dims_.readout);
    }
    out.h_g = fuse(h_l, Tensor(batch.x_gs), mlp_l_, mlp_gs_, P);
    out.logits = classifier_.forward(P, out.h_g);
    return out;
}

void CosModel::zero_augmentation_branches() {
    auto zero = [this](std::size_t idx) { std::fill(params_[idx].value.values().begin(), params_[idx].value.values().end(), 0.0); };
    auto zero_mlp = [&](const Mlp& m) {
        for (std::size_t i = 0; i < m.depth(); ++i) {
            zero(m.weight_index(i));
            zero(m.bias_index(i));
        }
    };
    zero_mlp(mlp_gs_);
    if (dims_.backbone == Backbone::cos_gcn) {
        for (std::size_t idx : w_ns_) zero(idx);
        // Rows of the first fusion layer that read the twin-branch readout.
        Matrix& w = params_[mlp_l_.weight_index(0)].value;
        const std::size_t half = dims_.layers * dims_.hidden;
        for (std::size_t r = half; r < w.rows(); ++r)
            for (double& v : w.row(r)) v = 0.0;
    } else {
        for (const Mlp& m : gin_ns_) zero_mlp(m);
        for (const Mlp& m : fc_ns_) zero_mlp(m);
    }
}

// ------------------------------------------------------------ checkpoint

namespace {
constexpr std::string_view kCheckpointHeader = "cosgraph-checkpoint 1";

std::string expect_field(std::istream& in, std::string_view key, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": truncated checkpoint, expected '" + std::string(key) + "'");
    const auto parts = detail::split_ws(line);
    if (parts.size() < 2 || parts[0] != key) {
        throw IoError(path.string() + ": expected '" + std::string(key) + "' line, got '" + line + "'");
    }
    return std::string(parts[1]);
}

std::size_t expect_count(std::istream& in, std::string_view key, const std::filesystem::path& path) {
    long v = 0;
    const std::string s = expect_field(in, key, path);
    if (!detail::parse_long(s, v) || v < 0) throw IoError(path.string() + ": bad " + std::string(key) + " '" + s + "'");
    return static_cast<std::size_t>(v);
}
} // namespace

void save_checkpoint(const CosModel& model, std::uint64_t seed, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    const ModelDims& d = model.dims();
    out << kCheckpointHeader << '\n'
        << "backbone " << to_string(d.backbone) << '\n'
        << "input_dim " << d.input_dim << '\n'
        << "layers " << d.layers << '\n'
        << "hidden " << d.hidden << '\n'
        << "classes " << d.num_classes << '\n'
        << "readout " << to_string(d.readout) << '\n'
        << "cross_scale " << to_string(d.cross_scale) << '\n'
        << "seed " << seed << '\n'
        << "parameters " << model.params().size() << '\n';
    for (const auto& p : model.params().all()) {
        out << "param " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            if (i) out << ' ';
            out << detail::format_double(p.value.values()[i]);
        }
        out << '\n';
    }
    out << "end\n";
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string line;
    std::getline(in, line);
    if (detail::trim(line) != kCheckpointHeader) throw IoError(path.string() + ": not a cosgraph checkpoint (version 1)");

    ModelDims d;
    try {
        d.backbone = parse_backbone(expect_field(in, "backbone", path));
        d.input_dim = expect_count(in, "input_dim", path);
        d.layers = expect_count(in, "layers", path);
        d.hidden = expect_count(in, "hidden", path);
        d.num_classes = expect_count(in, "classes", path);
        d.readout = parse_readout(expect_field(in, "readout", path));
        d.cross_scale = parse_cross_scale(expect_field(in, "cross_scale", path));
    } catch (const ConfigError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    const std::string seed_text = expect_field(in, "seed", path);
    std::uint64_t seed = 0;
    try {
        seed = std::stoull(seed_text);
    } catch (const std::exception&) {
        throw IoError(path.string() + ": bad seed '" + seed_text + "'");
    }

    Checkpoint ck{CosModel::create(d, seed), seed};
    auto& params = ck.model.params();
    const std::size_t count = expect_count(in, "parameters", path);
    if (count != params.size()) {
        throw IoError(path.string() + ": " + std::to_string(count) + " parameters, layout expects " +
                      std::to_string(params.size()));
    }
    for (auto& p : params.all()) {
        if (!std::getline(in, line)) throw IoError(path.string() + ": truncated at parameter " + p.name);
        const auto head = detail::split_ws(line);
        long r = 0, c = 0;
        if (head.size() != 4 || head[0] != "param" || head[1] != p.name || !detail::parse_long(head[2], r) ||
            !detail::parse_long(head[3], c) || static_cast<std::size_t>(r) != p.value.rows() ||
            static_cast<std::size_t>(c) != p.value.cols()) {
            throw IoError(path.string() + ": parameter header '" + line + "' does not match " + p.name + " " +
                          p.value.shape_string());
        }
        if (!std::getline(in, line)) throw IoError(path.string() + ": missing values for " + p.name);
        const auto vals = detail::split_ws(line);
        if (vals.size() != p.value.size()) {
            throw IoError(path.string() + ": " + p.name + " has " + std::to_string(vals.size()) + " values, expected " +
                          std::to_string(p.value.size()));
        }
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (!detail::parse_double(vals[i], p.value.values()[i])) {
                throw IoError(path.string() + ": bad value '" + std::string(vals[i]) + "' in " + p.name);
            }
        }
    }
    if (!std::getline(in, line) || detail::trim(line) != "end") throw IoError(path.string() + ": missing end marker");
    return ck;
}

} // namespace cosgraph
