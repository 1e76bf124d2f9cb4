#pragma once

#include "cosgraph/features.hpp"
#include "cosgraph/graph.hpp"
#include "cosgraph/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cosgraph {

enum class CrossScale { inverse, paper_literal };
enum class Readout { max, mean };
enum class Backbone { cos_gcn, cos_gin };

std::string to_string(CrossScale c);
std::string to_string(Readout r);
std::string to_string(Backbone b);
/// Parsers accept the CLI spellings and throw ConfigError otherwise.
CrossScale parse_cross_scale(std::string_view s);
Readout parse_readout(std::string_view s);
Backbone parse_backbone(std::string_view s);

/// Normalised operators for the graph paired with its structural twin. The
/// twin has the same edges, and node v is linked to its copy.
///
/// For a batch the matrices are block diagonal and `offsets` delimits the
/// node rows of each graph.
struct DualGraph {
    std::shared_ptr<const SparseMatrix> adjacency;  // A, unit weights
    std::shared_ptr<const SparseMatrix> normalized; // (D+2I)^-1/2 (A+I) (D+2I)^-1/2
    std::shared_ptr<const std::vector<double>> cross_scale;
    CrossScale mode = CrossScale::inverse;
    std::vector<std::size_t> offsets{0};

    std::size_t num_nodes() const noexcept { return offsets.back(); }
    std::size_t num_graphs() const noexcept { return offsets.size() - 1; }
};

DualGraph build_dual(const Graph& g, CrossScale mode = CrossScale::inverse);
/// Block-diagonal composition; all parts must share one mode.
DualGraph batch_duals(std::span<const DualGraph* const> parts);

/// Returns (relu(Â Hn Wn + C Hns Wns), relu(Â Hns Wns + C Hn Wn)).
std::pair<ad::Tensor, ad::Tensor> cos_gcn_layer(const DualGraph& dg, const ad::Tensor& h_n,
                                                const ad::Tensor& h_ns, const ad::Tensor& w_n,
                                                const ad::Tensor& w_ns);

/// [Hn^1 .. Hn^L | Hns^1 .. Hns^L]
ad::Tensor aggregate_layers(std::span<const ad::Tensor> h_n, std::span<const ad::Tensor> h_ns);

/// Per-graph column reduction, one output row per segment of `offsets`.
ad::Tensor readout(const ad::Tensor& h, std::span<const std::size_t> offsets, Readout kind);

/// Stack of Linear layers with ReLU between them (and after the last one
/// when `activate_last`). Zero layers is the identity map.
class Mlp {
public:
    Mlp() = default;

    /// widths = {in, hidden..., out}. Weights are Glorot uniform, biases zero.
    static Mlp create(ad::ParameterSet& params, const std::string& prefix, std::vector<std::size_t> widths,
                      bool activate_last, std::mt19937_64& rng);

    ad::Tensor forward(std::span<const ad::Tensor> bound, const ad::Tensor& x) const;

    std::size_t depth() const noexcept { return weights_.size(); }
    std::size_t weight_index(std::size_t layer) const { return weights_.at(layer); }
    std::size_t bias_index(std::size_t layer) const { return biases_.at(layer); }

private:
    std::vector<std::size_t> weights_;
    std::vector<std::size_t> biases_;
    bool activate_last_ = false;
};

/// Per node: MLP_n((1+eps) hn[v] + sum_{u~v} hn[u] + hns[v]) and the mirrored
/// update for the twin. `eps` is 1x1.
std::pair<ad::Tensor, ad::Tensor> cos_gin_layer(const DualGraph& dg, const ad::Tensor& h_n,
                                                const ad::Tensor& h_ns, const Mlp& mlp_n, const Mlp& mlp_ns,
                                                const ad::Tensor& eps, std::span<const ad::Tensor> bound);

/// sum_l FC_n^l(readout(Hn^l)) + sum_l FC_ns^l(readout(Hns^l))
ad::Tensor gin_graph_readout(std::span<const ad::Tensor> h_n, std::span<const ad::Tensor> h_ns,
                             std::span<const Mlp> fc_n, std::span<const Mlp> fc_ns,
                             std::span<const ad::Tensor> bound, std::span<const std::size_t> offsets,
                             Readout kind);

/// concat(MLP^l(h_l), MLP^gs(x_gs))
ad::Tensor fuse(const ad::Tensor& h_l, const ad::Tensor& x_gs, const Mlp& mlp_l, const Mlp& mlp_gs,
                std::span<const ad::Tensor> bound);

struct ModelDims {
    Backbone backbone = Backbone::cos_gcn;
    std::size_t input_dim = 1; // columns of node_input(g)
    std::size_t layers = 3;
    std::size_t hidden = 256;
    std::size_t num_classes = 2;
    Readout readout = Readout::max;
    CrossScale cross_scale = CrossScale::inverse;
};

/// Model inputs for one graph, with structural features already scaled.
struct GraphInput {
    DualGraph dual;
    Matrix x_n;  // n x input_dim
    Matrix x_ns; // n x 7
    std::array<double, kGraphFeatureCount> x_gs{};
    int label = 0;
};

GraphInput make_input(const Graph& g, const AugmentRecord& rec, CrossScale mode);

struct GraphBatch {
    DualGraph dual;
    Matrix x_n;
    Matrix x_ns;
    Matrix x_gs; // B x 6
    std::vector<int> labels;
};

GraphBatch make_batch(std::span<const GraphInput> inputs, std::span<const std::size_t> indices);
GraphBatch make_batch(std::span<const GraphInput> inputs);

struct ForwardPass {
    std::vector<ad::Tensor> params; // bound parameters, in declaration order
    ad::Tensor h_g;
    ad::Tensor logits;
};

class CosModel {
public:
    static CosModel create(const ModelDims& dims, std::uint64_t seed);

    const ModelDims& dims() const noexcept { return dims_; }
    ad::ParameterSet& params() noexcept { return params_; }
    const ad::ParameterSet& params() const noexcept { return params_; }

    /// Records on `tape` when given, otherwise evaluates detached.
    ForwardPass forward(const GraphBatch& batch, ad::Tape* tape = nullptr) const;

    /// Zeroes every parameter through which structural features reach the
    /// logits, leaving the model equivalent to its plain counterpart.
    void zero_augmentation_branches();

    // Layout accessors (parameter indices), used by tests and checkpoints.
    std::size_t w_n(std::size_t layer) const { return w_n_.at(layer); }
    std::size_t w_ns(std::size_t layer) const { return w_ns_.at(layer); }
    const Mlp& mlp_l() const noexcept { return mlp_l_; }
    const Mlp& mlp_gs() const noexcept { return mlp_gs_; }
    const Mlp& classifier() const noexcept { return classifier_; }

private:
    ModelDims dims_;
    ad::ParameterSet params_;
    // cos-gcn
    std::vector<std::size_t> w_n_, w_ns_;
    // cos-gin
    std::vector<Mlp> gin_n_, gin_ns_, fc_n_, fc_ns_;
    std::vector<std::size_t> eps_;
    Mlp mlp_l_, mlp_gs_, classifier_;
};

struct Checkpoint {
    CosModel model;
    std::uint64_t seed = 0;
};

/// Versioned text format: header, backbone tag, dims, seed, cross-scale and
/// every parameter buffer in declaration order (shortest round-trip decimals).
void save_checkpoint(const CosModel& model, std::uint64_t seed, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace cosgraph
