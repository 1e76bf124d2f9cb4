#pragma once

#include "cosgraph/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cosgraph {

using NodeId = std::size_t;

/// Unordered node pairs. Self-loops and duplicates are dropped by build_graph.
struct EdgeList {
    std::vector<std::pair<NodeId, NodeId>> pairs;
};

/// Immutable undirected simple graph with sorted adjacency rows, optional
/// dense node attributes and an optional class label.
class Graph {
public:
    Graph() = default;

    std::size_t num_nodes() const noexcept { return row_ptr_.size() - 1; }
    std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }

    /// Sorted neighbour indices of v. Throws GraphError when v is out of range.
    std::span<const NodeId> neighbors(NodeId v) const;
    bool has_edge(NodeId u, NodeId v) const;

    const std::optional<Matrix>& node_attributes() const noexcept { return attributes_; }
    std::optional<int> label() const noexcept { return label_; }

private:
    friend Graph build_graph(const EdgeList&, std::size_t, std::optional<Matrix>, std::optional<int>);

    std::vector<std::size_t> row_ptr_{0};
    std::vector<NodeId> neighbors_;
    std::optional<Matrix> attributes_;
    std::optional<int> label_;
};

/// Normalises the edge list (drops self-loops, collapses duplicates) and
/// builds a Graph. Throws GraphError on an out-of-range endpoint and
/// ShapeError when the attribute row count differs from num_nodes.
Graph build_graph(const EdgeList& edges, std::size_t num_nodes,
                  std::optional<Matrix> attributes = std::nullopt,
                  std::optional<int> label = std::nullopt);

std::size_t degree(const Graph& g, NodeId v);
std::vector<std::size_t> degree_sequence(const Graph& g);

/// Normalised edge set, each pair with u < v, sorted lexicographically.
EdgeList edge_list(const Graph& g);

/// Rows are one-hot encodings of labels over [0, alphabet_size).
Matrix one_hot_labels(std::span<const int> labels, std::size_t alphabet_size);

/// Node input matrix used by the models: the attributes when present,
/// otherwise a single constant column of ones.
Matrix node_input(const Graph& g);

/// Relabels nodes: node v of g becomes node perm[v] of the result.
/// Attribute rows and the label follow.
Graph permute(const Graph& g, std::span<const NodeId> perm);

/// Subgraph induced by `nodes` (sorted, unique); node i of the result is nodes[i].
Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

/// Disjoint union; nodes of b are shifted by a.num_nodes(). Attributes are
/// dropped.
Graph disjoint_union(const Graph& a, const Graph& b);

/// Compressed adjacency with unit weights (no self-loops).
SparseMatrix adjacency_matrix(const Graph& g);

} // namespace cosgraph
