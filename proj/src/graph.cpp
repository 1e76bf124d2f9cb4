#include "cosgraph/graph.hpp"

#include "cosgraph/error.hpp"

#include <algorithm>
#include <string>

namespace cosgraph {

Graph build_graph(const EdgeList& edges, std::size_t num_nodes, std::optional<Matrix> attributes,
                  std::optional<int> label) {
    if (attributes && attributes->rows() != num_nodes) {
        throw ShapeError("node attributes have " + std::to_string(attributes->rows()) +
                         " rows, expected " + std::to_string(num_nodes));
    }

    std::vector<std::pair<NodeId, NodeId>> directed;
    directed.reserve(edges.pairs.size() * 2);
    for (const auto& [u, v] : edges.pairs) {
        if (u >= num_nodes || v >= num_nodes) {
            throw GraphError("endpoint out of range: edge (" + std::to_string(u) + ", " +
                             std::to_string(v) + ") with " + std::to_string(num_nodes) + " nodes");
        }
        if (u == v) continue;
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    Graph g;
    g.row_ptr_.assign(num_nodes + 1, 0);
    g.neighbors_.reserve(directed.size());
    for (const auto& [u, v] : directed) {
        ++g.row_ptr_[u + 1];
        g.neighbors_.push_back(v);
    }
    for (std::size_t i = 0; i < num_nodes; ++i) g.row_ptr_[i + 1] += g.row_ptr_[i];
    g.attributes_ = std::move(attributes);
    g.label_ = label;
    return g;
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
    if (v >= num_nodes()) {
        throw GraphError("node index " + std::to_string(v) + " out of range for graph with " +
                         std::to_string(num_nodes()) + " nodes");
    }
    return {neighbors_.data() + row_ptr_[v], row_ptr_[v + 1] - row_ptr_[v]};
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    auto row = neighbors(u);
    return std::binary_search(row.begin(), row.end(), v);
}

std::size_t degree(const Graph& g, NodeId v) { return g.neighbors(v).size(); }

std::vector<std::size_t> degree_sequence(const Graph& g) {
    std::vector<std::size_t> out(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) out[v] = g.neighbors(v).size();
    return out;
}

EdgeList edge_list(const Graph& g) {
    EdgeList out;
    out.pairs.reserve(g.num_edges());
    for (NodeId u = 0; u < g.num_nodes(); ++u)
        for (NodeId v : g.neighbors(u))
            if (u < v) out.pairs.emplace_back(u, v);
    return out;
}

Matrix one_hot_labels(std::span<const int> labels, std::size_t alphabet_size) {
    Matrix out(labels.size(), alphabet_size);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || static_cast<std::size_t>(l) >= alphabet_size) {
            throw EncodingError("label " + std::to_string(l) + " at position " + std::to_string(i) +
                                " outside alphabet of size " + std::to_string(alphabet_size));
        }
        out(i, static_cast<std::size_t>(l)) = 1.0;
    }
    return out;
}

Matrix node_input(const Graph& g) {
    if (g.node_attributes()) return *g.node_attributes();
    return Matrix(g.num_nodes(), 1, 1.0);
}

Graph permute(const Graph& g, std::span<const NodeId> perm) {
    const std::size_t n = g.num_nodes();
    if (perm.size() != n) throw GraphError("permutation length does not match node count");
    EdgeList edges;
    for (const auto& [u, v] : edge_list(g).pairs) edges.pairs.emplace_back(perm[u], perm[v]);
    std::optional<Matrix> attrs;
    if (g.node_attributes()) {
        const Matrix& src = *g.node_attributes();
        Matrix dst(src.rows(), src.cols());
        for (NodeId v = 0; v < n; ++v) std::copy(src.row(v).begin(), src.row(v).end(), dst.row(perm[v]).begin());
        attrs = std::move(dst);
    }
    return build_graph(edges, n, std::move(attrs), g.label());
}

Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
    EdgeList edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (NodeId w : g.neighbors(nodes[i])) {
            auto it = std::lower_bound(nodes.begin(), nodes.end(), w);
            if (it != nodes.end() && *it == w) {
                const auto j = static_cast<std::size_t>(it - nodes.begin());
                if (i < j) edges.pairs.emplace_back(i, j);
            }
        }
    }
    return build_graph(edges, nodes.size());
}

Graph disjoint_union(const Graph& a, const Graph& b) {
    EdgeList edges = edge_list(a);
    const std::size_t shift = a.num_nodes();
    for (const auto& [u, v] : edge_list(b).pairs) edges.pairs.emplace_back(u + shift, v + shift);
    return build_graph(edges, a.num_nodes() + b.num_nodes());
}

SparseMatrix adjacency_matrix(const Graph& g) {
    SparseMatrix m;
    m.rows = m.cols = g.num_nodes();
    m.row_ptr.reserve(g.num_nodes() + 1);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        for (NodeId u : g.neighbors(v)) {
            m.col_idx.push_back(u);
            m.values.push_back(1.0);
        }
        m.row_ptr.push_back(m.col_idx.size());
    }
    return m;
}

} // namespace cosgraph
