#pragma once

#include "cosgraph/graph.hpp"
#include "cosgraph/matrix.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cosgraph {

inline constexpr std::size_t kNodeFeatureCount = 7;
inline constexpr std::size_t kGraphFeatureCount = 6;

/// Column order of the node structural feature matrix.
inline constexpr std::array<std::string_view, kNodeFeatureCount> kNodeFeatureNames = {
    "degree",      "triangle_count",      "clique_size",      "clique_count",
    "core_number", "triangle_clustering", "square_clustering",
};

/// Entry order of the graph structural feature vector.
inline constexpr std::array<std::string_view, kGraphFeatureCount> kGraphFeatureNames = {
    "triangle_total",  "max_clique_size",       "has_bridge",
    "avg_clustering",  "avg_global_efficiency", "avg_local_efficiency",
};

/// Default cap on Bron–Kerbosch recursive calls per graph.
inline constexpr std::uint64_t kDefaultCliqueBudget = 100'000'000;

struct NodeCliques {
    std::vector<std::size_t> size;  // largest clique containing the node
    std::vector<std::size_t> count; // maximal cliques containing the node
    std::size_t max_size = 0;
};

std::vector<std::size_t> node_triangles(const Graph& g);
std::size_t graph_triangles(const Graph& g);

/// Maximal cliques via Bron–Kerbosch with greedy pivoting. Throws
/// FeatureTimeout once `budget` recursive calls have been spent.
NodeCliques node_cliques(const Graph& g, std::uint64_t budget = kDefaultCliqueBudget);
std::size_t max_clique_size(const Graph& g, std::uint64_t budget = kDefaultCliqueBudget);

/// Bucket-based minimum-degree peeling, O(n + m).
std::vector<std::size_t> core_numbers(const Graph& g);

std::vector<double> triangle_clustering(const Graph& g);

/// Squares clustering coefficient: for every neighbour pair (u, w) of v,
/// q = common neighbours of u and w other than v, and the open slots are
/// (deg(u) - 1 - q - [u~w]) + (deg(w) - 1 - q - [u~w]). The coefficient is
/// Σq / Σ(q + open), or 0 when the denominator vanishes.
std::vector<double> square_clustering(const Graph& g);

/// Single low-link DFS pass (iterative).
bool has_bridge(const Graph& g);

double avg_clustering(const Graph& g);
double avg_global_efficiency(const Graph& g);
double avg_local_efficiency(const Graph& g);

struct AugmentRecord {
    Matrix node;                                // num_nodes x 7
    std::array<double, kGraphFeatureCount> graph{}; // 6 entries
};

/// Wall-clock seconds per feature family, accumulated across calls.
struct AugmentTimings {
    static constexpr std::array<std::string_view, 8> kFamilies = {
        "triangles",         "cliques", "core_numbers",      "clustering",
        "square_clustering", "bridges", "global_efficiency", "local_efficiency",
    };
    std::array<double, kFamilies.size()> seconds{};
};

AugmentRecord augment(const Graph& g, std::uint64_t budget = kDefaultCliqueBudget, AugmentTimings* timings = nullptr);

/// Augments every graph, fanning out over `workers` threads. Errors are
/// rethrown with the graph index in the message.
std::vector<AugmentRecord> augment_all(std::span<const Graph> graphs, unsigned workers = 1,
                                       std::uint64_t budget = kDefaultCliqueBudget,
                                       AugmentTimings* timings = nullptr);

/// Per-column z-scoring of node and graph structural features. Fit on the
/// training graphs only; zero-variance columns are centred but not scaled.
class Standardizer {
public:
    static Standardizer fit(std::span<const AugmentRecord> records, std::span<const std::size_t> indices);
    static Standardizer identity();

    AugmentRecord apply(const AugmentRecord& rec) const;

    const std::array<double, kNodeFeatureCount>& node_mean() const { return node_mean_; }
    const std::array<double, kNodeFeatureCount>& node_scale() const { return node_scale_; }
    const std::array<double, kGraphFeatureCount>& graph_mean() const { return graph_mean_; }
    const std::array<double, kGraphFeatureCount>& graph_scale() const { return graph_scale_; }

private:
    std::array<double, kNodeFeatureCount> node_mean_{};
    std::array<double, kNodeFeatureCount> node_scale_{};
    std::array<double, kGraphFeatureCount> graph_mean_{};
    std::array<double, kGraphFeatureCount> graph_scale_{};
};

} // namespace cosgraph
