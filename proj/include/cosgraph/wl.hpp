#pragma once

#include "cosgraph/graph.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cosgraph {

/// Result of 1-WL colour refinement.
struct ColorMap {
    std::vector<std::size_t> colors;                             // per node, dense ids
    std::vector<std::pair<std::size_t, std::size_t>> histogram; // (colour, count), sorted by colour
    std::size_t num_colors = 0;
    std::size_t iterations = 0; // refinement rounds run
};

/// Refines until the partition stops splitting or `max_iters` rounds ran.
/// Colours are assigned from a dictionary keyed by (colour, sorted neighbour
/// colours), numbered by first appearance in node order.
ColorMap wl_refine(const Graph& g, std::optional<std::span<const int>> initial = std::nullopt,
                   std::size_t max_iters = 0);

/// Refines both graphs with one shared dictionary so colour ids are comparable.
std::pair<ColorMap, ColorMap> wl_refine_joint(const Graph& a, const Graph& b, std::size_t max_iters = 0);

/// True when the jointly refined stable histograms differ.
bool wl_distinguishes(const Graph& a, const Graph& b);

struct FeatureVerdict {
    bool distinguished = false;
    std::string feature; // first differing feature name
    std::string witness; // "<feature>: <a> vs <b>"
};

/// Compares the graph-level structural features in their declared order, then
/// the lexicographically sorted node feature rows column by column. Values
/// within a relative 1e-9 of each other count as equal.
FeatureVerdict features_distinguish(const Graph& a, const Graph& b);

struct GraphPair {
    std::string key;   // CLI name, e.g. "c6-2c3"
    std::string first_name;
    std::string second_name;
    Graph first;
    Graph second;
    std::string notes;
    std::string expected_witness;
};

Graph cycle_graph(std::size_t n);
Graph complete_graph(std::size_t n);
/// K4 x K4 Cartesian product: 16 nodes, 6-regular.
Graph rook_4x4_graph();
/// Cayley graph on Z4 x Z4 with connection set ±(1,0), ±(0,1), ±(1,1).
Graph shrikhande_graph();

/// C6 vs two disjoint triangles, and Rook's 4x4 vs Shrikhande.
std::vector<GraphPair> builtin_pairs();

} // namespace cosgraph
