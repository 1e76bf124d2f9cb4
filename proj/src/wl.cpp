#include "cosgraph/wl.hpp"

#include "cosgraph/detail/text.hpp"
#include "cosgraph/error.hpp"
#include "cosgraph/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cosgraph {

namespace {

// Refines a list of graphs that share one colour dictionary per round.
std::vector<ColorMap> refine_all(std::span<const Graph* const> graphs,
                                 std::optional<std::span<const int>> initial, std::size_t max_iters) {
    std::vector<std::vector<std::size_t>> colors(graphs.size());
    std::size_t total = 0;
    {
        std::map<int, std::size_t> dict;
        std::size_t offset = 0;
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            const std::size_t n = graphs[gi]->num_nodes();
            colors[gi].resize(n);
            for (std::size_t v = 0; v < n; ++v) {
                const int label = initial ? (*initial)[offset + v] : 0;
                colors[gi][v] = dict.try_emplace(label, dict.size()).first->second;
            }
            offset += n;
            total += n;
        }
    }
    auto count_colors = [&] {
        std::size_t m = 0;
        for (const auto& cs : colors)
            for (std::size_t c : cs) m = std::max(m, c + 1);
        return m;
    };

    std::size_t num = count_colors();
    std::size_t rounds = 0;
    const std::size_t limit = max_iters == 0 ? std::max<std::size_t>(total, 1) : max_iters;
    while (rounds < limit) {
        std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> dict;
        std::vector<std::vector<std::size_t>> next(graphs.size());
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            const Graph& g = *graphs[gi];
            next[gi].resize(g.num_nodes());
            for (std::size_t v = 0; v < g.num_nodes(); ++v) {
                std::vector<std::size_t> nb;
                for (NodeId u : g.neighbors(v)) nb.push_back(colors[gi][u]);
                std::sort(nb.begin(), nb.end());
                next[gi][v] = dict.try_emplace({colors[gi][v], std::move(nb)}, dict.size()).first->second;
            }
        }
        ++rounds;
        colors = std::move(next);
        const std::size_t now = dict.size();
        if (now == num) break;
        num = now;
    }

    std::vector<ColorMap> out(graphs.size());
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        ColorMap& cm = out[gi];
        cm.colors = colors[gi];
        cm.iterations = rounds;
        std::map<std::size_t, std::size_t> hist;
        for (std::size_t c : cm.colors) ++hist[c];
        cm.histogram.assign(hist.begin(), hist.end());
        cm.num_colors = hist.size();
    }
    return out;
}

} // namespace

ColorMap wl_refine(const Graph& g, std::optional<std::span<const int>> initial, std::size_t max_iters) {
    if (initial && initial->size() != g.num_nodes()) {
        throw GraphError("initial labels: " + std::to_string(initial->size()) + " for " +
                         std::to_string(g.num_nodes()) + " nodes");
    }
    const Graph* gs[1] = {&g};
    return refine_all(gs, initial, max_iters).front();
}

std::pair<ColorMap, ColorMap> wl_refine_joint(const Graph& a, const Graph& b, std::size_t max_iters) {
    const Graph* gs[2] = {&a, &b};
    auto maps = refine_all(gs, std::nullopt, max_iters);
    return {std::move(maps[0]), std::move(maps[1])};
}

bool wl_distinguishes(const Graph& a, const Graph& b) {
    if (a.num_nodes() != b.num_nodes()) return true;
    const auto [ca, cb] = wl_refine_joint(a, b);
    return ca.histogram != cb.histogram;
}

FeatureVerdict features_distinguish(const Graph& a, const Graph& b) {
    FeatureVerdict verdict;
    auto differ = [&](std::string_view name, double x, double y) {
        verdict.distinguished = true;
        verdict.feature = std::string(name);
        verdict.witness = verdict.feature + ": " + detail::format_compact(x) + " vs " + detail::format_compact(y);
        return verdict;
    };

    // Averages are summed in node order, so relabelled copies can disagree in
    // the last bits.
    auto same = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}); };

    const AugmentRecord ra = augment(a);
    const AugmentRecord rb = augment(b);
    for (std::size_t k = 0; k < kGraphFeatureCount; ++k)
        if (!same(ra.graph[k], rb.graph[k])) return differ(kGraphFeatureNames[k], ra.graph[k], rb.graph[k]);

    if (a.num_nodes() != b.num_nodes()) {
        return differ("num_nodes", static_cast<double>(a.num_nodes()), static_cast<double>(b.num_nodes()));
    }
    auto sorted_rows = [](const Matrix& m) {
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    const auto na = sorted_rows(ra.node);
    const auto nb = sorted_rows(rb.node);
    for (std::size_t c = 0; c < kNodeFeatureCount; ++c)
        for (std::size_t r = 0; r < na.size(); ++r)
            if (!same(na[r][c], nb[r][c])) return differ(kNodeFeatureNames[c], na[r][c], nb[r][c]);
    return verdict;
}

Graph cycle_graph(std::size_t n) {
    EdgeList e;
    for (std::size_t v = 0; n >= 3 && v < n; ++v) e.pairs.emplace_back(v, (v + 1) % n);
    if (n == 2) e.pairs.emplace_back(0, 1);
    return build_graph(e, n);
}

Graph complete_graph(std::size_t n) {
    EdgeList e;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) e.pairs.emplace_back(u, v);
    return build_graph(e, n);
}

Graph rook_4x4_graph() {
    EdgeList e;
    auto id = [](std::size_t r, std::size_t c) { return 4 * r + c; };
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t k = 0; k < 4; ++k) {
                if (k > c) e.pairs.emplace_back(id(r, c), id(r, k));
                if (k > r) e.pairs.emplace_back(id(r, c), id(k, c));
            }
    return build_graph(e, 16);
}

Graph shrikhande_graph() {
    EdgeList e;
    const int steps[3][2] = {{1, 0}, {0, 1}, {1, 1}};
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y)
            for (const auto& s : steps) {
                const int nx = (x + s[0]) % 4;
                const int ny = (y + s[1]) % 4;
                e.pairs.emplace_back(static_cast<std::size_t>(4 * x + y), static_cast<std::size_t>(4 * nx + ny));
            }
    return build_graph(e, 16);
}

std::vector<GraphPair> builtin_pairs() {
    std::vector<GraphPair> pairs;
    pairs.push_back({"c6-2c3", "C6", "2xC3", cycle_graph(6), disjoint_union(complete_graph(3), complete_graph(3)),
                     "both 2-regular on 6 nodes; every node sees the same colour multiset in every round",
                     "triangle_total: 0 vs 2"});
    pairs.push_back({"rook-shrikhande", "Rook's 4x4", "Shrikhande", rook_4x4_graph(), shrikhande_graph(),
                     "both srg(16,6,2,2); rook = K4 x K4, shrikhande = Cayley graph on Z4 x Z4 with +-(1,0), "
                     "+-(0,1), +-(1,1)",
                     "max_clique_size: 4 vs 3"});
    return pairs;
}

} // namespace cosgraph
