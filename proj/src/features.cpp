#include "cosgraph/features.hpp"

#include "cosgraph/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iterator>
#include <limits>
#include <queue>
#include <string>
#include <thread>

namespace cosgraph {

namespace {

std::size_t count_common(std::span<const NodeId> a, std::span<const NodeId> b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

std::vector<NodeId> intersect(std::span<const NodeId> a, std::span<const NodeId> b) {
    std::vector<NodeId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

class CliqueEnumerator {
public:
    CliqueEnumerator(const Graph& g, std::uint64_t budget) : g_(g), budget_(budget) {
        result_.size.assign(g.num_nodes(), 0);
        result_.count.assign(g.num_nodes(), 0);
    }

    NodeCliques run() {
        std::vector<NodeId> all(g_.num_nodes());
        for (NodeId v = 0; v < all.size(); ++v) all[v] = v;
        std::vector<NodeId> clique;
        expand(clique, std::move(all), {});
        return std::move(result_);
    }

private:
    void expand(std::vector<NodeId>& clique, std::vector<NodeId> cand, std::vector<NodeId> excluded) {
        if (++calls_ > budget_) {
            throw FeatureTimeout("clique enumeration exceeded its budget of " + std::to_string(budget_) +
                                 " recursive steps on a graph with " + std::to_string(g_.num_nodes()) +
                                 " nodes");
        }
        if (cand.empty()) {
            if (excluded.empty() && !clique.empty()) report(clique);
            return;
        }

        // Pivot: node of cand ∪ excluded with the most neighbours in cand,
        // lowest index on ties.
        NodeId pivot = 0;
        std::size_t best = 0;
        bool have_pivot = false;
        auto consider = [&](NodeId u) {
            const std::size_t k = count_common(g_.neighbors(u), cand);
            if (!have_pivot || k > best || (k == best && u < pivot)) {
                pivot = u;
                best = k;
                have_pivot = true;
            }
        };
        for (NodeId u : cand) consider(u);
        for (NodeId u : excluded) consider(u);

        std::vector<NodeId> branch;
        const auto pivot_nbrs = g_.neighbors(pivot);
        std::set_difference(cand.begin(), cand.end(), pivot_nbrs.begin(), pivot_nbrs.end(),
                            std::back_inserter(branch));

        for (NodeId v : branch) {
            const auto nbrs = g_.neighbors(v);
            clique.push_back(v);
            expand(clique, intersect(cand, nbrs), intersect(excluded, nbrs));
            clique.pop_back();
            cand.erase(std::lower_bound(cand.begin(), cand.end(), v));
            excluded.insert(std::lower_bound(excluded.begin(), excluded.end(), v), v);
        }
    }

    void report(const std::vector<NodeId>& clique) {
        const std::size_t k = clique.size();
        for (NodeId v : clique) {
            result_.size[v] = std::max(result_.size[v], k);
            ++result_.count[v];
        }
        result_.max_size = std::max(result_.max_size, k);
    }

    const Graph& g_;
    std::uint64_t budget_;
    std::uint64_t calls_ = 0;
    NodeCliques result_;
};

double efficiency_sum_from(const Graph& g, NodeId source, std::vector<std::size_t>& dist,
                           std::vector<NodeId>& queue) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<std::size_t>::max());
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    double total = 0.0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        for (NodeId w : g.neighbors(u)) {
            if (dist[w] != std::numeric_limits<std::size_t>::max()) continue;
            dist[w] = dist[u] + 1;
            total += 1.0 / static_cast<double>(dist[w]);
            queue.push_back(w);
        }
    }
    return total;
}

} // namespace

std::vector<std::size_t> node_triangles(const Graph& g) {
    std::vector<std::size_t> tri(g.num_nodes(), 0);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const auto nv = g.neighbors(v);
        for (NodeId u : nv) {
            if (u <= v) continue;
            const auto nu = g.neighbors(u);
            // third corner w > u keeps each triangle v < u < w counted once
            auto i = std::upper_bound(nv.begin(), nv.end(), u);
            auto j = std::upper_bound(nu.begin(), nu.end(), u);
            while (i != nv.end() && j != nu.end()) {
                if (*i < *j) {
                    ++i;
                } else if (*j < *i) {
                    ++j;
                } else {
                    ++tri[v];
                    ++tri[u];
                    ++tri[*i];
                    ++i;
                    ++j;
                }
            }
        }
    }
    return tri;
}

std::size_t graph_triangles(const Graph& g) {
    std::size_t total = 0;
    for (std::size_t t : node_triangles(g)) total += t;
    return total / 3;
}

NodeCliques node_cliques(const Graph& g, std::uint64_t budget) {
    return CliqueEnumerator(g, budget).run();
}

std::size_t max_clique_size(const Graph& g, std::uint64_t budget) {
    return node_cliques(g, budget).max_size;
}

std::vector<std::size_t> core_numbers(const Graph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<std::size_t> deg = degree_sequence(g);
    const std::size_t max_deg = n == 0 ? 0 : *std::max_element(deg.begin(), deg.end());

    // bin[d] = start of degree-d block in `order`
    std::vector<std::size_t> bin(max_deg + 2, 0);
    for (std::size_t d : deg) ++bin[d + 1];
    for (std::size_t d = 1; d < bin.size(); ++d) bin[d] += bin[d - 1];
    std::vector<NodeId> order(n);
    std::vector<std::size_t> pos(n);
    {
        std::vector<std::size_t> next(bin.begin(), bin.end() - 1);
        for (NodeId v = 0; v < n; ++v) {
            pos[v] = next[deg[v]]++;
            order[pos[v]] = v;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const NodeId v = order[i];
        for (NodeId u : g.neighbors(v)) {
            if (deg[u] <= deg[v]) continue;
            // move u to the front of its bin, then shrink its degree
            const std::size_t du = deg[u];
            const std::size_t front = bin[du];
            const NodeId w = order[front];
            if (w != u) {
                std::swap(order[pos[u]], order[front]);
                std::swap(pos[u], pos[w]);
            }
            ++bin[du];
            --deg[u];
        }
    }
    return deg;
}

std::vector<double> triangle_clustering(const Graph& g) {
    const auto tri = node_triangles(g);
    std::vector<double> out(g.num_nodes(), 0.0);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const double d = static_cast<double>(degree(g, v));
        if (d >= 2.0) out[v] = 2.0 * static_cast<double>(tri[v]) / (d * (d - 1.0));
    }
    return out;
}

std::vector<double> square_clustering(const Graph& g) {
    std::vector<double> out(g.num_nodes(), 0.0);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const auto nv = g.neighbors(v);
        double squares = 0.0;
        double potential = 0.0;
        for (std::size_t a = 0; a < nv.size(); ++a) {
            for (std::size_t b = a + 1; b < nv.size(); ++b) {
                const NodeId u = nv[a];
                const NodeId w = nv[b];
                // v is always a common neighbour of u and w
                const std::size_t q = count_common(g.neighbors(u), g.neighbors(w)) - 1;
                const std::size_t taken = 1 + q + (g.has_edge(u, w) ? 1 : 0);
                squares += static_cast<double>(q);
                potential += static_cast<double>(q) +
                             static_cast<double>(degree(g, u) - taken) +
                             static_cast<double>(degree(g, w) - taken);
            }
        }
        if (potential > 0.0) out[v] = squares / potential;
    }
    return out;
}

bool has_bridge(const Graph& g) {
    const std::size_t n = g.num_nodes();
    constexpr std::size_t unseen = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> disc(n, unseen);
    std::vector<std::size_t> low(n, 0);
    struct Frame {
        NodeId node;
        NodeId parent;
        std::size_t next;
    };
    std::vector<Frame> stack;
    std::size_t timer = 0;

    for (NodeId root = 0; root < n; ++root) {
        if (disc[root] != unseen) continue;
        disc[root] = low[root] = timer++;
        stack.push_back({root, root, 0});
        while (!stack.empty()) {
            Frame& f = stack.back();
            const auto nbrs = g.neighbors(f.node);
            if (f.next < nbrs.size()) {
                const NodeId w = nbrs[f.next++];
                if (w == f.parent && f.node != root) continue;
                if (disc[w] == unseen) {
                    disc[w] = low[w] = timer++;
                    stack.push_back({w, f.node, 0});
                } else {
                    low[f.node] = std::min(low[f.node], disc[w]);
                }
                continue;
            }
            const Frame done = f;
            stack.pop_back();
            if (!stack.empty()) {
                Frame& parent = stack.back();
                low[parent.node] = std::min(low[parent.node], low[done.node]);
                if (low[done.node] > disc[parent.node]) return true;
            }
        }
    }
    return false;
}

double avg_clustering(const Graph& g) {
    if (g.num_nodes() == 0) return 0.0;
    double total = 0.0;
    for (double c : triangle_clustering(g)) total += c;
    return total / static_cast<double>(g.num_nodes());
}

double avg_global_efficiency(const Graph& g) {
    const std::size_t n = g.num_nodes();
    if (n < 2) return 0.0;
    std::vector<std::size_t> dist(n);
    std::vector<NodeId> queue;
    queue.reserve(n);
    double total = 0.0;
    for (NodeId s = 0; s < n; ++s) total += efficiency_sum_from(g, s, dist, queue);
    return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double avg_local_efficiency(const Graph& g) {
    const std::size_t n = g.num_nodes();
    if (n == 0) return 0.0;
    double total = 0.0;
    for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        if (nbrs.size() < 2) continue;
        total += avg_global_efficiency(induced_subgraph(g, nbrs));
    }
    return total / static_cast<double>(n);
}

AugmentRecord augment(const Graph& g, std::uint64_t budget, AugmentTimings* timings) {
    using clock = std::chrono::steady_clock;
    auto mark = clock::now();
    auto lap = [&](std::size_t family) {
        const auto now = clock::now();
        if (timings) timings->seconds[family] += std::chrono::duration<double>(now - mark).count();
        mark = now;
    };
    const std::size_t n = g.num_nodes();
    const auto tri = node_triangles(g);
    lap(0);
    const auto cliques = node_cliques(g, budget);
    lap(1);
    const auto core = core_numbers(g);
    lap(2);
    const auto tri_clust = triangle_clustering(g);
    lap(3);
    const auto sq_clust = square_clustering(g);
    lap(4);

    AugmentRecord rec;
    rec.node = Matrix(n, kNodeFeatureCount);
    std::size_t tri_sum = 0;
    double clust_sum = 0.0;
    for (NodeId v = 0; v < n; ++v) {
        auto row = rec.node.row(v);
        row[0] = static_cast<double>(degree(g, v));
        row[1] = static_cast<double>(tri[v]);
        row[2] = static_cast<double>(cliques.size[v]);
        row[3] = static_cast<double>(cliques.count[v]);
        row[4] = static_cast<double>(core[v]);
        row[5] = tri_clust[v];
        row[6] = sq_clust[v];
        tri_sum += tri[v];
        clust_sum += tri_clust[v];
    }
    rec.graph[0] = static_cast<double>(tri_sum / 3);
    rec.graph[1] = static_cast<double>(cliques.max_size);
    rec.graph[3] = n == 0 ? 0.0 : clust_sum / static_cast<double>(n);
    lap(3);
    rec.graph[2] = has_bridge(g) ? 1.0 : 0.0;
    lap(5);
    rec.graph[4] = avg_global_efficiency(g);
    lap(6);
    rec.graph[5] = avg_local_efficiency(g);
    lap(7);
    return rec;
}

std::vector<AugmentRecord> augment_all(std::span<const Graph> graphs, unsigned workers, std::uint64_t budget,
                                       AugmentTimings* timings) {
    std::vector<AugmentRecord> out(graphs.size());
    std::vector<AugmentTimings> per_graph(timings ? graphs.size() : 0);
    std::vector<std::exception_ptr> errors(graphs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < graphs.size(); i = next++) {
            try {
                out[i] = augment(graphs[i], budget, timings ? &per_graph[i] : nullptr);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(graphs.size())));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const FeatureTimeout& e) {
            throw FeatureTimeout("graph " + std::to_string(i) + ": " + e.what());
        }
    }
    for (const AugmentTimings& t : per_graph)
        for (std::size_t k = 0; k < t.seconds.size(); ++k) timings->seconds[k] += t.seconds[k];
    return out;
}

Standardizer Standardizer::identity() {
    Standardizer s;
    s.node_scale_.fill(1.0);
    s.graph_scale_.fill(1.0);
    return s;
}

Standardizer Standardizer::fit(std::span<const AugmentRecord> records, std::span<const std::size_t> indices) {
    Standardizer s = identity();
    std::array<double, kNodeFeatureCount> nsum{}, nsq{};
    std::array<double, kGraphFeatureCount> gsum{}, gsq{};
    double node_count = 0.0;
    for (std::size_t idx : indices) {
        const AugmentRecord& rec = records[idx];
        for (std::size_t r = 0; r < rec.node.rows(); ++r) {
            for (std::size_t c = 0; c < kNodeFeatureCount; ++c) nsum[c] += rec.node(r, c);
        }
        node_count += static_cast<double>(rec.node.rows());
        for (std::size_t c = 0; c < kGraphFeatureCount; ++c) gsum[c] += rec.graph[c];
    }
    const double graph_count = static_cast<double>(indices.size());
    if (node_count > 0)
        for (std::size_t c = 0; c < kNodeFeatureCount; ++c) s.node_mean_[c] = nsum[c] / node_count;
    if (graph_count > 0)
        for (std::size_t c = 0; c < kGraphFeatureCount; ++c) s.graph_mean_[c] = gsum[c] / graph_count;

    for (std::size_t idx : indices) {
        const AugmentRecord& rec = records[idx];
        for (std::size_t r = 0; r < rec.node.rows(); ++r) {
            for (std::size_t c = 0; c < kNodeFeatureCount; ++c) {
                const double d = rec.node(r, c) - s.node_mean_[c];
                nsq[c] += d * d;
            }
        }
        for (std::size_t c = 0; c < kGraphFeatureCount; ++c) {
            const double d = rec.graph[c] - s.graph_mean_[c];
            gsq[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < kNodeFeatureCount; ++c) {
        const double sd = node_count > 0 ? std::sqrt(nsq[c] / node_count) : 0.0;
        s.node_scale_[c] = sd > 1e-12 ? sd : 1.0;
    }
    for (std::size_t c = 0; c < kGraphFeatureCount; ++c) {
        const double sd = graph_count > 0 ? std::sqrt(gsq[c] / graph_count) : 0.0;
        s.graph_scale_[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

AugmentRecord Standardizer::apply(const AugmentRecord& rec) const {
    AugmentRecord out = rec;
    for (std::size_t r = 0; r < out.node.rows(); ++r)
        for (std::size_t c = 0; c < kNodeFeatureCount; ++c)
            out.node(r, c) = (rec.node(r, c) - node_mean_[c]) / node_scale_[c];
    for (std::size_t c = 0; c < kGraphFeatureCount; ++c)
        out.graph[c] = (rec.graph[c] - graph_mean_[c]) / graph_scale_[c];
    return out;
}

} // namespace cosgraph
