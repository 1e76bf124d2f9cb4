#include "cosgraph/dataset.hpp"

#include "cosgraph/detail/text.hpp"
#include "cosgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace cosgraph {

namespace fs = std::filesystem;
using detail::format_double;

namespace {

constexpr std::string_view kSidecarMagic = "cosgraph-augment";
constexpr int kSidecarVersion = 1;

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open required file " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        lines.push_back(std::move(line));
    }
    return lines;
}

long parse_int_field(std::string_view field, const fs::path& file, std::size_t line_no) {
    long v = 0;
    if (!detail::parse_long(field, v)) {
        throw IngestionError(file.filename().string() + ":" + std::to_string(line_no) +
                             ": expected an integer, got '" + std::string(field) + "'");
    }
    return v;
}

void write_all(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

} // namespace

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(g.label().value_or(-1));
    return out;
}

Dataset load_tudataset(const fs::path& root, const std::string& name) {
    const auto file = [&](std::string_view suffix) { return root / (name + std::string(suffix)); };

    const fs::path indicator_path = file("_graph_indicator.txt");
    const fs::path edges_path = file("_A.txt");
    const fs::path glabel_path = file("_graph_labels.txt");
    for (const auto& p : {edges_path, indicator_path, glabel_path}) {
        if (!fs::exists(p)) throw IngestionError("missing required file " + p.string());
    }

    // node -> (graph, local index)
    const auto indicator = read_lines(indicator_path);
    const std::size_t total_nodes = indicator.size();
    std::vector<std::size_t> node_graph(total_nodes);
    std::vector<std::size_t> node_local(total_nodes);
    std::vector<std::size_t> graph_sizes;
    for (std::size_t i = 0; i < total_nodes; ++i) {
        const long gid = parse_int_field(indicator[i], indicator_path, i + 1);
        if (gid < 1) throw IngestionError(indicator_path.filename().string() + ":" + std::to_string(i + 1) + ": graph id must be >= 1");
        const auto g = static_cast<std::size_t>(gid - 1);
        if (g >= graph_sizes.size()) graph_sizes.resize(g + 1, 0);
        node_graph[i] = g;
        node_local[i] = graph_sizes[g]++;
    }
    const std::size_t num_graphs = graph_sizes.size();

    const auto glabel_lines = read_lines(glabel_path);
    if (glabel_lines.size() != num_graphs) {
        throw IngestionError(glabel_path.filename().string() + " has " + std::to_string(glabel_lines.size()) +
                             " lines but the indicator names " + std::to_string(num_graphs) + " graphs");
    }
    std::vector<long> raw_labels;
    for (std::size_t i = 0; i < glabel_lines.size(); ++i) {
        raw_labels.push_back(parse_int_field(glabel_lines[i], glabel_path, i + 1));
    }
    std::vector<long> classes = raw_labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    std::vector<EdgeList> edges(num_graphs);
    {
        const auto lines = read_lines(edges_path);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto fields = detail::split(lines[i], ',');
            if (fields.size() != 2) {
                throw IngestionError(edges_path.filename().string() + ":" + std::to_string(i + 1) +
                                     ": expected 'row, col'");
            }
            const long a = parse_int_field(fields[0], edges_path, i + 1);
            const long b = parse_int_field(fields[1], edges_path, i + 1);
            if (a < 1 || b < 1 || static_cast<std::size_t>(a) > total_nodes ||
                static_cast<std::size_t>(b) > total_nodes) {
                throw IngestionError(edges_path.filename().string() + ":" + std::to_string(i + 1) +
                                     ": node id out of range");
            }
            const auto u = static_cast<std::size_t>(a - 1);
            const auto v = static_cast<std::size_t>(b - 1);
            if (node_graph[u] != node_graph[v]) {
                throw IngestionError(edges_path.filename().string() + ":" + std::to_string(i + 1) +
                                     ": edge joins two different graphs");
            }
            edges[node_graph[u]].pairs.emplace_back(node_local[u], node_local[v]);
        }
    }

    // Optional node labels -> one-hot over the sorted distinct values.
    std::vector<long> node_labels;
    std::vector<long> alphabet;
    if (const auto p = file("_node_labels.txt"); fs::exists(p)) {
        const auto lines = read_lines(p);
        if (lines.size() != total_nodes) {
            throw IngestionError(p.filename().string() + " has " + std::to_string(lines.size()) +
                                 " lines, expected " + std::to_string(total_nodes));
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            node_labels.push_back(parse_int_field(detail::split(lines[i], ',').front(), p, i + 1));
        }
        alphabet = node_labels;
        std::sort(alphabet.begin(), alphabet.end());
        alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
    }

    std::vector<std::vector<double>> attributes;
    std::size_t attr_cols = 0;
    if (const auto p = file("_node_attributes.txt"); fs::exists(p)) {
        const auto lines = read_lines(p);
        if (lines.size() != total_nodes) {
            throw IngestionError(p.filename().string() + " has " + std::to_string(lines.size()) +
                                 " lines, expected " + std::to_string(total_nodes));
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto fields = detail::split(lines[i], ',');
            if (i == 0) attr_cols = fields.size();
            if (fields.size() != attr_cols) {
                throw IngestionError(p.filename().string() + ":" + std::to_string(i + 1) + ": expected " +
                                     std::to_string(attr_cols) + " values, found " + std::to_string(fields.size()));
            }
            std::vector<double> row(attr_cols);
            for (std::size_t c = 0; c < attr_cols; ++c) {
                if (!detail::parse_double(fields[c], row[c])) {
                    throw IngestionError(p.filename().string() + ":" + std::to_string(i + 1) +
                                         ": cannot parse '" + std::string(fields[c]) + "' as a number");
                }
            }
            attributes.push_back(std::move(row));
        }
    }

    Dataset ds;
    ds.name = name;
    ds.num_classes = classes.size();
    ds.node_label_columns = alphabet.size();
    ds.continuous_attribute_columns = attr_cols;
    ds.attribute_dim = alphabet.size() + attr_cols;
    for (long c : classes) ds.original_class_ids.push_back(static_cast<int>(c));

    std::vector<Matrix> attr_mats;
    if (ds.attribute_dim > 0) {
        for (std::size_t g = 0; g < num_graphs; ++g) attr_mats.emplace_back(graph_sizes[g], ds.attribute_dim);
        for (std::size_t i = 0; i < total_nodes; ++i) {
            auto row = attr_mats[node_graph[i]].row(node_local[i]);
            if (!alphabet.empty()) {
                const auto pos = std::lower_bound(alphabet.begin(), alphabet.end(), node_labels[i]) - alphabet.begin();
                row[static_cast<std::size_t>(pos)] = 1.0;
            }
            for (std::size_t c = 0; c < attr_cols; ++c) row[alphabet.size() + c] = attributes[i][c];
        }
    }

    ds.graphs.reserve(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        const auto cls = std::lower_bound(classes.begin(), classes.end(), raw_labels[g]) - classes.begin();
        std::optional<Matrix> attrs;
        if (ds.attribute_dim > 0) attrs = std::move(attr_mats[g]);
        ds.graphs.push_back(build_graph(edges[g], graph_sizes[g], std::move(attrs), static_cast<int>(cls)));
    }
    return ds;
}

void write_tudataset(const Dataset& ds, const fs::path& root) {
    fs::create_directories(root);
    std::ostringstream a, ind, gl, attrs;
    std::size_t base = 1;
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
        const Graph& graph = ds.graphs[g];
        for (const auto& [u, v] : edge_list(graph).pairs) {
            a << (base + u) << ", " << (base + v) << '\n';
            a << (base + v) << ", " << (base + u) << '\n';
        }
        for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
            ind << (g + 1) << '\n';
            if (graph.node_attributes()) {
                const auto row = graph.node_attributes()->row(v);
                for (std::size_t c = 0; c < row.size(); ++c) attrs << (c ? ", " : "") << format_double(row[c]);
                attrs << '\n';
            }
        }
        const int label = graph.label().value_or(0);
        const int original = static_cast<std::size_t>(label) < ds.original_class_ids.size()
                                 ? ds.original_class_ids[static_cast<std::size_t>(label)]
                                 : label;
        gl << original << '\n';
        base += graph.num_nodes();
    }
    write_all(root / (ds.name + "_A.txt"), a.str());
    write_all(root / (ds.name + "_graph_indicator.txt"), ind.str());
    write_all(root / (ds.name + "_graph_labels.txt"), gl.str());
    if (ds.attribute_dim > 0) write_all(root / (ds.name + "_node_attributes.txt"), attrs.str());
}

void write_augmented(const Dataset& ds, std::span<const AugmentRecord> features, const fs::path& out_path) {
    if (features.size() != ds.graphs.size()) {
        throw ShapeError("write_augmented: " + std::to_string(features.size()) + " records for " +
                         std::to_string(ds.graphs.size()) + " graphs");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].node.rows() != ds.graphs[i].num_nodes() || features[i].node.cols() != kNodeFeatureCount) {
            throw ShapeError("write_augmented: record " + std::to_string(i) + " has shape " +
                             features[i].node.shape_string() + ", graph has " +
                             std::to_string(ds.graphs[i].num_nodes()) + " nodes");
        }
    }

    std::ostringstream out;
    out << kSidecarMagic << ' ' << kSidecarVersion << '\n';
    out << "dataset " << ds.name << '\n';
    out << "graphs " << features.size() << '\n';
    out << "node_columns";
    for (auto n : kNodeFeatureNames) out << ' ' << n;
    out << "\ngraph_columns";
    for (auto n : kGraphFeatureNames) out << ' ' << n;
    out << '\n';
    for (std::size_t i = 0; i < features.size(); ++i) {
        const AugmentRecord& rec = features[i];
        out << "graph " << i << " nodes " << rec.node.rows() << '\n';
        out << "gs";
        for (double v : rec.graph) out << ' ' << format_double(v);
        out << '\n';
        for (std::size_t r = 0; r < rec.node.rows(); ++r) {
            out << "ns";
            for (double v : rec.node.row(r)) out << ' ' << format_double(v);
            out << '\n';
        }
    }
    out << "end\n";
    write_all(out_path, out.str());
}

std::vector<AugmentRecord> read_augmented(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open augmentation file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> std::vector<std::string_view> {
        if (!std::getline(in, line)) throw IngestionError(path.string() + ": unexpected end of file");
        ++line_no;
        return detail::split_ws(line);
    };
    auto fail = [&](const std::string& why) {
        throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    auto number = [&](std::string_view s) {
        double v = 0;
        if (!detail::parse_double(s, v)) fail("bad number '" + std::string(s) + "'");
        return v;
    };

    auto t = next();
    if (t.size() != 2 || t[0] != kSidecarMagic) fail("not an augmentation file");
    if (t[1] != std::to_string(kSidecarVersion)) fail("unsupported version " + std::string(t[1]));
    t = next();
    if (t.empty() || t[0] != "dataset") fail("expected 'dataset'");
    t = next();
    long count = 0;
    if (t.size() != 2 || t[0] != "graphs" || !detail::parse_long(t[1], count) || count < 0) fail("expected 'graphs <n>'");
    t = next();
    if (t.size() != kNodeFeatureCount + 1 || t[0] != "node_columns") fail("bad node_columns header");
    for (std::size_t c = 0; c < kNodeFeatureCount; ++c)
        if (t[c + 1] != kNodeFeatureNames[c]) fail("unexpected node column '" + std::string(t[c + 1]) + "'");
    t = next();
    if (t.size() != kGraphFeatureCount + 1 || t[0] != "graph_columns") fail("bad graph_columns header");
    for (std::size_t c = 0; c < kGraphFeatureCount; ++c)
        if (t[c + 1] != kGraphFeatureNames[c]) fail("unexpected graph column '" + std::string(t[c + 1]) + "'");

    std::vector<AugmentRecord> out(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < out.size(); ++i) {
        t = next();
        long idx = 0, nodes = 0;
        if (t.size() != 4 || t[0] != "graph" || !detail::parse_long(t[1], idx) || t[2] != "nodes" ||
            !detail::parse_long(t[3], nodes) || idx != static_cast<long>(i) || nodes < 0) {
            fail("expected 'graph " + std::to_string(i) + " nodes <n>'");
        }
        t = next();
        if (t.size() != kGraphFeatureCount + 1 || t[0] != "gs") fail("expected 'gs' row");
        for (std::size_t c = 0; c < kGraphFeatureCount; ++c) out[i].graph[c] = number(t[c + 1]);
        out[i].node = Matrix(static_cast<std::size_t>(nodes), kNodeFeatureCount);
        for (std::size_t r = 0; r < static_cast<std::size_t>(nodes); ++r) {
            t = next();
            if (t.size() != kNodeFeatureCount + 1 || t[0] != "ns") fail("expected 'ns' row");
            for (std::size_t c = 0; c < kNodeFeatureCount; ++c) out[i].node(r, c) = number(t[c + 1]);
        }
    }
    t = next();
    if (t.size() != 1 || t[0] != "end") fail("expected 'end'");
    return out;
}

std::vector<Fold> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw StratificationError("k must be at least 2, got " + std::to_string(k));
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, members] : by_class) {
        if (members.size() < k) {
            throw StratificationError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                      " members, fewer than k = " + std::to_string(k));
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<Fold> folds(k);
    std::size_t slot = 0;
    for (auto& [cls, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t idx : members) folds[slot++ % k].test.push_back(idx);
    }
    for (auto& f : folds) {
        std::sort(f.test.begin(), f.test.end());
        std::vector<bool> in_test(labels.size(), false);
        for (std::size_t i : f.test) in_test[i] = true;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (!in_test[i]) f.train.push_back(i);
    }
    return folds;
}

std::vector<Fold> stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    const auto labels = ds.labels();
    return stratified_folds(labels, k, seed);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_holdout(std::span<const std::size_t> indices, std::span<const int> labels, double fraction,
                   std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i : indices) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> kept, held;
    for (auto& [cls, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        std::size_t take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
        if (members.size() >= 2) take = std::clamp<std::size_t>(take, 1, members.size() - 1);
        else take = 0;
        held.insert(held.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        kept.insert(kept.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(kept.begin(), kept.end());
    std::sort(held.begin(), held.end());
    return {std::move(kept), std::move(held)};
}

} // namespace cosgraph
