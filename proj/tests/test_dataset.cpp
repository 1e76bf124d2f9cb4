#include "cosgraph/dataset.hpp"
#include "cosgraph/error.hpp"
#include "cosgraph/features.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace cosgraph;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Two graphs: a triangle labelled 1 and a single edge labelled -1.
void write_toy(const fs::path& dir, const std::string& name = "TOY") {
    write_file(dir / (name + "_A.txt"), "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
    write_file(dir / (name + "_graph_indicator.txt"), "1\n1\n1\n2\n2\n");
    write_file(dir / (name + "_graph_labels.txt"), "1\n-1\n");
    write_file(dir / (name + "_node_labels.txt"), "0\n2\n0\n2\n2\n");
}

Dataset mutag() { return load_tudataset(fs::path(COSGRAPH_TEST_DATA_DIR) / "MUTAG", "MUTAG"); }

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

} // namespace

TEST(LoadTudataset, ToyCorpus) {
    ScratchDir dir;
    write_toy(dir.path());
    const Dataset ds = load_tudataset(dir.path(), "TOY");
    ASSERT_EQ(ds.graphs.size(), 2u);
    EXPECT_EQ(ds.num_classes, 2u);
    EXPECT_EQ(ds.original_class_ids, (std::vector<int>{-1, 1}));
    EXPECT_EQ(ds.labels(), (std::vector<int>{1, 0}));
    EXPECT_EQ(ds.graphs[0].num_edges(), 3u);
    EXPECT_EQ(ds.graphs[1].num_edges(), 1u);
    EXPECT_EQ(ds.attribute_dim, 2u);
    EXPECT_EQ(*ds.graphs[0].node_attributes(), (Matrix{{1, 0}, {0, 1}, {1, 0}}));
}

TEST(LoadTudataset, WriteThenReadRoundTrips) {
    ScratchDir a, b;
    write_toy(a.path());
    const Dataset first = load_tudataset(a.path(), "TOY");
    write_tudataset(first, b.path());
    const Dataset second = load_tudataset(b.path(), "TOY");
    ASSERT_EQ(second.graphs.size(), first.graphs.size());
    EXPECT_EQ(second.labels(), first.labels());
    EXPECT_EQ(second.original_class_ids, first.original_class_ids);
    for (std::size_t i = 0; i < first.graphs.size(); ++i) {
        EXPECT_EQ(edge_list(second.graphs[i]).pairs, edge_list(first.graphs[i]).pairs);
        EXPECT_EQ(*second.graphs[i].node_attributes(), *first.graphs[i].node_attributes());
    }
}

TEST(LoadTudataset, OneDirectionalEdgesAreAccepted) {
    ScratchDir dir;
    write_file(dir / "ONE_A.txt", "1, 2\n2, 3\n");
    write_file(dir / "ONE_graph_indicator.txt", "1\n1\n1\n");
    write_file(dir / "ONE_graph_labels.txt", "0\n");
    const Dataset ds = load_tudataset(dir.path(), "ONE");
    EXPECT_EQ(ds.graphs[0].num_edges(), 2u);
    EXPECT_TRUE(ds.graphs[0].has_edge(1, 0));
    EXPECT_EQ(ds.attribute_dim, 0u);
}

TEST(LoadTudataset, MissingFileIsNamed) {
    ScratchDir dir;
    write_toy(dir.path());
    fs::remove(dir / "TOY_graph_indicator.txt");
    try {
        load_tudataset(dir.path(), "TOY");
        FAIL() << "expected IngestionError";
    } catch (const IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("TOY_graph_indicator.txt"), std::string::npos) << e.what();
    }
}

TEST(LoadTudataset, RaggedAttributeRowReportsLine) {
    ScratchDir dir;
    write_toy(dir.path());
    write_file(dir / "TOY_node_attributes.txt", "0.5, 1\n0.25, 2\n1.5\n0, 0\n1, 1\n");
    try {
        load_tudataset(dir.path(), "TOY");
        FAIL() << "expected IngestionError";
    } catch (const IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("TOY_node_attributes.txt:3"), std::string::npos) << e.what();
    }
}

TEST(LoadTudataset, EdgeAcrossGraphsRejected) {
    ScratchDir dir;
    write_toy(dir.path());
    write_file(dir / "TOY_A.txt", "1, 2\n3, 4\n");
    EXPECT_THROW(load_tudataset(dir.path(), "TOY"), IngestionError);
}

TEST(LoadTudataset, ContinuousAttributesFollowOneHot) {
    ScratchDir dir;
    write_toy(dir.path());
    write_file(dir / "TOY_node_attributes.txt", "0.5, 1\n0.25, 2\n-1.5, 3\n0, 0\n1e-3, 1\n");
    const Dataset ds = load_tudataset(dir.path(), "TOY");
    EXPECT_EQ(ds.attribute_dim, 4u);
    EXPECT_EQ(ds.node_label_columns, 2u);
    EXPECT_EQ(ds.continuous_attribute_columns, 2u);
    EXPECT_EQ(*ds.graphs[1].node_attributes(), (Matrix{{0, 1, 0, 0}, {0, 1, 1e-3, 1}}));
}

// Stand-in for an attributed corpus: random graphs with real-valued node
// attributes survive a write/read cycle exactly.
TEST(LoadTudataset, SyntheticAttributedCorpusRoundTrips) {
    std::mt19937_64 rng(5);
    Dataset ds;
    ds.name = "SYNTH";
    ds.num_classes = 2;
    ds.attribute_dim = 3;
    ds.continuous_attribute_columns = 3;
    ds.original_class_ids = {0, 1};
    for (int i = 0; i < 25; ++i) {
        const std::size_t n = 2 + rng() % 15;
        const Graph shape = oracle::random_graph(n, 0.3, rng);
        ds.graphs.push_back(build_graph(edge_list(shape), n, oracle::random_matrix(n, 3, rng, -50, 50), i % 2));
    }
    ScratchDir dir;
    write_tudataset(ds, dir.path());
    const Dataset back = load_tudataset(dir.path(), "SYNTH");
    ASSERT_EQ(back.graphs.size(), ds.graphs.size());
    EXPECT_EQ(back.attribute_dim, 3u);
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
        EXPECT_EQ(*back.graphs[i].node_attributes(), *ds.graphs[i].node_attributes());
        EXPECT_EQ(back.graphs[i].label(), ds.graphs[i].label());
    }
}

TEST(Mutag, Statistics) {
    const Dataset ds = mutag();
    ASSERT_EQ(ds.graphs.size(), 188u);
    EXPECT_EQ(ds.num_classes, 2u);
    std::size_t nodes = 0;
    for (const auto& g : ds.graphs) nodes += g.num_nodes();
    EXPECT_EQ(nodes, count_lines(fs::path(COSGRAPH_TEST_DATA_DIR) / "MUTAG" / "MUTAG_graph_indicator.txt"));
    EXPECT_EQ(nodes, 3371u);
    EXPECT_NEAR(static_cast<double>(nodes) / 188.0, 17.93, 0.005);
    EXPECT_EQ(ds.attribute_dim, 7u);
}

TEST(Sidecar, RoundTripIsBitwise) {
    const Dataset ds = mutag();
    const auto recs = augment_all(ds.graphs);
    ScratchDir dir;
    write_augmented(ds, recs, dir / "aug.txt");
    const auto back = read_augmented(dir / "aug.txt");
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        ASSERT_EQ(back[i].node.cols(), kNodeFeatureCount);
        ASSERT_EQ(back[i].node.rows(), ds.graphs[i].num_nodes());
        ASSERT_EQ(back[i].node, recs[i].node);
        ASSERT_EQ(back[i].graph, recs[i].graph);
    }
    // Writing the read-back records reproduces the same bytes.
    write_augmented(ds, back, dir / "again.txt");
    EXPECT_EQ(slurp(dir / "aug.txt"), slurp(dir / "again.txt"));
}

TEST(Sidecar, CountMismatchWritesNothing) {
    ScratchDir dir;
    write_toy(dir.path());
    const Dataset ds = load_tudataset(dir.path(), "TOY");
    auto recs = augment_all(ds.graphs);
    recs.pop_back();
    EXPECT_THROW(write_augmented(ds, recs, dir / "aug.txt"), ShapeError);
    EXPECT_FALSE(fs::exists(dir / "aug.txt"));

    auto bad = augment_all(ds.graphs);
    bad[1].node = Matrix(5, kNodeFeatureCount);
    EXPECT_THROW(write_augmented(ds, bad, dir / "aug.txt"), ShapeError);
    EXPECT_FALSE(fs::exists(dir / "aug.txt"));
}

TEST(Sidecar, MalformedAndMissing) {
    ScratchDir dir;
    EXPECT_THROW(read_augmented(dir / "nope.txt"), IoError);
    write_file(dir / "bad.txt", "something else\n");
    EXPECT_THROW(read_augmented(dir / "bad.txt"), IngestionError);
}

TEST(Folds, BalancedTwentyIntoTen) {
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
    const auto folds = stratified_folds(labels, 10, 42);
    ASSERT_EQ(folds.size(), 10u);
    for (const auto& f : folds) {
        ASSERT_EQ(f.test.size(), 2u);
        EXPECT_NE(labels[f.test[0]], labels[f.test[1]]);
        EXPECT_EQ(f.train.size(), 18u);
    }
}

TEST(Folds, DeterministicInSeed) {
    const Dataset ds = mutag();
    const auto a = stratified_folds(ds, 10, 7);
    const auto b = stratified_folds(ds, 10, 7);
    const auto c = stratified_folds(ds, 10, 8);
    bool differs = false;
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(a[i].test, b[i].test);
        EXPECT_EQ(a[i].train, b[i].train);
        differs |= a[i].test != c[i].test;
    }
    EXPECT_TRUE(differs);
}

TEST(Folds, TooSmallClassRejected) {
    std::vector<int> labels(30, 0);
    for (int i = 0; i < 5; ++i) labels[static_cast<std::size_t>(i)] = 1;
    EXPECT_THROW(stratified_folds(labels, 10, 1), StratificationError);
    EXPECT_THROW(stratified_folds(labels, 1, 1), StratificationError);
}

// Property: on random label vectors, test sets partition the indices, each
// fold's train set is the complement, and class shares differ by at most one.
TEST(FoldsProperty, PartitionAndBalance) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t k = 2 + rng() % 9;
        const int classes = 2 + static_cast<int>(rng() % 3);
        std::vector<int> labels;
        for (int c = 0; c < classes; ++c) {
            const std::size_t members = k + rng() % 30;
            labels.insert(labels.end(), members, c);
        }
        std::shuffle(labels.begin(), labels.end(), rng);
        const auto folds = stratified_folds(labels, k, rng());
        std::vector<int> hits(labels.size(), 0);
        for (const auto& f : folds) {
            for (std::size_t i : f.test) ++hits[i];
            std::set<std::size_t> all(f.train.begin(), f.train.end());
            for (std::size_t i : f.test) ASSERT_FALSE(all.count(i));
            all.insert(f.test.begin(), f.test.end());
            ASSERT_EQ(all.size(), labels.size());
        }
        for (int h : hits) ASSERT_EQ(h, 1);
        for (int c = 0; c < classes; ++c) {
            std::size_t lo = SIZE_MAX, hi = 0;
            for (const auto& f : folds) {
                std::size_t n = 0;
                for (std::size_t i : f.test) n += labels[i] == c;
                lo = std::min(lo, n);
                hi = std::max(hi, n);
            }
            ASSERT_LE(hi - lo, 1u);
        }
    }
}

TEST(Holdout, StratifiedAndDisjoint) {
    std::vector<int> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = i < 70 ? 0 : 1;
    std::vector<std::size_t> idx(100);
    for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
    const auto [kept, held] = stratified_holdout(idx, labels, 0.1, 3);
    EXPECT_EQ(held.size(), 10u);
    EXPECT_EQ(kept.size(), 90u);
    std::size_t ones = 0;
    for (std::size_t i : held) ones += labels[i];
    EXPECT_EQ(ones, 3u);
    std::set<std::size_t> s(kept.begin(), kept.end());
    for (std::size_t i : held) EXPECT_FALSE(s.count(i));
}
