#include "cosgraph/error.hpp"
#include "cosgraph/train.hpp"
#include "cosgraph/wl.hpp"
#include "oracles.hpp"
#include "toy_corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace cosgraph;

namespace {

TrainConfig quick(Backbone bb = Backbone::cos_gcn) {
    TrainConfig cfg;
    cfg.backbone = bb;
    cfg.layers = 2;
    cfg.hidden = 16;
    cfg.epochs = 5;
    cfg.patience = 4;
    cfg.lr = 0.01;
    return cfg;
}

struct Corpus {
    Dataset ds;
    std::vector<AugmentRecord> features;
    std::vector<Fold> folds;
};

Corpus triangles(std::size_t per_class = 30) {
    Corpus c{toy::triangle_corpus(per_class, 17), {}, {}};
    c.features = augment_all(c.ds.graphs);
    c.folds = stratified_folds(c.ds, 10, 42);
    return c;
}

} // namespace

TEST(Metrics, Accuracy) {
    const std::vector<int> p{0, 1, 1, 0}, y{0, 1, 0, 0};
    EXPECT_DOUBLE_EQ(accuracy(p, y), 0.75);
    EXPECT_DOUBLE_EQ(accuracy(y, y), 1.0);
    const std::vector<int> shorter{0};
    EXPECT_THROW(accuracy(shorter, y), MetricError);
    const std::vector<int> empty;
    EXPECT_THROW(accuracy(empty, empty), MetricError);
}

TEST(Metrics, AuprcHandCases) {
    const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    EXPECT_DOUBLE_EQ(auprc(s, y), 1.0);
    // Inverted ranking: positives found at ranks 3 and 4.
    const std::vector<int> inv{0, 0, 1, 1};
    EXPECT_NEAR(auprc(s, inv), 0.5 * (1.0 / 3.0) + 0.5 * 0.5, 1e-15);
    // All scores tied: one threshold, precision = positive rate.
    const std::vector<double> tied(4, 0.5);
    EXPECT_DOUBLE_EQ(auprc(tied, y), 0.5);
    const std::vector<int> one_class{1, 1, 1, 1};
    EXPECT_THROW(auprc(s, one_class), MetricError);
}

TEST(Metrics, AuprcOfRandomScoresApproachesHalf) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> s(200000);
    std::vector<int> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = u(rng);
        y[i] = static_cast<int>(i % 2);
    }
    EXPECT_NEAR(auprc(s, y), 0.5, 0.01);
}

TEST(Config, Validation) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.layers = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.patience = cfg.epochs;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.batch = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.lr = -1;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Summarize, MeanAndPopulationStd) {
    RunReport r;
    for (int i = 0; i < 10; ++i) {
        FoldResult f;
        f.test_accuracy = 1.0;
        r.folds.push_back(f);
    }
    summarize(r);
    EXPECT_DOUBLE_EQ(r.mean_accuracy, 1.0);
    EXPECT_DOUBLE_EQ(r.std_accuracy, 0.0);
    r.folds[0].test_accuracy = 0.0;
    r.folds[1].test_accuracy = 0.0;
    summarize(r);
    EXPECT_DOUBLE_EQ(r.mean_accuracy, 0.8);
    EXPECT_NEAR(r.std_accuracy, 0.4, 1e-15);
}

TEST(TrainFold, SingleEpochRecordsOneEpoch) {
    const Corpus c = triangles();
    TrainConfig cfg = quick();
    cfg.epochs = 1;
    cfg.patience = 0;
    const FoldOutput out = train_fold(c.ds, c.features, c.folds[0], cfg);
    ASSERT_EQ(out.result.epochs.size(), 1u);
    EXPECT_EQ(out.result.epochs[0].epoch, 1u);
    EXPECT_EQ(out.result.test_size, c.folds[0].test.size());
    EXPECT_EQ(out.result.train_size + out.result.val_size, c.folds[0].train.size());
}

TEST(TrainFold, ZeroLearningRateFreezesParameters) {
    const Corpus c = triangles();
    TrainConfig cfg = quick();
    cfg.lr = 0.0;
    const FoldOutput out = train_fold(c.ds, c.features, c.folds[3], cfg, 3);
    ModelDims dims;
    dims.backbone = cfg.backbone;
    dims.layers = cfg.layers;
    dims.hidden = cfg.hidden;
    dims.input_dim = 1;
    dims.num_classes = 2;
    const CosModel init = CosModel::create(dims, cfg.seed + 3);
    ASSERT_EQ(init.params().size(), out.model.params().size());
    for (std::size_t i = 0; i < init.params().size(); ++i) EXPECT_EQ(init.params()[i].value, out.model.params()[i].value);
    EXPECT_EQ(out.result.best_epoch, 0u);
}

TEST(TrainFold, SeparableCorpusIsLearned) {
    const Corpus c = triangles();
    for (Backbone bb : {Backbone::cos_gcn, Backbone::cos_gin}) {
        TrainConfig cfg = quick(bb);
        cfg.hidden = 32;
        cfg.epochs = 200;
        cfg.patience = 50;
        const FoldOutput out = train_fold(c.ds, c.features, c.folds[1], cfg, 1);
        EXPECT_DOUBLE_EQ(out.result.test_accuracy, 1.0) << to_string(bb);
        EXPECT_LE(out.result.best_val_loss, out.result.epochs.front().val_loss);
        EXPECT_LE(out.result.best_val_loss, out.result.initial_val_loss);
        ASSERT_TRUE(out.result.test_auprc.has_value());
    }
}

// Perturbing the structural features of test graphs must not change the
// trained parameters, because standardisation statistics come from the
// training graphs alone.
TEST(TrainFold, TestFeaturesDoNotLeakIntoTraining) {
    const Corpus c = triangles();
    const Fold& fold = c.folds[2];
    auto perturbed = c.features;
    for (std::size_t i : fold.test) {
        for (double& v : perturbed[i].node.values()) v = v * 100 + 7;
        for (double& v : perturbed[i].graph) v = -v - 50;
    }
    for (Backbone bb : {Backbone::cos_gcn, Backbone::cos_gin}) {
        const FoldOutput a = train_fold(c.ds, c.features, fold, quick(bb), 2);
        const FoldOutput b = train_fold(c.ds, perturbed, fold, quick(bb), 2);
        for (std::size_t i = 0; i < a.model.params().size(); ++i)
            ASSERT_EQ(a.model.params()[i].value, b.model.params()[i].value) << a.model.params()[i].name;
        ASSERT_EQ(a.result.best_val_loss, b.result.best_val_loss);
    }
}

TEST(TrainFold, DivergenceIsReported) {
    const Corpus c = triangles(15);
    TrainConfig cfg = quick();
    cfg.lr = 1e300;
    cfg.epochs = 20;
    cfg.patience = 10;
    try {
        train_fold(c.ds, c.features, stratified_folds(c.ds, 5, 1)[0], cfg);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.epoch(), 1);
    }
}

TEST(CrossValidate, DeterministicAndComplete) {
    const Corpus c = triangles(15);
    TrainConfig cfg = quick();
    cfg.folds = 5;
    const RunReport a = cross_validate(c.ds, c.features, cfg);
    cfg.workers = 3;
    std::vector<int> seen(5, 0);
    const RunReport b = cross_validate(c.ds, c.features, cfg, [&](std::size_t fold, const CosModel&) { ++seen[fold]; });
    ASSERT_EQ(a.folds.size(), 5u);
    EXPECT_EQ(seen, std::vector<int>(5, 1));
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a.folds[i].seed, cfg.seed + i);
        EXPECT_EQ(a.folds[i].test_accuracy, b.folds[i].test_accuracy);
        EXPECT_EQ(a.folds[i].best_val_loss, b.folds[i].best_val_loss);
    }
    auto strip = [](nlohmann::json j) {
        j.erase("timing");
        j["config"].erase("workers");
        return j.dump();
    };
    EXPECT_EQ(strip(to_json(a)), strip(to_json(b)));
    const auto j = to_json(a);
    EXPECT_EQ(j["schema"], "cosgraph-run-report/1");
    EXPECT_EQ(j["folds"].size(), 5u);
    EXPECT_TRUE(j.contains("timing"));
}

TEST(CrossValidate, FoldIndexPrefixesErrors) {
    const Corpus c = triangles(15);
    TrainConfig cfg = quick();
    cfg.folds = 5;
    cfg.lr = 1e300;
    cfg.epochs = 20;
    cfg.patience = 10;
    try {
        cross_validate(c.ds, c.features, cfg);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("fold ", 0), 0u) << e.what();
    }
}

TEST(Bench, TimingsAddUp) {
    const Corpus c = triangles(10);
    const BenchTable t = bench_augment(c.ds);
    ASSERT_EQ(t.rows.size(), AugmentTimings::kFamilies.size());
    double sum = 0.0;
    for (const auto& r : t.rows) {
        EXPECT_GE(r.total_seconds, 0.0);
        EXPECT_GE(r.max_seconds, r.mean_seconds);
        EXPECT_EQ(r.graphs, 20u);
        sum += r.total_seconds;
    }
    EXPECT_NEAR(sum, t.total_seconds, 1e-12);
    std::ostringstream csv;
    write_bench_csv(t, csv);
    const std::string text = csv.str();
    EXPECT_EQ(text.rfind("# cosgraph-bench 1\n", 0), 0u);
    EXPECT_NE(text.find("\nTRIANGLES,total,"), std::string::npos);
}

TEST(Bench, EmptyDataset) {
    Dataset empty;
    empty.name = "EMPTY";
    const BenchTable t = bench_augment(empty);
    EXPECT_TRUE(t.rows.empty());
    EXPECT_EQ(t.total_seconds, 0.0);
    std::ostringstream csv;
    EXPECT_NO_THROW(write_bench_csv(t, csv));
}

// Empirical trend: all-pairs efficiency time grows with cycle length. The
// minimum of three runs damps scheduler noise.
TEST(Bench, EfficiencyTimeGrowsWithCycleLength) {
    const std::size_t global = static_cast<std::size_t>(
        std::find(AugmentTimings::kFamilies.begin(), AugmentTimings::kFamilies.end(), "global_efficiency") -
        AugmentTimings::kFamilies.begin());
    std::vector<double> times;
    for (std::size_t n : {100u, 200u, 400u, 800u, 1600u}) {
        Dataset ds;
        ds.name = "CYCLE";
        ds.graphs.push_back(cycle_graph(n));
        double best = 1e9;
        for (int rep = 0; rep < 3; ++rep) best = std::min(best, bench_augment(ds).rows[global].total_seconds);
        times.push_back(best);
    }
    for (std::size_t i = 1; i < times.size(); ++i) EXPECT_GT(times[i], times[i - 1]) << "size step " << i;
}
