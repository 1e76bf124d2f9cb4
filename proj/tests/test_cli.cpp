#include "cosgraph/cli.hpp"
#include "cosgraph/cos_layers.hpp"
#include "cosgraph/dataset.hpp"
#include "scratch_dir.hpp"
#include "toy_corpus.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace cosgraph;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "cosgraph");
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Writes the triangle corpus under <dir>/TRI in TU format.
fs::path write_corpus(const ScratchDir& dir) {
    Dataset ds = toy::triangle_corpus(10, 5);
    ds.name = "TRI";
    write_tudataset(ds, dir / "TRI");
    return dir / "TRI";
}

const std::vector<std::string> kSmall = {"--epochs", "3", "--hidden", "8", "--layers", "1", "--workers", "1"};

std::vector<std::string> train_args(const fs::path& data, const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> a{"train", "--data", data.string(), "--out", out.string(), "--augment-inline", "--quiet"};
    a.insert(a.end(), kSmall.begin(), kSmall.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

} // namespace

TEST(CliWlDemo, AllPairsCertify) {
    const Result r = run({"wl-demo"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("witness: triangle_total: 0 vs 2"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("witness: max_clique_size: 4 vs 3"), std::string::npos) << r.out;
    std::size_t indistinguishable = 0, pos = 0;
    while ((pos = r.out.find("WL: indistinguishable", pos)) != std::string::npos) {
        ++indistinguishable;
        ++pos;
    }
    EXPECT_EQ(indistinguishable, 2u);
}

TEST(CliWlDemo, SinglePairAndUnknownPair) {
    const Result r = run({"wl-demo", "--pair", "rook-shrikhande"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("max_clique_size: 4 vs 3"), std::string::npos);
    EXPECT_EQ(r.out.find("triangle_total"), std::string::npos);
    EXPECT_EQ(run({"wl-demo", "--pair", "petersen"}).code, cli::kConfig);
}

TEST(CliErrors, ExitCodes) {
    EXPECT_EQ(run({"train", "--data", "/nonexistent/MUTAG"}).code, cli::kIngestion);
    const Result missing = run({"augment", "--data", "/nonexistent/MUTAG"});
    EXPECT_EQ(missing.code, cli::kIngestion);
    EXPECT_NE(missing.err.find("/nonexistent/MUTAG"), std::string::npos);
    EXPECT_EQ(run({"train", "--layers", "0", "--data", "/nonexistent/MUTAG"}).code, cli::kConfig);
    EXPECT_EQ(run({"train", "--backbone", "gat"}).code, cli::kConfig);
    EXPECT_EQ(run({"train", "--epochs", "10", "--patience", "10"}).code, cli::kConfig);
    EXPECT_EQ(run({"train", "--standardize", "maybe"}).code, cli::kConfig);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kConfig);
    EXPECT_EQ(run({"train", "--layers", "three"}).code, cli::kConfig);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliErrors, MissingSidecarIsIngestion) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    const Result r = run({"train", "--data", data.string(), "--out", (dir / "r.json").string()});
    EXPECT_EQ(r.code, cli::kIngestion);
    EXPECT_NE(r.err.find("TRI_augmented.txt"), std::string::npos) << r.err;
}

TEST(CliErrors, DivergenceExitCode) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    const Result r = run({"train", "--data", data.string(), "--augment-inline", "--quiet", "--lr", "1e300", "--epochs",
                          "20", "--patience", "5", "--hidden", "8", "--workers", "1", "--out", (dir / "r.json").string()});
    EXPECT_EQ(r.code, cli::kDivergence) << r.err;
}

TEST(CliErrors, FeatureTimeoutExitCode) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    EXPECT_EQ(run({"augment", "--data", data.string(), "--clique-budget", "2"}).code, cli::kFeatureTimeout);
}

TEST(CliAugment, WritesDeterministicSidecar) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    const Result first = run({"augment", "--data", data.string()});
    ASSERT_EQ(first.code, 0) << first.err;
    EXPECT_NE(first.out.find("augmented 20 graphs of TRI"), std::string::npos) << first.out;
    const std::string a = slurp(data / "TRI_augmented.txt");
    ASSERT_EQ(run({"augment", "--data", data.string(), "--out", (dir / "again.txt").string(), "--workers", "3"}).code, 0);
    EXPECT_EQ(a, slurp(dir / "again.txt"));
    EXPECT_EQ(read_augmented(data / "TRI_augmented.txt").size(), 20u);
}

TEST(CliAugment, DataRootFallback) {
    ScratchDir dir;
    write_corpus(dir);
    ::setenv("COSGRAPH_DATA_ROOT", dir.path().c_str(), 1);
    const Result r = run({"augment", "--data", "TRI", "--out", (dir / "x.txt").string()});
    ::unsetenv("COSGRAPH_DATA_ROOT");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "x.txt"));
}

TEST(CliTrain, ReportEchoesConfigAndIsReproducible) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    const Result a = run(train_args(data, dir / "a.json", {"--backbone", "cos-gin", "--lr", "0.01", "--checkpoint",
                                                           (dir / "ckpt").string()}));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.out.find("TRI cos-gin: accuracy"), std::string::npos) << a.out;
    const Result b = run(train_args(data, dir / "b.json", {"--backbone", "cos-gin", "--lr", "0.01"}));
    ASSERT_EQ(b.code, 0) << b.err;

    auto ja = nlohmann::json::parse(slurp(dir / "a.json"));
    auto jb = nlohmann::json::parse(slurp(dir / "b.json"));
    EXPECT_EQ(ja["config"]["backbone"], "cos-gin");
    EXPECT_EQ(ja["config"]["lr"], 0.01);
    EXPECT_EQ(ja["config"]["patience"], 2);
    EXPECT_EQ(ja["folds"].size(), 10u);
    EXPECT_EQ(ja["features"]["source"], "inline");
    ja.erase("timing");
    jb.erase("timing");
    EXPECT_EQ(ja.dump(), jb.dump());

    for (int f = 0; f < 10; ++f) EXPECT_TRUE(fs::exists(dir / "ckpt" / ("fold" + std::to_string(f) + ".ckpt")));
    const Checkpoint ck = load_checkpoint(dir / "ckpt" / "fold3.ckpt");
    EXPECT_EQ(ck.seed, 45u);
    EXPECT_EQ(ck.model.dims().backbone, Backbone::cos_gin);
}

TEST(CliTrain, ReadsSidecarByDefault) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    ASSERT_EQ(run({"augment", "--data", data.string()}).code, 0);
    std::vector<std::string> args{"train", "--data", data.string(), "--out", (dir / "r.json").string()};
    args.insert(args.end(), kSmall.begin(), kSmall.end());
    const Result r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("fold 9:"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    EXPECT_EQ(j["features"]["source"], "sidecar:TRI_augmented.txt");
}

TEST(CliBench, CsvToFile) {
    ScratchDir dir;
    const fs::path data = write_corpus(dir);
    const Result r = run({"bench", "--data", data.string(), "--out", (dir / "b.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "b.csv");
    EXPECT_EQ(csv.rfind("# cosgraph-bench 1\ndataset,family,graphs,total_seconds,mean_seconds,max_seconds\n", 0), 0u);
    EXPECT_NE(csv.find("TRI,square_clustering,20,"), std::string::npos);
}
