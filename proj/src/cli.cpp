#include "cosgraph/cli.hpp"

#include "cosgraph/cos_layers.hpp"
#include "cosgraph/dataset.hpp"
#include "cosgraph/detail/text.hpp"
#include "cosgraph/error.hpp"
#include "cosgraph/features.hpp"
#include "cosgraph/train.hpp"
#include "cosgraph/wl.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace cosgraph::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string data;
    std::string out;
    std::string features;
    std::string checkpoint_dir;
    bool augment_inline = false;
    std::string backbone = "cos-gcn";
    std::size_t layers = 3;
    std::size_t hidden = 256;
    double lr = 0.001;
    std::size_t batch = 512;
    std::size_t epochs = 1000;
    std::size_t patience = 50;
    std::string readout = "max";
    std::string cross_scale = "inverse";
    std::string standardize = "on";
    std::uint64_t seed = 42;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::string pair = "all";
    std::uint64_t clique_budget = kDefaultCliqueBudget;
    bool quiet = false;
};

struct DataLocation {
    fs::path dir;
    std::string name;
};

DataLocation locate_data(const std::string& flag) {
    const char* env = std::getenv("COSGRAPH_DATA_ROOT");
    fs::path dir;
    if (flag.empty()) {
        if (!env || !*env) throw ConfigError("no dataset given: pass --data or set COSGRAPH_DATA_ROOT");
        dir = env;
    } else {
        dir = flag;
        if (!fs::is_directory(dir) && env && *env && fs::is_directory(fs::path(env) / flag)) dir = fs::path(env) / flag;
    }
    if (!fs::is_directory(dir)) throw IngestionError("dataset directory not found: " + dir.string());
    fs::path norm = dir.lexically_normal();
    std::string name = norm.filename().string();
    if (name.empty()) name = norm.parent_path().filename().string();
    if (name.empty() || name == "." || name == "..") name = fs::weakly_canonical(dir).filename().string();
    return {dir, name};
}

fs::path default_sidecar(const DataLocation& loc) { return loc.dir / (loc.name + "_augmented.txt"); }

TrainConfig train_config(const Options& o, bool patience_given) {
    TrainConfig cfg;
    cfg.backbone = parse_backbone(o.backbone);
    cfg.layers = o.layers;
    cfg.hidden = o.hidden;
    cfg.lr = o.lr;
    cfg.batch = o.batch;
    cfg.epochs = o.epochs;
    cfg.readout = parse_readout(o.readout);
    cfg.patience = patience_given ? o.patience : std::min(o.patience, o.epochs > 0 ? o.epochs - 1 : 0);
    cfg.seed = o.seed;
    cfg.cross_scale = parse_cross_scale(o.cross_scale);
    if (o.standardize != "on" && o.standardize != "off") {
        throw ConfigError("--standardize expects on or off, got '" + o.standardize + "'");
    }
    cfg.standardize = o.standardize == "on";
    cfg.workers = o.workers;
    cfg.validate();
    return cfg;
}

void print_timings(const AugmentTimings& t, std::ostream& out) {
    double total = 0.0;
    for (std::size_t k = 0; k < t.seconds.size(); ++k) {
        out << "  " << AugmentTimings::kFamilies[k] << ": " << detail::format_compact(t.seconds[k]) << " s\n";
        total += t.seconds[k];
    }
    out << "  total: " << detail::format_compact(total) << " s\n";
}

int cmd_augment(const Options& o, std::ostream& out) {
    const DataLocation loc = locate_data(o.data);
    const Dataset ds = load_tudataset(loc.dir, loc.name);
    AugmentTimings timings;
    const auto features = augment_all(ds.graphs, o.workers, o.clique_budget, &timings);
    const fs::path path = o.out.empty() ? default_sidecar(loc) : fs::path(o.out);
    write_augmented(ds, features, path);
    out << "augmented " << ds.graphs.size() << " graphs of " << ds.name << " -> " << path.string() << '\n';
    out << "feature time (summed over graphs):\n";
    print_timings(timings, out);
    return kOk;
}

int cmd_train(const Options& o, bool patience_given, std::ostream& out) {
    const TrainConfig cfg = train_config(o, patience_given);
    const DataLocation loc = locate_data(o.data);
    const Dataset ds = load_tudataset(loc.dir, loc.name);

    std::vector<AugmentRecord> features;
    std::string source;
    double augment_seconds = 0.0;
    if (o.augment_inline) {
        const auto t0 = std::chrono::steady_clock::now();
        features = augment_all(ds.graphs, o.workers, o.clique_budget);
        augment_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        source = "inline";
    } else {
        const fs::path path = o.features.empty() ? default_sidecar(loc) : fs::path(o.features);
        if (!fs::exists(path)) {
            throw IngestionError("augmentation sidecar not found: " + path.string() +
                                 " (run `cosgraph augment` first or pass --augment-inline)");
        }
        features = read_augmented(path);
        if (features.size() != ds.graphs.size()) {
            throw IngestionError(path.string() + " holds " + std::to_string(features.size()) + " graphs, dataset has " +
                                 std::to_string(ds.graphs.size()));
        }
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i].node.rows() != ds.graphs[i].num_nodes()) {
                throw IngestionError(path.string() + ": graph " + std::to_string(i) + " has " +
                                     std::to_string(features[i].node.rows()) + " feature rows for " +
                                     std::to_string(ds.graphs[i].num_nodes()) + " nodes");
            }
        }
        source = "sidecar:" + path.filename().string();
    }

    ModelSink sink;
    std::mutex io_mutex;
    if (!o.checkpoint_dir.empty()) {
        fs::create_directories(o.checkpoint_dir);
        sink = [&](std::size_t fold, const CosModel& model) {
            std::lock_guard lock(io_mutex);
            save_checkpoint(model, cfg.seed + fold, fs::path(o.checkpoint_dir) / ("fold" + std::to_string(fold) + ".ckpt"));
        };
    }
    RunReport report = cross_validate(ds, features, cfg, sink);
    report.feature_source = source;
    report.augment_seconds = augment_seconds;

    const fs::path report_path = o.out.empty() ? fs::path(ds.name + "_report.json") : fs::path(o.out);
    {
        std::ofstream f(report_path, std::ios::binary);
        if (!f) throw IoError("cannot write report " + report_path.string());
        f << to_json(report).dump(2) << '\n';
        if (!f) throw IoError("failed writing report " + report_path.string());
    }
    char line[160];
    std::snprintf(line, sizeof line, "%s %s: accuracy %.4f ± %.4f over %zu folds", ds.name.c_str(),
                  to_string(cfg.backbone).c_str(), report.mean_accuracy, report.std_accuracy, report.folds.size());
    out << line << '\n';
    if (!o.quiet) {
        for (const FoldResult& f : report.folds) {
            std::snprintf(line, sizeof line, "  fold %zu: accuracy %.4f (best epoch %zu of %zu)", f.fold,
                          f.test_accuracy, f.best_epoch, f.epochs.size());
            out << line << '\n';
        }
    }
    out << "report -> " << report_path.string() << '\n';
    return kOk;
}

std::string histogram_string(const ColorMap& cm) {
    std::string s = "{";
    for (std::size_t i = 0; i < cm.histogram.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(cm.histogram[i].first) + ":" + std::to_string(cm.histogram[i].second);
    }
    return s + "}";
}

int cmd_wl_demo(const Options& o, std::ostream& out) {
    const auto pairs = builtin_pairs();
    bool matched = o.pair == "all";
    bool all_ok = true;
    for (const GraphPair& p : pairs) {
        if (o.pair != "all" && o.pair != p.key) continue;
        matched = true;
        const auto [ca, cb] = wl_refine_joint(p.first, p.second);
        const bool wl = wl_distinguishes(p.first, p.second);
        const FeatureVerdict fv = features_distinguish(p.first, p.second);
        const bool ok = !wl && fv.distinguished && fv.witness == p.expected_witness;
        all_ok = all_ok && ok;
        out << "pair " << p.key << ": " << p.first_name << " vs " << p.second_name << '\n';
        out << "  construction: " << p.notes << '\n';
        out << "  stable WL histogram " << p.first_name << ": " << histogram_string(ca) << '\n';
        out << "  stable WL histogram " << p.second_name << ": " << histogram_string(cb) << '\n';
        out << "  refinement rounds: " << ca.iterations << '\n';
        out << "  WL: " << (wl ? "distinguished" : "indistinguishable") << '\n';
        out << "  features: " << (fv.distinguished ? "distinguished" : "indistinguishable") << '\n';
        if (fv.distinguished) out << "  witness: " << fv.witness << '\n';
        out << "  verdict: " << (ok ? "as expected" : "MISMATCH (expected WL indistinguishable, witness " + p.expected_witness + ")") << '\n';
    }
    if (!matched) throw ConfigError("unknown pair '" + o.pair + "' (expected c6-2c3, rook-shrikhande or all)");
    return all_ok ? kOk : kVerdictMismatch;
}

int cmd_bench(const Options& o, std::ostream& out) {
    const DataLocation loc = locate_data(o.data);
    const Dataset ds = load_tudataset(loc.dir, loc.name);
    const BenchTable table = bench_augment(ds, o.clique_budget);
    if (o.out.empty()) {
        write_bench_csv(table, out);
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw IoError("cannot write " + o.out);
        write_bench_csv(table, f);
        out << "bench table -> " << o.out << '\n';
    }
    return kOk;
}

void add_data_options(CLI::App& sub, Options& o) {
    sub.add_option("--data", o.data, "Dataset directory in TU format (fallback: $COSGRAPH_DATA_ROOT)");
    sub.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub.add_option("--clique-budget", o.clique_budget, "Max clique-search steps per graph");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Structure-augmented graph classification toolkit", "cosgraph"};
    app.require_subcommand(1);

    auto* augment = app.add_subcommand("augment", "Compute structural features and write the sidecar");
    add_data_options(*augment, o);
    augment->add_option("--out", o.out, "Sidecar path (default <data>/<NAME>_augmented.txt)");
    augment->add_option("--seed", o.seed, "Seed");

    auto* train = app.add_subcommand("train", "10-fold cross-validation");
    add_data_options(*train, o);
    train->add_option("--out", o.out, "Report path (default <NAME>_report.json)");
    train->add_option("--features", o.features, "Sidecar path (default <data>/<NAME>_augmented.txt)");
    train->add_flag("--augment-inline", o.augment_inline, "Compute features instead of reading the sidecar");
    train->add_option("--checkpoint", o.checkpoint_dir, "Directory for per-fold model checkpoints");
    train->add_option("--backbone", o.backbone, "cos-gcn or cos-gin")->capture_default_str();
    train->add_option("--layers", o.layers, "Message-passing layers")->capture_default_str();
    train->add_option("--hidden", o.hidden, "Hidden width")->capture_default_str();
    train->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    train->add_option("--batch", o.batch, "Graphs per batch")->capture_default_str();
    train->add_option("--epochs", o.epochs, "Max epochs")->capture_default_str();
    auto* patience = train->add_option("--patience", o.patience, "Early-stopping patience (default min(50, epochs-1))");
    train->add_option("--readout", o.readout, "max or mean")->capture_default_str();
    train->add_option("--cross-scale", o.cross_scale, "inverse or paper-literal")->capture_default_str();
    train->add_option("--standardize", o.standardize, "on or off")->capture_default_str();
    train->add_option("--seed", o.seed, "Seed");
    train->add_flag("--quiet", o.quiet, "Only print the summary line");

    auto* wl = app.add_subcommand("wl-demo", "WL-hard pairs separated by structural features");
    wl->add_option("--pair", o.pair, "c6-2c3, rook-shrikhande or all")->capture_default_str();
    wl->add_option("--seed", o.seed, "Seed");

    auto* bench = app.add_subcommand("bench", "Per-family feature extraction timings as CSV");
    add_data_options(*bench, o);
    bench->add_option("--out", o.out, "CSV path (default stdout)");
    bench->add_option("--seed", o.seed, "Seed");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();
        app.parse(std::move(rev));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kConfig;
    }

    try {
        if (augment->parsed()) return cmd_augment(o, out);
        if (train->parsed()) return cmd_train(o, patience->count() > 0, out);
        if (wl->parsed()) return cmd_wl_demo(o, out);
        if (bench->parsed()) return cmd_bench(o, out);
    } catch (const IngestionError& e) {
        err << "ingestion error: " << e.what() << '\n';
        return kIngestion;
    } catch (const FeatureTimeout& e) {
        err << "feature timeout: " << e.what() << '\n';
        return kFeatureTimeout;
    } catch (const DivergenceError& e) {
        err << "divergence at epoch " << e.epoch() << ": " << e.what() << '\n';
        return kDivergence;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

int run(int argc, char** argv) {
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace cosgraph::cli
