#include "cosgraph/train.hpp"

#include "cosgraph/detail/text.hpp"
#include "cosgraph/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <malloc.h>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace cosgraph {

using nlohmann::json;

void TrainConfig::validate() const {
    if (layers < 1) throw ConfigError("layers must be at least 1 (got " + std::to_string(layers) + ")");
    if (hidden < 1) throw ConfigError("hidden width must be at least 1");
    if (batch < 1) throw ConfigError("batch size must be at least 1");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (patience >= epochs) {
        throw ConfigError("patience (" + std::to_string(patience) + ") must be below max epochs (" +
                          std::to_string(epochs) + ")");
    }
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and non-negative");
    if (folds < 2) throw ConfigError("need at least 2 folds");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
    if (workers < 1) throw ConfigError("workers must be at least 1");
}

json to_json(const TrainConfig& cfg) {
    return json{
        {"backbone", to_string(cfg.backbone)},
        {"layers", cfg.layers},
        {"hidden", cfg.hidden},
        {"lr", cfg.lr},
        {"batch", cfg.batch},
        {"epochs", cfg.epochs},
        {"readout", to_string(cfg.readout)},
        {"patience", cfg.patience},
        {"seed", cfg.seed},
        {"cross_scale", to_string(cfg.cross_scale)},
        {"standardize", cfg.standardize},
        {"folds", cfg.folds},
        {"val_fraction", cfg.val_fraction},
    };
}

// --------------------------------------------------------------- metrics

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        throw MetricError("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw MetricError("accuracy of an empty set");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw MetricError("auprc: " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) +
                          " labels");
    }
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw MetricError("auprc: labels must be 0 or 1, got " + std::to_string(y));
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size()) throw MetricError("auprc needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += static_cast<std::size_t>(labels[order[j]]);
            ++j;
        }
        seen = j;
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

// -------------------------------------------------------------- training

namespace {

using clock_type = std::chrono::steady_clock;

// Training allocates and frees the same large buffers every step; keeping
// them on the heap instead of fresh mmaps avoids repeated page faults.
void keep_freed_memory() {
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
    });
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<int> predictions;
    std::vector<double> positive_scores;
};

std::vector<GraphBatch> chunk(std::span<const GraphInput> inputs, std::span<const std::size_t> indices,
                              std::size_t batch) {
    std::vector<GraphBatch> out;
    for (std::size_t i = 0; i < indices.size(); i += batch) {
        const std::size_t end = std::min(indices.size(), i + batch);
        out.push_back(make_batch(inputs, indices.subspan(i, end - i)));
    }
    return out;
}

Evaluation evaluate(const CosModel& model, std::span<const GraphBatch> batches) {
    Evaluation ev;
    std::vector<int> labels;
    double loss_sum = 0.0;
    for (const GraphBatch& b : batches) {
        const ForwardPass fp = model.forward(b);
        const Matrix& logits = fp.logits.value();
        loss_sum += ad::softmax_cross_entropy(fp.logits, b.labels).value()(0, 0) * static_cast<double>(b.labels.size());
        const Matrix probs = ad::softmax(logits);
        for (std::size_t r = 0; r < logits.rows(); ++r) {
            const auto row = logits.row(r);
            ev.predictions.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
            ev.positive_scores.push_back(probs.cols() > 1 ? probs(r, 1) : probs(r, 0));
        }
        labels.insert(labels.end(), b.labels.begin(), b.labels.end());
    }
    if (labels.empty()) return ev;
    ev.loss = loss_sum / static_cast<double>(labels.size());
    ev.accuracy = accuracy(ev.predictions, labels);
    return ev;
}

} // namespace

FoldOutput train_fold(const Dataset& ds, std::span<const AugmentRecord> features, const Fold& fold,
                      const TrainConfig& cfg, std::size_t fold_index) {
    cfg.validate();
    keep_freed_memory();
    if (features.size() != ds.graphs.size()) {
        throw ShapeError("structural features cover " + std::to_string(features.size()) + " of " +
                         std::to_string(ds.graphs.size()) + " graphs");
    }
    const auto t_start = clock_type::now();
    const std::uint64_t seed = cfg.seed + fold_index;
    const std::vector<int> labels = ds.labels();
    auto [train, val] = stratified_holdout(fold.train, labels, cfg.val_fraction, seed);
    if (train.empty()) throw ConfigError("fold " + std::to_string(fold_index) + " has no training graphs");

    const Standardizer scaler = cfg.standardize ? Standardizer::fit(features, train) : Standardizer::identity();
    std::vector<GraphInput> inputs(ds.graphs.size());
    auto prepare = [&](std::span<const std::size_t> idx) {
        for (std::size_t i : idx) inputs[i] = make_input(ds.graphs[i], scaler.apply(features[i]), cfg.cross_scale);
    };
    prepare(train);
    prepare(val);
    prepare(fold.test);

    ModelDims dims;
    dims.backbone = cfg.backbone;
    dims.input_dim = std::max<std::size_t>(ds.attribute_dim, 1);
    dims.layers = cfg.layers;
    dims.hidden = cfg.hidden;
    dims.num_classes = ds.num_classes;
    dims.readout = cfg.readout;
    dims.cross_scale = cfg.cross_scale;
    FoldOutput out{CosModel::create(dims, seed), {}};
    FoldResult& res = out.result;
    res.fold = fold_index;
    res.seed = seed;
    res.train_size = train.size();
    res.val_size = val.size();
    res.test_size = fold.test.size();

    // With an empty validation slice the training loss drives early stopping.
    const std::vector<GraphBatch> val_batches = chunk(inputs, val.empty() ? std::span<const std::size_t>(train) : val, cfg.batch);
    const bool single_batch = train.size() <= cfg.batch;
    std::vector<GraphBatch> fixed_train;
    if (single_batch) fixed_train = chunk(inputs, train, cfg.batch);

    const ad::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    ad::AdamState state;
    std::mt19937_64 shuffle_rng(seed ^ 0x9E3779B97F4A7C15ULL);

    res.initial_val_loss = evaluate(out.model, val_batches).loss;
    res.best_val_loss = res.initial_val_loss;
    res.best_epoch = 0;
    std::vector<ad::Parameter> best = out.model.params().all();
    std::size_t stale = 0;

    std::vector<std::size_t> order = train;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<GraphBatch> shuffled;
        if (!single_batch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            shuffled = chunk(inputs, order, cfg.batch);
        }
        const std::vector<GraphBatch>& batches = single_batch ? fixed_train : shuffled;

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (const GraphBatch& b : batches) {
            ad::Tape tape;
            const ForwardPass fp = out.model.forward(b, &tape);
            const ad::Tensor loss = ad::softmax_cross_entropy(fp.logits, b.labels);
            const double value = loss.value()(0, 0);
            if (!std::isfinite(value)) {
                throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch), static_cast<int>(epoch));
            }
            const ad::Gradients grads = tape.backward(loss);
            std::vector<const Matrix*> g;
            g.reserve(fp.params.size());
            for (const ad::Tensor& p : fp.params) g.push_back(&grads.of(p));
            ad::adam_step(out.model.params(), g, state, adam);
            loss_sum += value * static_cast<double>(b.labels.size());
            seen += b.labels.size();
        }

        const Evaluation ev = evaluate(out.model, val_batches);
        if (!std::isfinite(ev.loss)) {
            throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch), static_cast<int>(epoch));
        }
        res.epochs.push_back({epoch, loss_sum / static_cast<double>(seen), ev.loss, ev.accuracy});
        if (ev.loss < res.best_val_loss) {
            res.best_val_loss = ev.loss;
            res.best_epoch = epoch;
            best = out.model.params().all();
            stale = 0;
        } else if (++stale >= cfg.patience && cfg.patience > 0) {
            break;
        }
    }
    out.model.params().all() = std::move(best);
    res.train_seconds = seconds_since(t_start);

    const auto t_infer = clock_type::now();
    const std::vector<GraphBatch> test_batches = chunk(inputs, fold.test, cfg.batch);
    const Evaluation test = evaluate(out.model, test_batches);
    res.test_accuracy = test.accuracy;
    if (ds.num_classes == 2) {
        std::vector<int> y;
        for (std::size_t i : fold.test) y.push_back(labels[i]);
        const bool both = std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
        if (both) res.test_auprc = auprc(test.positive_scores, y);
    }
    res.inference_seconds = seconds_since(t_infer);
    return out;
}

void summarize(RunReport& report) {
    const auto& folds = report.folds;
    if (folds.empty()) return;
    double sum = 0.0;
    for (const auto& f : folds) sum += f.test_accuracy;
    report.mean_accuracy = sum / static_cast<double>(folds.size());
    double sq = 0.0;
    for (const auto& f : folds) sq += (f.test_accuracy - report.mean_accuracy) * (f.test_accuracy - report.mean_accuracy);
    report.std_accuracy = std::sqrt(sq / static_cast<double>(folds.size()));

    double ap = 0.0;
    std::size_t count = 0;
    for (const auto& f : folds) {
        if (f.test_auprc) {
            ap += *f.test_auprc;
            ++count;
        }
    }
    report.mean_auprc = count ? std::optional<double>(ap / static_cast<double>(count)) : std::nullopt;
}

RunReport cross_validate(const Dataset& ds, std::span<const AugmentRecord> features, const TrainConfig& cfg,
                         const ModelSink& on_model) {
    cfg.validate();
    RunReport report;
    report.dataset = ds.name;
    report.num_graphs = ds.graphs.size();
    report.num_classes = ds.num_classes;
    report.attribute_dim = ds.attribute_dim;
    report.config = cfg;

    const std::vector<Fold> folds = stratified_folds(ds, cfg.folds, cfg.seed);
    report.folds.resize(folds.size());
    std::vector<std::exception_ptr> errors(folds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < folds.size(); i = next++) {
            try {
                FoldOutput fo = train_fold(ds, features, folds[i], cfg, i);
                if (on_model) on_model(i, fo.model);
                report.folds[i] = std::move(fo.result);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        const unsigned n = std::min<unsigned>(cfg.workers, static_cast<unsigned>(folds.size()));
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
        work();
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        const std::string tag = "fold " + std::to_string(i) + ": ";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const DivergenceError& e) {
            throw DivergenceError(tag + e.what(), e.epoch());
        } catch (const ConfigError& e) {
            throw ConfigError(tag + e.what());
        } catch (const FeatureTimeout& e) {
            throw FeatureTimeout(tag + e.what());
        } catch (const Error& e) {
            throw Error(tag + e.what());
        }
    }
    summarize(report);
    return report;
}

json to_json(const RunReport& report) {
    json folds = json::array();
    json fold_timing = json::array();
    for (const FoldResult& f : report.folds) {
        json epochs = json::array();
        for (const EpochRecord& e : f.epochs) {
            epochs.push_back({{"epoch", e.epoch},
                              {"train_loss", e.train_loss},
                              {"val_loss", e.val_loss},
                              {"val_accuracy", e.val_accuracy}});
        }
        folds.push_back({
            {"fold", f.fold},
            {"seed", f.seed},
            {"train_size", f.train_size},
            {"val_size", f.val_size},
            {"test_size", f.test_size},
            {"initial_val_loss", f.initial_val_loss},
            {"best_val_loss", f.best_val_loss},
            {"best_epoch", f.best_epoch},
            {"epochs_run", f.epochs.size()},
            {"test_accuracy", f.test_accuracy},
            {"test_auprc", f.test_auprc ? json(*f.test_auprc) : json(nullptr)},
            {"epochs", std::move(epochs)},
        });
        fold_timing.push_back({{"fold", f.fold}, {"train_seconds", f.train_seconds}, {"inference_seconds", f.inference_seconds}});
    }
    double train_total = 0.0, infer_total = 0.0;
    for (const FoldResult& f : report.folds) {
        train_total += f.train_seconds;
        infer_total += f.inference_seconds;
    }
    const TrainConfig& c = report.config;
    return json{
        {"schema", "cosgraph-run-report/1"},
        {"dataset",
         {{"name", report.dataset},
          {"graphs", report.num_graphs},
          {"classes", report.num_classes},
          {"attribute_dim", report.attribute_dim}}},
        {"config", to_json(c)},
        {"seed", c.seed},
        {"loss", "softmax-cross-entropy"},
        {"optimizer", {{"name", "adam"}, {"lr", c.lr}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
        {"initialization", "glorot-uniform, zero biases, eps 0"},
        {"features", {{"source", report.feature_source}, {"standardize", c.standardize}}},
        {"folds", std::move(folds)},
        {"summary",
         {{"mean_accuracy", report.mean_accuracy},
          {"std_accuracy", report.std_accuracy},
          {"mean_auprc", report.mean_auprc ? json(*report.mean_auprc) : json(nullptr)}}},
        {"timing",
         {{"augment_seconds", report.augment_seconds},
          {"train_seconds", train_total},
          {"inference_seconds", infer_total},
          {"folds", std::move(fold_timing)}}},
    };
}

// ------------------------------------------------------------- benchmark

BenchTable bench_augment(const Dataset& ds, std::uint64_t budget) {
    BenchTable table;
    table.dataset = ds.name;
    if (ds.graphs.empty()) return table;
    constexpr std::size_t F = AugmentTimings::kFamilies.size();
    std::array<double, F> total{}, peak{};
    for (const Graph& g : ds.graphs) {
        AugmentTimings t;
        augment(g, budget, &t);
        for (std::size_t k = 0; k < F; ++k) {
            total[k] += t.seconds[k];
            peak[k] = std::max(peak[k], t.seconds[k]);
        }
    }
    for (std::size_t k = 0; k < F; ++k) {
        table.rows.push_back({std::string(AugmentTimings::kFamilies[k]), ds.graphs.size(), total[k],
                              total[k] / static_cast<double>(ds.graphs.size()), peak[k]});
        table.total_seconds += total[k];
    }
    return table;
}

void write_bench_csv(const BenchTable& table, std::ostream& out) {
    out << "# cosgraph-bench 1\n";
    out << "dataset,family,graphs,total_seconds,mean_seconds,max_seconds\n";
    for (const BenchRow& r : table.rows) {
        out << table.dataset << ',' << r.family << ',' << r.graphs << ',' << detail::format_double(r.total_seconds)
            << ',' << detail::format_double(r.mean_seconds) << ',' << detail::format_double(r.max_seconds) << '\n';
    }
    if (!table.rows.empty()) {
        out << table.dataset << ",total," << table.rows.front().graphs << ','
            << detail::format_double(table.total_seconds) << ",,\n";
    }
}

} // namespace cosgraph
