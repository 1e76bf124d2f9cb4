#pragma once

#include "cosgraph/cos_layers.hpp"
#include "cosgraph/dataset.hpp"
#include "cosgraph/features.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace cosgraph {

struct TrainConfig {
    Backbone backbone = Backbone::cos_gcn;
    std::size_t layers = 3;
    std::size_t hidden = 256;
    double lr = 0.001;
    std::size_t batch = 512;
    std::size_t epochs = 1000;
    Readout readout = Readout::max;
    std::size_t patience = 50;
    std::uint64_t seed = 42;
    CrossScale cross_scale = CrossScale::inverse;
    bool standardize = true;
    std::size_t folds = 10;
    double val_fraction = 0.1;
    unsigned workers = 1;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct FoldResult {
    std::size_t fold = 0;
    std::uint64_t seed = 0;
    std::size_t train_size = 0;
    std::size_t val_size = 0;
    std::size_t test_size = 0;
    double initial_val_loss = 0.0;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0; // 0 = the initial parameters
    double test_accuracy = 0.0;
    std::optional<double> test_auprc; // binary tasks with both classes in the test split
    std::vector<EpochRecord> epochs;
    double train_seconds = 0.0;
    double inference_seconds = 0.0;
};

struct FoldOutput {
    CosModel model;
    FoldResult result;
};

/// Trains one fold: stratified validation slice from fold.train, structural
/// features z-scored on the remaining training graphs, Adam on cross
/// entropy, early stopping on validation loss with the best parameters
/// restored. Throws DivergenceError on a non-finite loss.
FoldOutput train_fold(const Dataset& ds, std::span<const AugmentRecord> features, const Fold& fold,
                      const TrainConfig& cfg, std::size_t fold_index = 0);

struct RunReport {
    std::string dataset;
    std::size_t num_graphs = 0;
    std::size_t num_classes = 0;
    std::size_t attribute_dim = 0;
    std::string feature_source;
    TrainConfig config;
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::optional<double> mean_auprc;
    double augment_seconds = 0.0;
};

/// Receives each fold's restored model; may be called from worker threads.
using ModelSink = std::function<void(std::size_t fold, const CosModel& model)>;

/// Stratified k-fold cross-validation; fold i is seeded with seed + i.
/// Errors are rethrown with the fold index prefixed.
RunReport cross_validate(const Dataset& ds, std::span<const AugmentRecord> features, const TrainConfig& cfg,
                         const ModelSink& on_model = {});

/// Fills mean and population standard deviation from the fold accuracies.
void summarize(RunReport& report);

/// Deterministic content first; wall-clock figures live under "timing".
nlohmann::json to_json(const RunReport& report);

double accuracy(std::span<const int> predictions, std::span<const int> labels);
/// Average precision: sum over distinct score thresholds (descending) of
/// (recall gain) x precision. Labels are 0/1; both must occur.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct BenchRow {
    std::string family;
    std::size_t graphs = 0;
    double total_seconds = 0.0;
    double mean_seconds = 0.0;
    double max_seconds = 0.0;
};

struct BenchTable {
    std::string dataset;
    std::vector<BenchRow> rows; // one per feature family
    double total_seconds = 0.0;
};

BenchTable bench_augment(const Dataset& ds, std::uint64_t budget = kDefaultCliqueBudget);
void write_bench_csv(const BenchTable& table, std::ostream& out);

} // namespace cosgraph
