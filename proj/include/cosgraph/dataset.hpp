#pragma once

#include "cosgraph/features.hpp"
#include "cosgraph/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cosgraph {

/// A graph classification corpus. Every graph carries a dense label in
/// [0, num_classes) and, unless attribute_dim == 0, an attribute matrix with
/// attribute_dim columns.
struct Dataset {
    std::string name;
    std::vector<Graph> graphs;
    std::size_t num_classes = 0;
    std::size_t attribute_dim = 0;

    // Provenance of the attribute columns; echoed into run reports.
    std::size_t node_label_columns = 0;
    std::size_t continuous_attribute_columns = 0;
    std::vector<int> original_class_ids; // original_class_ids[dense] = value in the file

    std::vector<int> labels() const;
};

/// Reads `<root>/<name>_A.txt`, `_graph_indicator.txt`, `_graph_labels.txt`
/// and the optional `_node_labels.txt` / `_node_attributes.txt`.
/// Node label values are one-hot encoded over the sorted set of values seen;
/// when continuous attributes exist they follow the one-hot block.
Dataset load_tudataset(const std::filesystem::path& root, const std::string& name);

/// Writes a dataset in the same format. Attributes, when present, go to
/// `_node_attributes.txt` in shortest round-trip decimal form.
void write_tudataset(const Dataset& ds, const std::filesystem::path& root);

/// Sidecar holding one AugmentRecord per graph.
void write_augmented(const Dataset& ds, std::span<const AugmentRecord> features,
                     const std::filesystem::path& out_path);
std::vector<AugmentRecord> read_augmented(const std::filesystem::path& path);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Label-stratified k-fold split. Deterministic in `seed`.
std::vector<Fold> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);
std::vector<Fold> stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed);

/// Stratified hold-out of roughly `fraction` of `indices` (at least one
/// member per class with two or more members). Returns (kept, held_out),
/// both sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_holdout(std::span<const std::size_t> indices, std::span<const int> labels, double fraction,
                   std::uint64_t seed);

} // namespace cosgraph
