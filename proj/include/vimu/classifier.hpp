#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vimu/features.hpp"

namespace vimu {

struct TrainParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 20;
    std::size_t min_samples_leaf = 2;
    std::optional<std::size_t> features_per_split;  // nullopt: floor(sqrt(feature count))
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainParams from_json(const nlohmann::json& j);
};

/// Array-encoded binary tree. Internal nodes route x[feature] <= threshold to
/// `left`; leaves (feature < 0) hold per-class training counts.
struct DecisionTree {
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::vector<std::uint32_t> counts;
        bool is_leaf() const { return feature < 0; }
        bool operator==(const Node&) const = default;
    };
    std::vector<Node> nodes;

    const Node& leaf_for(std::span<const double> x) const;
    /// argmax of the leaf counts, lowest class index on ties.
    std::size_t vote(std::span<const double> x) const;
    bool operator==(const DecisionTree&) const = default;
};

struct ForestModel {
    std::vector<std::string> classes;  // sorted; index = class id
    std::size_t feature_length = 0;
    TrainParams params;
    std::string data_hash;
    std::vector<DecisionTree> trees;

    nlohmann::json to_json() const;
    static ForestModel from_json(const nlohmann::json& j);
    /// SHA-256 of the canonical JSON dump.
    std::string hash() const;
};

/// 1 - sum (n_i / n)^2. Throws on a zero total.
double gini_impurity(std::span<const double> counts);

/// Bagged Gini trees. Samples are ordered by id before bootstrapping, so the
/// model is independent of input order; tree t draws from substream (seed, t).
/// OpenMP-parallel over trees; train_forest_serial is the reference.
ForestModel train_forest(const std::vector<FeatureVector>& features, const TrainParams& params);
ForestModel train_forest_serial(const std::vector<FeatureVector>& features, const TrainParams& params);

struct Prediction {
    std::size_t class_index = 0;
    std::string label;
    std::vector<double> vote_fraction;  // per class, sums to 1
};

/// Majority vote of the trees; ties go to the lowest class index.
Prediction predict(const ForestModel& model, std::span<const double> x);
std::vector<Prediction> predict_batch(const ForestModel& model, const std::vector<FeatureVector>& xs);
std::vector<Prediction> predict_batch_serial(const ForestModel& model, const std::vector<FeatureVector>& xs);

}  // namespace vimu
