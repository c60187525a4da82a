#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vimu/augment.hpp"
#include "vimu/classifier.hpp"
#include "vimu/features.hpp"
#include "vimu/pipeline.hpp"

namespace vimu {

struct FoldSpec {
    enum class Kind { loso, stratified };
    Kind kind = Kind::loso;
    std::size_t k = 5;
    std::uint64_t seed = 0;

    void validate() const;
    std::string name() const;  // "loso" or "stratified-<k>"
};

struct Fold {
    std::string name;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// One fold per subject of the real windows (sorted by subject id). Windows
/// that are not `real` are always in train.
std::vector<Fold> loso_folds(const Dataset& ds);

/// Per class: windows ordered by id, shuffled by substream (seed, class),
/// dealt round-robin to k folds. Non-real windows are always in train.
std::vector<Fold> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed);

std::vector<Fold> make_folds(const Dataset& ds, const FoldSpec& spec);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::string> classes);

    void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
    void add(const ConfusionMatrix& other);
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
    std::uint64_t total() const;
    std::size_t size() const { return k_; }
    const std::vector<std::string>& classes() const { return classes_; }
    std::optional<std::size_t> index_of(const std::string& label) const;

private:
    std::vector<std::string> classes_;
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

struct F1Scores {
    double macro = 0.0;
    /// nullopt for classes with neither true nor predicted samples; those
    /// are left out of the macro average.
    std::vector<std::optional<double>> per_class;
};

/// Per-class F1 = 2PR/(P+R), scored 0 when never predicted or never correct.
F1Scores macro_f1(const ConfusionMatrix& cm);

struct FoldScore {
    std::string fold;
    double macro_f1 = 0.0;
    std::size_t test_windows = 0;
};

struct RepeatResult {
    std::uint64_t seed = 0;
    double macro_f1 = 0.0;  // confusion accumulated over folds
    std::vector<std::optional<double>> per_class;
    std::vector<FoldScore> folds;
    std::size_t test_windows = 0;
    std::size_t train_windows = 0;  // summed over folds
};

struct ReportEntry {
    TrainingConfig config = TrainingConfig::real_only;
    double fraction = 1.0;
    std::vector<RepeatResult> repeats;
    double mean = 0.0;
    double stdev = 0.0;  // population std over repeats
    std::vector<std::optional<double>> per_class_mean;
    std::vector<std::optional<double>> per_class_std;
};

struct EvalReport {
    std::vector<std::string> classes;
    std::string fold_kind;
    std::vector<ReportEntry> entries;
    nlohmann::json metadata = nlohmann::json::object();

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

struct ExperimentParams {
    std::vector<TrainingConfig> configs{std::begin(kAllConfigs), std::end(kAllConfigs)};
    std::vector<double> fractions{1.0, 0.1};
    std::vector<std::uint64_t> seeds{17, 29, 43};
    FoldSpec fold;
    EcdfSpec ecdf;
    TrainParams forest;
    AugmentParams augment;
};

struct ExperimentSources {
    Dataset real;
    Dataset virtual_text;
    Dataset virtual_video;
};

/// Every (config, fraction, seed): folds over the real windows, training set
/// composed from the (optionally subsampled) real train split, forest
/// trained, confusion accumulated over the untouched real test splits.
EvalReport run_experiment_matrix(const ExperimentSources& sources, const ExperimentParams& params);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs);

/// Writes results.csv, per_class.csv, summary.md and report.json to `dir`.
/// Output bytes depend only on the report.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace vimu
