#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vimu/augment.hpp"
#include "vimu/dataset.hpp"

namespace vimu {

/// A column picked by header name or by 0-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

struct SensorColumns {
    std::string name;                  // e.g. "right_wrist.acc"
    std::array<ColumnRef, 3> columns;  // x, y, z
    double scale = 1.0;
};

/// How to read one vendor's delimited recording. Loaded from JSON so that no
/// dataset-specific column numbers live in code.
struct AdapterSpec {
    char delimiter = ',';               // ' ' means runs of whitespace
    bool has_header = true;
    std::optional<double> sample_rate;  // Hz; otherwise inferred from timestamps
    std::optional<ColumnRef> timestamp_column;
    double timestamp_scale = 1.0;       // seconds per timestamp unit
    std::optional<ColumnRef> label_column;
    std::optional<std::string> label;   // per-recording label when no column
    std::optional<ColumnRef> subject_column;
    std::optional<std::string> subject;
    std::map<std::string, std::string> label_map;  // raw -> activity; unmapped raw labels become ""
    std::vector<SensorColumns> sensors;
    Provenance provenance = Provenance::real;

    static AdapterSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Parses `text` per `spec`. Rows where any selected cell fails to parse are
/// dropped and counted in Recording::dropped_rows.
Recording ingest_column_mapped(std::string_view text, const AdapterSpec& spec, std::string_view source_id);

/// Writes a recording as "t,label,subject,<channels...>" plus the adapter
/// spec that reads it back.
std::pair<std::string, AdapterSpec> export_recording(const Recording& rec);

/// Windows of spec.window_samples() rows every spec.stride_samples(). Labels
/// are the per-window majority (ties: the label seen first); windows whose
/// majority covers under half the samples, or is "", are dropped.
/// Throws if the recording is not sampled at spec.rate.
Dataset sliding_windows(const Recording& rec, const WindowSpec& spec);

/// Number of window positions before label filtering.
std::size_t window_count(std::size_t samples, std::size_t window, std::size_t stride);

/// Resamples each recording to spec.rate and windows it; concatenates in
/// input order. OpenMP-parallel over recordings; the serial variant is the
/// reference.
Dataset window_recordings(const std::vector<Recording>& recs, const WindowSpec& spec);
Dataset window_recordings_serial(const std::vector<Recording>& recs, const WindowSpec& spec);

enum class TrainingConfig { real_only, real_imugpt, real_imutube, real_imugpt_imutube, real_augmentation };

std::string_view to_string(TrainingConfig c);
std::optional<TrainingConfig> training_config_from_string(std::string_view s);
inline constexpr TrainingConfig kAllConfigs[] = {TrainingConfig::real_only, TrainingConfig::real_imugpt,
                                                 TrainingConfig::real_imutube, TrainingConfig::real_imugpt_imutube,
                                                 TrainingConfig::real_augmentation};

/// Virtual windows restricted to the real dataset's channels (by name, in
/// the real order) and activity labels. Throws if a real channel is missing.
Dataset restrict_to(const Dataset& virtual_ds, const Dataset& real);

/// Training set for one configuration: real windows first, then the
/// restricted virtual windows; Real+Augmentation is augment_dataset(real).
Dataset compose_configuration(const Dataset& real, const Dataset& virtual_text, const Dataset& virtual_video,
                              TrainingConfig cfg, const AugmentParams& augment = {});

/// Per-class random subset of round(fraction * n_class) windows (at least
/// one), chosen from windows ordered by id, returned in input order.
Dataset subsample_fraction(const Dataset& ds, double fraction, std::uint64_t seed);

/// Directory layout: manifest.json + windows/NNNNNN.csv.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace vimu
