#pragma once

#include <span>
#include <string>
#include <vector>

#include "vimu/dataset.hpp"

namespace vimu {

struct EcdfSpec {
    std::size_t n_components = 15;
    bool include_mean = true;

    std::size_t per_channel() const { return n_components + (include_mean ? 1 : 0); }
    void validate() const;
};

struct FeatureVector {
    std::vector<double> values;
    std::string label;
    std::string subject_id;
    Provenance provenance = Provenance::real;
    std::string id;
    bool operator==(const FeatureVector&) const = default;
};

/// Quantile function of the channel at p_i = (i - 0.5) / m, i = 1..m, with
/// linear interpolation between order statistics at position p * (T - 1).
std::vector<double> inverse_ecdf(std::span<const double> channel, std::size_t m);

FeatureVector ecdf_features(const Window& window, const EcdfSpec& spec);

/// Column names "ch<k>_q<i>" / "ch<k>_mean" for `channels` channels.
std::vector<std::string> feature_names(std::size_t channels, const EcdfSpec& spec);

/// One vector per window. OpenMP-parallel; featurize_serial is the reference.
std::vector<FeatureVector> featurize(const Dataset& ds, const EcdfSpec& spec);
std::vector<FeatureVector> featurize_serial(const Dataset& ds, const EcdfSpec& spec);

/// CSV with feature columns followed by label, subject, provenance (and id).
std::string write_features_csv(const std::vector<FeatureVector>& features, std::size_t channels, const EcdfSpec& spec);
std::vector<FeatureVector> read_features_csv(std::string_view text, std::string_view source = "<features>");

}  // namespace vimu
