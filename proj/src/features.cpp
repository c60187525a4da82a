#include "vimu/features.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "vimu/io_util.hpp"

namespace vimu {

void EcdfSpec::validate() const {
    if (n_components < 1) throw InvalidArgument("ECDF needs at least one component");
}

std::vector<double> inverse_ecdf(std::span<const double> channel, std::size_t m) {
    if (channel.empty()) throw InvalidArgument("inverse ECDF of an empty channel");
    if (m == 0) throw InvalidArgument("inverse ECDF needs m >= 1");
    std::vector<double> sorted(channel.begin(), channel.end());
    std::sort(sorted.begin(), sorted.end());
    const double last = static_cast<double>(sorted.size() - 1);
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        const double pos = p * last;
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double w = pos - static_cast<double>(lo);
        out[i] = w == 0.0 ? sorted[lo] : sorted[lo] + w * (sorted[hi] - sorted[lo]);
    }
    return out;
}

FeatureVector ecdf_features(const Window& window, const EcdfSpec& spec) {
    spec.validate();
    const auto& x = window.data;
    if (x.rows == 0 || x.cols == 0) throw InvalidArgument("cannot featurize an empty window");
    FeatureVector fv;
    fv.values.reserve(x.cols * spec.per_channel());
    std::vector<double> column(x.rows);
    for (std::size_t c = 0; c < x.cols; ++c) {
        for (std::size_t r = 0; r < x.rows; ++r) column[r] = x.at(r, c);
        const auto q = inverse_ecdf(column, spec.n_components);
        fv.values.insert(fv.values.end(), q.begin(), q.end());
        if (spec.include_mean) {
            // Sum in sorted order so the mean is independent of time order.
            std::sort(column.begin(), column.end());
            fv.values.push_back(std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(x.rows));
        }
    }
    fv.label = window.label;
    fv.subject_id = window.subject_id;
    fv.provenance = window.provenance;
    fv.id = window.id;
    return fv;
}

std::vector<std::string> feature_names(std::size_t channels, const EcdfSpec& spec) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 1; i <= spec.n_components; ++i) names.push_back(fmt::format("ch{}_q{}", c, i));
        if (spec.include_mean) names.push_back(fmt::format("ch{}_mean", c));
    }
    return names;
}

std::vector<FeatureVector> featurize_serial(const Dataset& ds, const EcdfSpec& spec) {
    std::vector<FeatureVector> out;
    out.reserve(ds.size());
    for (const auto& w : ds.windows) out.push_back(ecdf_features(w, spec));
    return out;
}

std::vector<FeatureVector> featurize(const Dataset& ds, const EcdfSpec& spec) {
    spec.validate();
    std::vector<FeatureVector> out(ds.size());
    const auto n = static_cast<std::ptrdiff_t>(ds.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = ecdf_features(ds.windows[static_cast<std::size_t>(i)], spec);
    return out;
}

std::string write_features_csv(const std::vector<FeatureVector>& features, std::size_t channels, const EcdfSpec& spec) {
    const auto names = feature_names(channels, spec);
    std::string out;
    for (const auto& n : names) out += n + ",";
    out += "label,subject,provenance,id\n";
    for (const auto& f : features) {
        if (f.values.size() != names.size()) throw InvalidArgument("feature vector length does not match the header");
        for (double v : f.values) out += format_double(v) + ",";
        out += fmt::format("{},{},{},{}\n", f.label, f.subject_id, to_string(f.provenance), f.id);
    }
    return out;
}

std::vector<FeatureVector> read_features_csv(std::string_view text, std::string_view source) {
    const auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]).empty()) throw ParseError(source, 1, "missing header");
    const auto header = split(trim(lines[0]), ',');
    if (header.size() < 5 || header[header.size() - 4] != "label" || header.back() != "id")
        throw ParseError(source, 1, "header must end with label,subject,provenance,id");
    const std::size_t d = header.size() - 4;
    std::vector<FeatureVector> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) throw ParseError(source, i + 1, "row length does not match header");
        FeatureVector f;
        f.values.resize(d);
        for (std::size_t k = 0; k < d; ++k)
            if (!parse_double(cells[k], f.values[k])) throw ParseError(source, i + 1, fmt::format("non-numeric feature '{}'", cells[k]));
        f.label = std::string(cells[d]);
        f.subject_id = std::string(cells[d + 1]);
        f.provenance = provenance_from_string(cells[d + 2]);
        f.id = std::string(cells[d + 3]);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace vimu
