#include "vimu/dataset.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace vimu {

ChannelId ChannelId::parse(std::string_view name) {
    const auto pos = name.rfind('_');
    if (pos == std::string_view::npos || pos + 2 != name.size() || pos == 0)
        throw InvalidArgument(fmt::format("channel name '{}' is not of the form <sensor>_<axis>", name));
    return {std::string(name.substr(0, pos)), name.back()};
}

bool is_triple_grouped(const ChannelLayout& layout) {
    if (layout.size() % 3 != 0) return false;
    for (std::size_t i = 0; i < layout.size(); i += 3) {
        if (layout[i].axis != 'x' || layout[i + 1].axis != 'y' || layout[i + 2].axis != 'z') return false;
        if (layout[i].sensor != layout[i + 1].sensor || layout[i].sensor != layout[i + 2].sensor) return false;
    }
    return true;
}

ChannelLayout imu_layout(const std::vector<std::string>& joints) {
    ChannelLayout out;
    for (const auto& j : joints)
        for (const char* kind : {".acc", ".gyro"})
            for (char a : {'x', 'y', 'z'}) out.push_back({j + kind, a});
    return out;
}

void Recording::validate() const {
    if (!layout || layout->empty()) throw InvalidArgument("recording has no channel layout");
    if (!(sample_rate > 0.0)) throw InvalidArgument("recording sample rate must be positive");
    if (values.size() % layout->size() != 0) throw InvalidArgument("recording values are not whole samples");
    if (!labels.empty() && labels.size() != samples())
        throw InvalidArgument(fmt::format("recording has {} labels for {} samples", labels.size(), samples()));
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("recording contains non-finite values");
}

std::size_t WindowSpec::window_samples() const { return static_cast<std::size_t>(std::llround(window_seconds * rate)); }

std::size_t WindowSpec::stride_samples() const {
    return static_cast<std::size_t>(std::llround((window_seconds - overlap_seconds) * rate));
}

void WindowSpec::validate() const {
    if (!(rate > 0.0)) throw InvalidArgument("window rate must be positive");
    if (!(window_seconds > 0.0)) throw InvalidArgument("window length must be positive");
    if (!(overlap_seconds >= 0.0) || !(overlap_seconds < window_seconds))
        throw InvalidArgument(fmt::format("overlap {} s must satisfy 0 <= overlap < window {} s", overlap_seconds, window_seconds));
    const double t = window_seconds * rate, s = (window_seconds - overlap_seconds) * rate;
    if (std::abs(t - std::round(t)) > 1e-9 || std::round(t) < 1)
        throw InvalidArgument(fmt::format("window of {} s at {} Hz is not a whole number of samples", window_seconds, rate));
    if (std::abs(s - std::round(s)) > 1e-9 || std::round(s) < 1)
        throw InvalidArgument("window stride is not a whole number of samples");
}

std::vector<std::string> Dataset::labels() const {
    std::set<std::string> s;
    for (const auto& w : windows) s.insert(w.label);
    return {s.begin(), s.end()};
}

void Dataset::validate() const {
    if (!layout) throw InvalidArgument("dataset has no channel layout");
    const std::size_t t = spec.window_samples();
    std::set<std::string_view> ids;
    for (const auto& w : windows) {
        if (w.data.rows != t || w.data.cols != layout->size())
            throw InvalidArgument(fmt::format("window '{}' is {}x{}, expected {}x{}", w.id, w.data.rows, w.data.cols, t, layout->size()));
        if (!ids.insert(w.id).second) throw InvalidArgument(fmt::format("duplicate window id '{}'", w.id));
    }
}

bool Dataset::operator==(const Dataset& o) const {
    const bool same_layout = layout == o.layout || (layout && o.layout && *layout == *o.layout);
    return same_layout && spec == o.spec && windows == o.windows && meta == o.meta;
}

Dataset select(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.layout = ds.layout;
    out.spec = ds.spec;
    out.meta = ds.meta;
    out.windows.reserve(indices.size());
    for (auto i : indices) out.windows.push_back(ds.windows.at(i));
    return out;
}

void append(Dataset& a, const Dataset& b) {
    if (!a.layout) {
        a.layout = b.layout;
        a.spec = b.spec;
    } else if (b.layout && !(*a.layout == *b.layout)) {
        throw InvalidArgument("cannot append datasets with different channel layouts");
    }
    if (!(a.spec == b.spec) && !b.empty()) throw InvalidArgument("cannot append datasets with different window specs");
    a.windows.insert(a.windows.end(), b.windows.begin(), b.windows.end());
    a.meta.sources.insert(a.meta.sources.end(), b.meta.sources.begin(), b.meta.sources.end());
    for (const auto& [k, v] : b.meta.seeds) a.meta.seeds.emplace(k, v);
}

}  // namespace vimu
