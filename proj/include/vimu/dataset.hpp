#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vimu/common.hpp"

namespace vimu {

/// One column of a multichannel stream: a named sensor and an axis letter.
/// Sensor names conventionally look like "right_wrist.acc".
struct ChannelId {
    std::string sensor;
    char axis = 'x';

    std::string name() const { return sensor + "_" + axis; }
    static ChannelId parse(std::string_view name);
    bool operator==(const ChannelId&) const = default;
};

using ChannelLayout = std::vector<ChannelId>;
using LayoutPtr = std::shared_ptr<const ChannelLayout>;

/// True when channels come in contiguous (x, y, z) triples of one sensor.
bool is_triple_grouped(const ChannelLayout& layout);
/// Layout with acc and gyro triples for each named joint, in that order.
ChannelLayout imu_layout(const std::vector<std::string>& joints);

/// A T x C window, row-major.
struct SegmentMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    LayoutPtr layout;

    SegmentMatrix() = default;
    SegmentMatrix(std::size_t r, std::size_t c, LayoutPtr l) : rows(r), cols(c), values(r * c, 0.0), layout(std::move(l)) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    bool operator==(const SegmentMatrix& o) const {
        return rows == o.rows && cols == o.cols && values == o.values &&
               (layout == o.layout || (layout && o.layout && *layout == *o.layout));
    }
};

/// A continuous multichannel stream with per-sample labels.
struct Recording {
    double sample_rate = 0.0;
    LayoutPtr layout;
    std::vector<double> values;          // samples x channels, row-major
    std::vector<std::string> labels;     // per sample; "" marks unlabeled/excluded samples
    std::string subject_id;
    Provenance provenance = Provenance::real;
    std::string source_id;               // stable key used to derive window ids
    std::size_t dropped_rows = 0;

    std::size_t channels() const { return layout ? layout->size() : 0; }
    std::size_t samples() const { return channels() == 0 ? 0 : values.size() / channels(); }
    double at(std::size_t s, std::size_t c) const { return values[s * channels() + c]; }
    void validate() const;
};

struct WindowSpec {
    double window_seconds = 2.0;
    double overlap_seconds = 1.0;
    double rate = 20.0;

    std::size_t window_samples() const;
    std::size_t stride_samples() const;
    /// Throws InvalidArgument unless 0 <= overlap < window and the window and
    /// stride are whole numbers of samples.
    void validate() const;
    bool operator==(const WindowSpec&) const = default;
};

struct Window {
    SegmentMatrix data;
    std::string label;
    std::string subject_id;
    Provenance provenance = Provenance::real;
    std::string id;         // stable and unique within a dataset
    std::string origin_id;  // source window for augmented copies
    bool operator==(const Window&) const = default;
};

struct SourceRef {
    std::string path;
    std::string sha256;
    bool operator==(const SourceRef&) const = default;
};

struct DatasetMeta {
    std::vector<SourceRef> sources;
    std::map<std::string, std::uint64_t> seeds;
    bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
    LayoutPtr layout;
    WindowSpec spec;
    std::vector<Window> windows;
    DatasetMeta meta;

    std::size_t size() const { return windows.size(); }
    bool empty() const { return windows.empty(); }
    /// Sorted distinct labels.
    std::vector<std::string> labels() const;
    void validate() const;
    bool operator==(const Dataset& o) const;
};

/// Copy of `ds` holding only the windows at `indices`, in that order.
Dataset select(const Dataset& ds, const std::vector<std::size_t>& indices);

/// Appends b's windows to a. Layouts and window specs must agree.
void append(Dataset& a, const Dataset& b);

}  // namespace vimu
