#pragma once

#include <cstdint>
#include <numbers>

#include "vimu/dataset.hpp"
#include "vimu/rng.hpp"

namespace vimu {

struct AugmentParams {
    double theta = std::numbers::pi / 6.0;  // rotation about each sensor's z axis, radians
    double noise_std = 0.05;
    double bias_halfwidth = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Rotates each (x, y, z) sensor triple: X_rot = X * R_z^T. Throws
/// InvalidArgument if the layout is not triple-grouped.
SegmentMatrix rotate_z(const SegmentMatrix& segment, double theta);

/// X + eps, eps ~ N(0, sigma^2) i.i.d. per element.
SegmentMatrix add_gaussian_noise(const SegmentMatrix& segment, double sigma, Rng& rng);

/// X + 1_T * b with one offset per channel, b_c ~ U(-halfwidth, halfwidth).
SegmentMatrix add_bias(const SegmentMatrix& segment, double halfwidth, Rng& rng);

/// [X; X_rot; X_noise; X_bias] in that block order. Augmented copies get
/// provenance `augmented`, ids "<origin>~rot|~noise|~bias" and keep their
/// origin's label and subject. Each copy draws from a substream keyed by
/// (seed, its id), so the output does not depend on thread count or on which
/// other windows are present.
Dataset augment_dataset(const Dataset& windows, const AugmentParams& params);
Dataset augment_dataset_serial(const Dataset& windows, const AugmentParams& params);

}  // namespace vimu
