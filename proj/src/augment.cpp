#include "vimu/augment.hpp"

#include <cmath>
#include <random>

namespace vimu {

void AugmentParams::validate() const {
    if (!(noise_std >= 0.0)) throw InvalidArgument("augmentation noise std must be >= 0");
    if (!(bias_halfwidth >= 0.0)) throw InvalidArgument("augmentation bias half-width must be >= 0");
    if (!std::isfinite(theta)) throw InvalidArgument("augmentation rotation angle must be finite");
}

SegmentMatrix rotate_z(const SegmentMatrix& segment, double theta) {
    if (!segment.layout || segment.layout->size() != segment.cols || !is_triple_grouped(*segment.layout))
        throw InvalidArgument("rotate_z needs a layout of contiguous (x, y, z) sensor triples");
    const double c = std::cos(theta), s = std::sin(theta);
    SegmentMatrix out = segment;
    for (std::size_t r = 0; r < segment.rows; ++r) {
        for (std::size_t k = 0; k < segment.cols; k += 3) {
            const double x = segment.at(r, k), y = segment.at(r, k + 1);
            out.at(r, k) = c * x - s * y;
            out.at(r, k + 1) = s * x + c * y;
        }
    }
    return out;
}

SegmentMatrix add_gaussian_noise(const SegmentMatrix& segment, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
    SegmentMatrix out = segment;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> eps(0.0, sigma);
    for (auto& v : out.values) v += eps(rng);
    return out;
}

SegmentMatrix add_bias(const SegmentMatrix& segment, double halfwidth, Rng& rng) {
    if (!(halfwidth >= 0.0)) throw InvalidArgument("bias half-width must be >= 0");
    SegmentMatrix out = segment;
    if (halfwidth == 0.0) return out;
    std::uniform_real_distribution<double> u(-halfwidth, halfwidth);
    std::vector<double> b(segment.cols);
    for (auto& v : b) v = u(rng);
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t k = 0; k < out.cols; ++k) out.at(r, k) += b[k];
    return out;
}

namespace {

enum class Kind { rot = 0, noise = 1, bias = 2 };

Window augmented_copy(const Window& w, Kind kind, const AugmentParams& p) {
    static constexpr const char* suffix[] = {"~rot", "~noise", "~bias"};
    Window out;
    out.label = w.label;
    out.subject_id = w.subject_id;
    out.provenance = Provenance::augmented;
    out.id = w.id + suffix[static_cast<int>(kind)];
    out.origin_id = w.id;
    switch (kind) {
        case Kind::rot: out.data = rotate_z(w.data, p.theta); break;
        case Kind::noise: {
            Rng rng = substream(p.seed, out.id);
            out.data = add_gaussian_noise(w.data, p.noise_std, rng);
            break;
        }
        case Kind::bias: {
            Rng rng = substream(p.seed, out.id);
            out.data = add_bias(w.data, p.bias_halfwidth, rng);
            break;
        }
    }
    return out;
}

Dataset prepare(const Dataset& in, const AugmentParams& p) {
    p.validate();
    if (in.empty()) throw InvalidArgument("cannot augment an empty dataset");
    Dataset out;
    out.layout = in.layout;
    out.spec = in.spec;
    out.meta = in.meta;
    out.meta.seeds["augment"] = p.seed;
    out.windows.resize(4 * in.size());
    std::copy(in.windows.begin(), in.windows.end(), out.windows.begin());
    return out;
}

}  // namespace

Dataset augment_dataset_serial(const Dataset& in, const AugmentParams& p) {
    Dataset out = prepare(in, p);
    const std::size_t n = in.size();
    for (int k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < n; ++i)
            out.windows[(static_cast<std::size_t>(k) + 1) * n + i] = augmented_copy(in.windows[i], static_cast<Kind>(k), p);
    return out;
}

Dataset augment_dataset(const Dataset& in, const AugmentParams& p) {
    Dataset out = prepare(in, p);
    const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for collapse(2) schedule(static)
    for (int k = 0; k < 3; ++k)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out.windows[(static_cast<std::size_t>(k) + 1) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
                augmented_copy(in.windows[static_cast<std::size_t>(i)], static_cast<Kind>(k), p);
    return out;
}

}  // namespace vimu
