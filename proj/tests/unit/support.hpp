#pragma once

// Shared fixtures for the unit tests.

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "vimu/dataset.hpp"
#include "vimu/kinematics.hpp"
#include "vimu/motion_io.hpp"
#include "vimu/rng.hpp"

namespace vtest {

using namespace vimu;

// Removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "vimu-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline Vec3 random_unit(Rng& rng) {
    std::normal_distribution<double> n;
    Vec3 v;
    do v = Vec3(n(rng), n(rng), n(rng));
    while (v.norm() < 1e-6);
    return v.normalized();
}

inline Quaternion random_rotation(Rng& rng, double max_angle = 3.14159) {
    std::uniform_real_distribution<double> u(0.0, max_angle);
    return quat_from_axis_angle(random_unit(rng), u(rng));
}

// Random tree: every joint hangs off an earlier one, offsets 0.1-0.5 m.
inline Skeleton random_skeleton(Rng& rng, std::size_t joints) {
    Skeleton s;
    std::uniform_real_distribution<double> len(0.1, 0.5);
    for (std::size_t j = 0; j < joints; ++j) {
        s.joint_names.push_back("j" + std::to_string(j));
        if (j == 0) {
            s.parent_index.push_back(kNoParent);
            s.rest_offset.push_back(Vec3(0, 0, 1));
        } else {
            std::uniform_int_distribution<int> parent(0, static_cast<int>(j) - 1);
            s.parent_index.push_back(parent(rng));
            s.rest_offset.push_back(random_unit(rng) * len(rng));
        }
    }
    return s;
}

inline RotationTrack random_track(const Skeleton& s, std::size_t frames, Rng& rng) {
    RotationTrack t;
    t.joint_count = s.size();
    for (std::size_t f = 0; f < frames * s.size(); ++f) t.local.push_back(random_rotation(rng));
    compose_globals(s, t);
    return t;
}

inline LayoutPtr layout_of(std::initializer_list<const char*> names) {
    ChannelLayout l;
    for (auto n : names) l.push_back(ChannelId::parse(n));
    return std::make_shared<const ChannelLayout>(std::move(l));
}

// Constant-valued window; handy for composition and fold tests.
inline Window make_window(const LayoutPtr& layout, std::size_t rows, double value, std::string label,
                          std::string subject, Provenance prov, std::string id) {
    Window w;
    w.data.rows = rows;
    w.data.cols = layout->size();
    w.data.layout = layout;
    w.data.values.assign(rows * layout->size(), value);
    w.label = std::move(label);
    w.subject_id = std::move(subject);
    w.provenance = prov;
    w.id = std::move(id);
    return w;
}

}  // namespace vtest
