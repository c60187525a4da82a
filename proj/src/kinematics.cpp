#include "vimu/kinematics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

namespace vimu {

std::vector<Quaternion> RotationTrack::joint_series(std::size_t joint) const {
    std::vector<Quaternion> out(frames());
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = global_at(f, joint);
    return out;
}

namespace {

std::string normalized_name(std::string_view name) {
    std::string s;
    for (char c : name)
        if (std::isalnum(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return s;
}

std::optional<std::size_t> find_any(const Skeleton& sk, std::initializer_list<const char*> candidates) {
    for (const char* cand : candidates)
        for (std::size_t j = 0; j < sk.size(); ++j)
            if (normalized_name(sk.joint_names[j]) == cand) return j;
    return std::nullopt;
}

// Orthonormal frame with the lateral axis first, longitudinal second.
std::optional<Mat3> pelvis_basis(const Vec3& lateral, const Vec3& longitudinal, double eps) {
    if (lateral.norm() < eps) return std::nullopt;
    const Vec3 l = lateral.normalized();
    const Vec3 u_raw = longitudinal - longitudinal.dot(l) * l;
    if (u_raw.norm() < eps) return std::nullopt;
    const Vec3 u = u_raw.normalized();
    Mat3 b;
    b.col(0) = l;
    b.col(1) = u;
    b.col(2) = l.cross(u);
    return b;
}

struct JointPlan {
    std::vector<std::size_t> children;
    std::optional<std::size_t> primary;
    std::optional<std::size_t> secondary;
};

class IkSolver {
public:
    IkSolver(const Skeleton& sk, const IkOptions& opt) : sk_(sk), opt_(opt), order_(sk.topological_order()) {
        const auto kids = sk.children();
        plans_.resize(sk.size());
        for (std::size_t j = 0; j < sk.size(); ++j) {
            auto& plan = plans_[j];
            plan.children = kids[j];
            if (plan.children.empty()) continue;
            plan.primary = plan.children.front();
            const Vec3 a = sk.rest_offset[*plan.primary].normalized();
            for (std::size_t k = 1; k < plan.children.size(); ++k) {
                const Vec3 b = sk.rest_offset[plan.children[k]].normalized();
                if (a.cross(b).norm() > 1e-6) {
                    plan.secondary = plan.children[k];
                    break;
                }
            }
        }
        root_frame_ = opt.root_frame ? opt.root_frame : find_root_frame_joints(sk);
        if (root_frame_) {
            const auto rest = sk.rest_positions();
            const auto& rf = *root_frame_;
            auto basis = pelvis_basis(rest[rf.left_hip] - rest[rf.right_hip], rest[rf.spine] - rest[sk.root_index], 1e-12);
            if (!basis) throw InvalidArgument("rest pose hip/spine joints do not span a frame");
            rest_basis_t_ = basis->transpose();
        }
    }

    // Returns false with a message on a degenerate frame.
    bool solve_frame(const MotionSequence& m, std::size_t f, std::vector<Quaternion>& global, std::string& why) const {
        const double eps = opt_.degenerate_length;
        for (auto j : order_) {
            const int p = sk_.parent_index[j];
            const Quaternion parent = p == kNoParent ? Quaternion::identity() : global[static_cast<std::size_t>(p)];
            if (p == kNoParent && root_frame_) {
                const auto& rf = *root_frame_;
                auto basis = pelvis_basis(m.at(f, rf.left_hip) - m.at(f, rf.right_hip), m.at(f, rf.spine) - m.at(f, j), eps);
                if (!basis) {
                    why = "coincident hips or spine collinear with the hip axis";
                    return false;
                }
                global[j] = quat_from_matrix(*basis * rest_basis_t_);
                continue;
            }
            const auto& plan = plans_[j];
            if (!plan.primary) {
                global[j] = parent;
                continue;
            }
            const Vec3 origin = m.at(f, j);
            const Vec3 bone = m.at(f, *plan.primary) - origin;
            if (bone.norm() < eps) {
                why = fmt::format("zero-length bone {} -> {}", sk_.joint_names[j], sk_.joint_names[*plan.primary]);
                return false;
            }
            Quaternion g = quat_between(parent.rotate(sk_.rest_offset[*plan.primary]), bone) * parent;
            if (plan.secondary) {
                const Vec3 observed = m.at(f, *plan.secondary) - origin;
                if (observed.norm() < eps) {
                    why = fmt::format("zero-length bone {} -> {}", sk_.joint_names[j], sk_.joint_names[*plan.secondary]);
                    return false;
                }
                const Vec3 axis = bone.normalized();
                const Vec3 current = g.rotate(sk_.rest_offset[*plan.secondary]);
                const Vec3 cp = current - current.dot(axis) * axis;
                const Vec3 op = observed - observed.dot(axis) * axis;
                if (cp.norm() > eps && op.norm() > eps) {
                    const double angle = std::atan2(axis.dot(cp.cross(op)), cp.dot(op));
                    g = quat_from_axis_angle(axis, angle) * g;
                }
            }
            global[j] = g.canonical();
        }
        return true;
    }

private:
    const Skeleton& sk_;
    const IkOptions& opt_;
    std::vector<std::size_t> order_;
    std::vector<JointPlan> plans_;
    std::optional<RootFrameJoints> root_frame_;
    Mat3 rest_basis_t_ = Mat3::Identity();
};

}  // namespace

std::optional<RootFrameJoints> find_root_frame_joints(const Skeleton& sk) {
    auto lh = find_any(sk, {"lefthip", "lhip", "leftupleg", "leftthigh", "lthigh", "leftupperleg"});
    auto rh = find_any(sk, {"righthip", "rhip", "rightupleg", "rightthigh", "rthigh", "rightupperleg"});
    auto sp = find_any(sk, {"spine1", "spine", "spine0", "chest", "spine2", "neck"});
    if (!lh || !rh || !sp || *lh == *rh) return std::nullopt;
    if (*sp == sk.root_index || *lh == sk.root_index || *rh == sk.root_index) return std::nullopt;
    return RootFrameJoints{*lh, *rh, *sp};
}

IkResult inverse_kinematics(const Skeleton& skeleton, const MotionSequence& motion, const IkOptions& options) {
    skeleton.validate();
    motion.validate_against(skeleton);
    const IkSolver solver(skeleton, options);
    const std::size_t nj = skeleton.size();
    const std::size_t nf = motion.frames();

    IkResult result;
    auto& track = result.track;
    track.joint_count = nj;
    track.global.resize(nf * nj);
    track.local.resize(nf * nj);
    std::vector<Quaternion> frame(nj);
    std::string why;
    for (std::size_t f = 0; f < nf; ++f) {
        if (solver.solve_frame(motion, f, frame, why)) {
            std::copy(frame.begin(), frame.end(), track.global.begin() + static_cast<std::ptrdiff_t>(f * nj));
        } else {
            result.diagnostics.push_back({f, why});
            if (f > 0) {
                std::copy_n(track.global.begin() + static_cast<std::ptrdiff_t>((f - 1) * nj), nj,
                            track.global.begin() + static_cast<std::ptrdiff_t>(f * nj));
            }
            // frame 0 falls back to the rest pose (identity rotations)
        }
    }
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t j = 0; j < nj; ++j) {
            const int p = skeleton.parent_index[j];
            const Quaternion& g = track.global[f * nj + j];
            track.local[f * nj + j] =
                p == kNoParent ? g : (track.global[f * nj + static_cast<std::size_t>(p)].inverse() * g).canonical();
        }
    }
    return result;
}

void compose_globals(const Skeleton& skeleton, RotationTrack& track) {
    const std::size_t nj = skeleton.size();
    if (track.joint_count != nj) throw InvalidArgument("rotation track does not match skeleton");
    const auto order = skeleton.topological_order();
    track.global.resize(track.local.size());
    for (std::size_t f = 0; f < track.frames(); ++f) {
        for (auto j : order) {
            const int p = skeleton.parent_index[j];
            track.global[f * nj + j] = p == kNoParent
                                           ? track.local[f * nj + j]
                                           : track.global[f * nj + static_cast<std::size_t>(p)] * track.local[f * nj + j];
        }
    }
}

MotionSequence forward_kinematics(const Skeleton& skeleton, const RotationTrack& track,
                                  std::span<const Vec3> root_positions, double frame_rate) {
    skeleton.validate();
    const std::size_t nj = skeleton.size();
    if (track.joint_count != nj || track.local.size() != track.global.size())
        throw InvalidArgument("rotation track does not match skeleton");
    if (root_positions.size() != track.frames()) throw InvalidArgument("root position count does not match track frames");
    RotationTrack composed = track;
    compose_globals(skeleton, composed);
    const auto order = skeleton.topological_order();
    MotionSequence m;
    m.frame_rate = frame_rate;
    m.joint_count = nj;
    m.positions.resize(track.frames() * nj);
    for (std::size_t f = 0; f < track.frames(); ++f) {
        for (auto j : order) {
            const int p = skeleton.parent_index[j];
            if (p == kNoParent) {
                m.at(f, j) = root_positions[f];
            } else {
                const auto pj = static_cast<std::size_t>(p);
                m.at(f, j) = m.at(f, pj) + composed.global_at(f, pj).rotate(skeleton.rest_offset[j]);
            }
        }
    }
    return m;
}

std::vector<Vec3> angular_velocity(std::span<const Quaternion> q, double frame_rate) {
    const std::size_t n = q.size();
    if (n < 2) throw InvalidArgument("angular velocity needs at least two orientation samples");
    if (!(frame_rate > 0.0)) throw InvalidArgument("frame rate must be positive");
    std::vector<Vec3> w(n);
    w[0] = (q[0].inverse() * q[1]).rotation_vector() * frame_rate;
    w[n - 1] = (q[n - 2].inverse() * q[n - 1]).rotation_vector() * frame_rate;
    for (std::size_t k = 1; k + 1 < n; ++k) w[k] = (q[k - 1].inverse() * q[k + 1]).rotation_vector() * (0.5 * frame_rate);
    return w;
}

std::vector<Vec3> angular_velocity(const RotationTrack& track, double frame_rate) {
    const std::size_t nj = track.joint_count, nf = track.frames();
    std::vector<Vec3> out(nf * nj);
    for (std::size_t j = 0; j < nj; ++j) {
        const auto series = track.joint_series(j);
        const auto w = angular_velocity(series, frame_rate);
        for (std::size_t f = 0; f < nf; ++f) out[f * nj + j] = w[f];
    }
    return out;
}

}  // namespace vimu
