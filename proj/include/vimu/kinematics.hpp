#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vimu/motion_io.hpp"
#include "vimu/quaternion.hpp"

namespace vimu {

/// Per-frame, per-joint rotations. `global` maps the rest pose into the world;
/// `local` is relative to the parent joint (root: equal to global).
struct RotationTrack {
    std::size_t joint_count = 0;
    std::vector<Quaternion> global;  // frame-major
    std::vector<Quaternion> local;   // frame-major

    std::size_t frames() const { return joint_count == 0 ? 0 : global.size() / joint_count; }
    const Quaternion& global_at(std::size_t f, std::size_t j) const { return global[f * joint_count + j]; }
    const Quaternion& local_at(std::size_t f, std::size_t j) const { return local[f * joint_count + j]; }
    /// Global orientation series of one joint.
    std::vector<Quaternion> joint_series(std::size_t joint) const;
};

/// Joints that define the pelvis frame: lateral axis = left_hip - right_hip,
/// longitudinal axis = spine - root.
struct RootFrameJoints {
    std::size_t left_hip = 0;
    std::size_t right_hip = 0;
    std::size_t spine = 0;
};

/// Looks up hip and spine/neck joints by common naming schemes
/// (left_hip, LeftUpLeg, LHip, spine1, Spine, Chest, Neck, ...).
std::optional<RootFrameJoints> find_root_frame_joints(const Skeleton& skeleton);

struct IkDiagnostic {
    std::size_t frame;
    std::string message;
};

struct IkResult {
    RotationTrack track;
    std::vector<IkDiagnostic> diagnostics;  // degenerate frames, each reused from the previous frame
};

struct IkOptions {
    /// Pelvis frame joints. When absent they are looked up by name; if that
    /// fails the root is solved from its children like any other joint.
    std::optional<RootFrameJoints> root_frame;
    double degenerate_length = 1e-9;  // metres
};

/// Recovers joint rotations from positions. Root: orthonormal hip/spine frame
/// (Gram-Schmidt, lateral axis first). Other joints: shortest arc onto the
/// first child's bone, then a rotation about that bone aligning the next
/// non-collinear child. Single-child joints carry zero twist.
IkResult inverse_kinematics(const Skeleton& skeleton, const MotionSequence& motion, const IkOptions& options = {});

/// Positions from local rotations and per-frame root positions.
MotionSequence forward_kinematics(const Skeleton& skeleton, const RotationTrack& track,
                                  std::span<const Vec3> root_positions, double frame_rate);

/// Fills `global` from `local` by composing down the tree.
void compose_globals(const Skeleton& skeleton, RotationTrack& track);

/// Body-frame angular velocity (rad/s) of an orientation series. Interior
/// samples use the centred pair (k-1, k+1) over two steps, endpoints the
/// one-sided pair. The relative rotation is taken on the short hemisphere.
std::vector<Vec3> angular_velocity(std::span<const Quaternion> orientations, double frame_rate);

/// Frames x joints angular velocity of every joint's global orientation.
std::vector<Vec3> angular_velocity(const RotationTrack& track, double frame_rate);

}  // namespace vimu
