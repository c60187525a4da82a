#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vimu/common.hpp"
#include "vimu/quaternion.hpp"

namespace vimu {

inline constexpr int kNoParent = -1;

/// Joint tree with rest-pose bone offsets (metres, parent frame).
struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<int> parent_index;   // kNoParent for the root
    std::vector<Vec3> rest_offset;
    std::size_t root_index = 0;

    std::size_t size() const { return joint_names.size(); }
    std::optional<std::size_t> find(std::string_view name) const;
    std::vector<std::vector<std::size_t>> children() const;
    /// World positions of the rest pose with the root at its rest offset.
    std::vector<Vec3> rest_positions() const;
    /// Joints ordered so that every parent precedes its children.
    std::vector<std::size_t> topological_order() const;

    /// Throws InvalidArgument unless the tree is single-rooted, acyclic and
    /// every non-root offset has nonzero length.
    void validate() const;
};

/// Frames x joints world positions at a fixed frame rate.
struct MotionSequence {
    double frame_rate = 0.0;
    std::size_t joint_count = 0;
    std::vector<Vec3> positions;  // frame-major: positions[f * joint_count + j]
    std::optional<std::string> activity_label;
    std::optional<std::string> subject_id;
    Provenance provenance = Provenance::real;

    std::size_t frames() const { return joint_count == 0 ? 0 : positions.size() / joint_count; }
    const Vec3& at(std::size_t frame, std::size_t joint) const { return positions[frame * joint_count + joint]; }
    Vec3& at(std::size_t frame, std::size_t joint) { return positions[frame * joint_count + joint]; }

    void validate() const;
    void validate_against(const Skeleton& skeleton) const;
};

/// BVH channel kinds within the supported subset.
enum class Channel : std::uint8_t { x_position, y_position, z_position, x_rotation, y_rotation, z_rotation };

/// Native BVH representation: root translation plus per-joint Euler angles.
struct ChannelPose {
    double frame_rate = 0.0;
    std::size_t joint_count = 0;
    std::vector<RotationOrder> rotation_order;  // per joint
    std::vector<Vec3> root_translation;         // per frame, world metres
    std::vector<Vec3> euler_deg;                // frame-major, per joint, in rotation_order axis order

    std::size_t frames() const { return root_translation.size(); }
    const Vec3& angles(std::size_t frame, std::size_t joint) const { return euler_deg[frame * joint_count + joint]; }
};

struct BvhOptions {
    double length_scale = 1.0;  // multiplies OFFSET and position channels
    bool include_end_sites = true;
};

struct BvhFile {
    Skeleton skeleton;
    ChannelPose pose;
    std::vector<std::vector<Channel>> channels;  // declared channels per joint
};

/// Parses the BVH subset (single ROOT, JOINT/End Site, OFFSET, CHANNELS with
/// position/rotation tokens, MOTION block). End sites become channel-less joints
/// named "<parent>_end". Errors carry 1-based line numbers.
BvhFile parse_bvh(std::string_view text, const BvhOptions& options = {}, std::string_view source = "<bvh>");

/// Column map for joint-trajectory CSV files.
struct JointCsvSpec {
    std::vector<std::string> joints;       // output joint order
    std::optional<double> frame_rate;      // overrides the "# frame_rate=" comment
    double length_scale = 1.0;
};

MotionSequence parse_joint_csv(std::string_view text, const JointCsvSpec& spec, std::string_view source = "<csv>");
std::string write_joint_csv(const MotionSequence& motion, const std::vector<std::string>& joint_names);

MotionSequence forward_kinematics(const Skeleton& skeleton, const ChannelPose& pose);

/// Serialises a skeleton and pose as BVH, lengths divided by `length_unit`.
/// Every joint keeps its channels; leaves get a short End Site so the file
/// reads back with include_end_sites=false as the same skeleton.
std::string write_bvh(const Skeleton& skeleton, const ChannelPose& pose, double length_unit = 1.0);

/// World up-axis of ingested data; everything downstream is z-up.
enum class UpAxis { y, z };
UpAxis up_axis_from_string(std::string_view s);

/// Rotates y-up data into the z-up world frame (x, y, z) -> (x, -z, y).
void to_z_up(Skeleton& skeleton, UpAxis up);
void to_z_up(MotionSequence& motion, UpAxis up);

/// The 22-joint body skeleton (pelvis root, z-up, metres) used for
/// text-to-motion output. Joint names are lower_snake_case.
Skeleton body22_skeleton();

}  // namespace vimu
