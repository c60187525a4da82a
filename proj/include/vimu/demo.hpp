#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vimu/kinematics.hpp"
#include "vimu/motion_io.hpp"
#include "vimu/rng.hpp"

namespace vimu {

/// Procedural activities on body22_skeleton(). `idle` is the unlabeled
/// filler between real segments; `squat` only ever appears in virtual data.
enum class DemoActivity { walking, jogging, clapping, boxing, squat, idle };

std::string_view to_string(DemoActivity a);

/// Per-instance style knobs. Angles in degrees.
struct MotionStyle {
    double cycle_hz = 1.0;
    double amplitude = 1.0;   // multiplies every oscillation amplitude
    double speed = 0.0;       // m/s along the heading
    double heading = 0.0;     // rad about +z
    double phase = 0.0;       // rad
    double lean_deg = 0.0;
    double elbow_deg = 0.0;   // carried elbow flexion
    double arm_abduction_deg = 80.0;
    double wobble_deg = 0.0;  // slow per-joint drift
};

/// Draws a style around the activity's nominal values. `spread` scales the
/// ranges (0 gives the nominal style).
MotionStyle sample_style(DemoActivity a, double spread, Rng& rng);

struct PoseClip {
    double frame_rate = 0.0;
    RotationTrack track;         // local and global rotations
    std::vector<Vec3> root;      // pelvis position per frame
    MotionSequence positions;    // forward kinematics of the above
};

/// Evaluates the activity on the skeleton for `seconds` at `frame_rate`.
/// `rng` seeds the slow wobble axes and phases only.
PoseClip generate_activity(const Skeleton& skeleton, DemoActivity a, const MotionStyle& style, double seconds,
                           double frame_rate, Rng& rng);

struct DemoParams {
    std::uint64_t seed = 2024;
    std::size_t subjects = 4;
    double real_rate = 50.0;
    double real_seconds = 36.0;       // per activity and subject
    std::size_t text_per_class = 16;  // text-to-motion style clips
    std::size_t video_per_class = 10; // video-derived style clips
    std::vector<std::string> placements{"right_wrist", "right_ankle"};
    std::size_t n_trees = 40;
};

/// Writes a complete small task below `dir`: real/ recordings with their
/// adapter, motions/text/<label>/*.csv, motions/video/<label>/*.bvh and
/// config.json. Returns the config path. Output is a pure function of params.
std::filesystem::path write_demo_task(const std::filesystem::path& dir, const DemoParams& params = {});

}  // namespace vimu
