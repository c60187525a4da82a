#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vimu/dataset.hpp"
#include "vimu/kinematics.hpp"
#include "vimu/motion_io.hpp"

namespace vimu {

struct SensorConfig {
    std::size_t joint_index = 0;
    Vec3 gravity{0.0, 0.0, -9.81};
    double accel_noise_std = 0.05;  // m/s^2
    double gyro_noise_std = 0.01;   // rad/s
    double accel_bias_range = 0.0;  // half-width of the uniform per-axis bias
    double gyro_bias_range = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Tri-axial accelerometer (specific force, m/s^2) and gyroscope (rad/s)
/// samples in the sensor frame.
struct ImuTrace {
    double sample_rate = 0.0;
    std::vector<Vec3> accel;
    std::vector<Vec3> gyro;
    std::size_t joint_index = 0;
    std::optional<std::string> activity_label;
    std::optional<std::string> subject_id;
    Provenance provenance = Provenance::real;

    std::size_t samples() const { return accel.size(); }
    void validate() const;
};

/// World-frame acceleration of one joint by central second differences;
/// the two endpoints copy their interior neighbour. Needs >= 3 frames.
std::vector<Vec3> linear_acceleration(const MotionSequence& motion, std::size_t joint);

/// Sensor rigidly attached at the joint centre, oriented with the joint's
/// global rotation: accel = R^-1 (a - g), gyro = body-frame angular velocity,
/// then a constant uniform bias and white Gaussian noise per axis drawn from
/// a generator seeded with `config.seed`.
ImuTrace simulate_imu(const MotionSequence& motion, const RotationTrack& rotations, const SensorConfig& config);

/// Linear interpolation onto t = k / target_rate, k = 0.. while t <= duration.
ImuTrace resample_trace(const ImuTrace& trace, double target_rate);

/// Same interpolation for a Recording's channels; labels take the nearest
/// source sample (earlier one on ties).
Recording resample_recording(const Recording& rec, double target_rate);

/// Settings shared by every trace of a synthesis run.
struct SynthParams {
    std::vector<std::string> placements;  // joint names, one sensor each
    Vec3 gravity{0.0, 0.0, -9.81};
    double accel_noise_std = 0.05;
    double gyro_noise_std = 0.01;
    double accel_bias_range = 0.0;
    double gyro_bias_range = 0.0;
    double output_rate = 20.0;
    std::uint64_t seed = 0;
    IkOptions ik;
};

struct SynthJob {
    const Skeleton* skeleton = nullptr;
    MotionSequence motion;
    std::string source_id;  // keys the noise substreams
};

struct SynthOutcome {
    std::optional<Recording> recording;
    std::vector<ImuTrace> traces;  // one per placement, at output_rate
    std::vector<IkDiagnostic> diagnostics;
    std::string error;             // non-empty when the job failed
};

/// IK + simulation + resampling for one motion. Channels follow
/// imu_layout(placements). Throws on invalid input.
SynthOutcome synthesize(const SynthJob& job, const SynthParams& params);

/// Runs every job, isolating failures per job. OpenMP-parallel over jobs;
/// results are identical to synthesize_batch_serial for any thread count.
std::vector<SynthOutcome> synthesize_batch(const std::vector<SynthJob>& jobs, const SynthParams& params);
std::vector<SynthOutcome> synthesize_batch_serial(const std::vector<SynthJob>& jobs, const SynthParams& params);

}  // namespace vimu
